#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "countup_helpers.hpp"
#include "klent/analysis.hpp"

using namespace klent;
using games::GameSpec;

namespace {

// All seven rows of the exact 7,2 solution.
void check_72_solution(const analysis::CountUpSolution& sol) {
  using row = std::pair<int, std::vector<int>>;  // value, optimal action indices
  const std::vector<row> expected = {
      {1, {0}},     // state 0: win with +1
      {-1, {0, 1}}, // state 1: lose anyway
      {1, {1}},     // state 2: win with +2
      {1, {0}},     // state 3: win with +1
      {-1, {0, 1}}, // state 4: lose anyway
      {1, {1}},     // state 5: win with +2
      {1, {0, 1}},  // state 6: win with either
  };
  for (int s = 0; s < 7; ++s) {
    CHECK(sol.value[static_cast<size_t>(s)] == expected[static_cast<size_t>(s)].first);
    CHECK(sol.optimal_actions[static_cast<size_t>(s)] == expected[static_cast<size_t>(s)].second);
  }
}

struct IllegalAgent final : analysis::Agent {
  int act(const games::GameState&, Rng&) override { return 999; }
  std::string name() const override { return "illegal"; }
};

}  // namespace

TEST_CASE("count-up optimal solution") {
  SUBCASE("reproduces the 7,2 table") { check_72_solution(analysis::solve_countup_optimal(7, 2)); }
  SUBCASE("one-ply win at 2,2") {
    const auto sol = analysis::solve_countup_optimal(2, 2);
    CHECK(sol.is_optimal(0, 1));
    CHECK_FALSE(sol.is_optimal(0, 0));  // +1 hands the opponent the win
  }
  SUBCASE("n <= k wins immediately with any large-enough increment") {
    const auto sol = analysis::solve_countup_optimal(3, 5);
    CHECK(sol.value[0] == 1);
    CHECK(sol.optimal_actions[0] == std::vector<int>{2, 3, 4});
  }
  SUBCASE("negamax recursion holds everywhere") {
    const auto sol = analysis::solve_countup_optimal(11, 3);
    for (int s = 0; s < 11; ++s) {
      for (int a = 0; a < 3; ++a) {
        const int next = s + a + 1;
        const int expected = next >= 11 ? 1 : -sol.value[static_cast<size_t>(next)];
        CHECK(sol.q[static_cast<size_t>(s)][static_cast<size_t>(a)] == expected);
      }
    }
  }
}

TEST_CASE("count-up quantal response equilibrium") {
  SUBCASE("fixed-point residual is tiny") {
    for (double alpha : {0.03, 1.0}) {
      CHECK(analysis::solve_countup_qre(7, 2, alpha).fixed_point_residual() <= 1e-12);
    }
    CHECK(analysis::solve_countup_qre(9, 3, 0.5).fixed_point_residual() <= 1e-12);
  }
  SUBCASE("q values satisfy the negamax Bellman recursion under the policy") {
    const auto qre = analysis::solve_countup_qre(7, 2, 0.7);
    for (int s = 0; s < 7; ++s) {
      for (int a = 0; a < 2; ++a) {
        const int next = s + a + 1;
        double expected = 1.0;
        if (next < 7) {
          expected = 0.0;
          for (int b = 0; b < 2; ++b) {
            expected -= qre.policy[static_cast<size_t>(next)][static_cast<size_t>(b)] *
                        qre.q[static_cast<size_t>(next)][static_cast<size_t>(b)];
          }
        }
        CHECK(qre.q[static_cast<size_t>(s)][static_cast<size_t>(a)] ==
              doctest::Approx(expected).epsilon(1e-14));
      }
    }
  }
  SUBCASE("zero-temperature limit recovers an optimal action") {
    const auto sol = analysis::solve_countup_optimal(7, 2);
    const auto qre = analysis::solve_countup_qre(7, 2, 1e-6);
    for (int s = 0; s < 7; ++s) {
      const auto& pi = qre.policy[static_cast<size_t>(s)];
      const int argmax = pi[0] >= pi[1] ? 0 : 1;
      CHECK(sol.is_optimal(s, argmax));
    }
  }
  SUBCASE("alpha 0.03 is nearly deterministic at winnable states") {
    const auto sol = analysis::solve_countup_optimal(7, 2);
    const auto qre = analysis::solve_countup_qre(7, 2, 0.03);
    for (int s : {0, 2, 3, 5, 6}) {
      double optimal_mass = 0.0;
      for (int a : sol.optimal_actions[static_cast<size_t>(s)]) {
        optimal_mass += qre.policy[static_cast<size_t>(s)][static_cast<size_t>(a)];
      }
      CHECK(optimal_mass >= 0.99);
    }
  }
  SUBCASE("alpha 1.0 is interior everywhere") {
    const auto qre = analysis::solve_countup_qre(7, 2, 1.0);
    for (const auto& pi : qre.policy) {
      for (double p : pi) {
        CHECK(p > 0.01);
        CHECK(p < 0.99);
      }
    }
  }
  SUBCASE("bad temperature throws") { CHECK_THROWS(analysis::solve_countup_qre(7, 2, 0.0)); }
}

TEST_CASE("elo conversion") {
  CHECK(analysis::elo_from_winrate(0.5, 1000.0) == 1000.0);
  CHECK(analysis::elo_from_winrate(0.75, 1000.0) == doctest::Approx(1190.8485).epsilon(1e-6));
  SUBCASE("symmetric about the anchor") {
    for (double w : {0.6, 0.75, 0.9, 0.99}) {
      CHECK(analysis::elo_from_winrate(w, 1000.0) + analysis::elo_from_winrate(1.0 - w, 1000.0) ==
            doctest::Approx(2000.0).epsilon(1e-9));
    }
  }
  SUBCASE("strictly increasing") {
    double prev = -1e18;
    for (double w = 0.05; w < 1.0; w += 0.05) {
      const double r = analysis::elo_from_winrate(w, 1000.0);
      CHECK(r > prev);
      prev = r;
    }
  }
  SUBCASE("boundaries are unbounded") {
    CHECK_THROWS(analysis::elo_from_winrate(0.0, 1000.0));
    CHECK_THROWS(analysis::elo_from_winrate(1.0, 1000.0));
  }
}

TEST_CASE("play_match") {
  const auto spec = GameSpec::countup(7, 2);
  const auto sol = analysis::solve_countup_optimal(7, 2);

  SUBCASE("optimal agent never loses a first-player game") {
    analysis::OptimalCountUpAgent optimal(sol);
    analysis::RandomAgent random;
    const auto result = analysis::play_match(optimal, random, spec, 50, 3);
    for (const auto& game : result.games) {
      if (game.a_moved_first) CHECK(game.result_for_a == 1);
    }
    CHECK(result.winrate() > 0.5);
  }
  SUBCASE("exhaustive opponent enumeration: first player forced win") {
    analysis::OptimalCountUpAgent optimal(sol);
    Rng rng(1);
    // depth-first over every opponent reply; the optimal agent moves first
    std::function<void(games::GameState)> explore = [&](games::GameState s) {
      const int move = optimal.act(s, rng);
      auto [after, reward] = games::step(s, move);
      if (after.terminal) {
        CHECK(reward == 1);  // the optimal agent made the final move
        return;
      }
      for (int reply : games::legal_actions(after).legal) {
        auto [next, opp_reward] = games::step(after, reply);
        if (next.terminal) {
          CHECK(opp_reward == -1);  // opponent can never win the game outright
        } else {
          explore(next);
        }
      }
    };
    explore(games::reset(spec));
  }
  SUBCASE("deterministic agents repeat transcripts per color pairing") {
    const auto params = countup_helpers::exact_countup_params(spec, sol);
    analysis::PolicyAgent greedy_a(params, {0.03, 0.1});
    analysis::PolicyAgent greedy_b(params, {0.03, 0.1});
    const auto result = analysis::play_match(greedy_a, greedy_b, spec, 8, 5);
    REQUIRE(result.total() == 8);
    for (int g = 2; g < 8; ++g) {
      CHECK(result.games[static_cast<size_t>(g)].actions ==
            result.games[static_cast<size_t>(g % 2)].actions);
    }
  }
  SUBCASE("recorded games replay to the reported result") {
    analysis::RandomAgent a, b;
    const auto result = analysis::play_match(a, b, GameSpec::othello(4), 20, 11);
    CHECK(result.wins + result.losses + result.draws == 20);
    for (const auto& game : result.games) {
      games::GameState s = games::reset(GameSpec::othello(4));
      int last_mover = -1;
      for (int action : game.actions) {
        last_mover = s.to_move;
        s = games::step(s, action).first;
      }
      REQUIRE(s.terminal);
      const bool a_last = (last_mover == 0) == game.a_moved_first;
      CHECK((a_last ? s.outcome : -s.outcome) == game.result_for_a);
    }
  }
  SUBCASE("illegal agent action fails hard with a transcript") {
    IllegalAgent bad;
    analysis::RandomAgent random;
    CHECK_THROWS_WITH_AS(
        static_cast<void>(analysis::play_match(bad, random, spec, 2, 1)),
        doctest::Contains("illegal action"), std::runtime_error);
  }
}

TEST_CASE("bias and variance of lambda-returns") {
  const auto spec = GameSpec::countup(7, 2);
  const auto sol = analysis::solve_countup_optimal(7, 2);
  Hyperparameters hp;

  SUBCASE("deterministic policy and environment have zero variance") {
    const auto params = countup_helpers::exact_countup_params(spec, sol, 2000.0);
    const std::vector<analysis::EvalPoint> points = {{games::reset(spec), 0}};
    const auto report =
        analysis::bias_variance(spec, params, hp, {0.0, 0.5, 1.0}, points, 50, 50, 17);
    for (const auto& cell : report.cells) {
      CHECK(cell.variance == 0.0);
      CHECK(cell.mse == doctest::Approx(cell.bias_squared).epsilon(1e-12));
    }
  }
  SUBCASE("monte carlo lambda has statistically zero bias") {
    auto params = approx::make_tabular(spec.action_count(), spec.feature_count());
    const std::vector<analysis::EvalPoint> points = {{games::reset(spec), 1}};
    const auto report = analysis::bias_variance(spec, params, hp, {1.0}, points, 800, 800, 19);
    const auto& cell = report.cells.front();
    CHECK(std::sqrt(cell.bias_squared) <= 3.0 * cell.stderr_bias);
  }
  SUBCASE("mse decomposes into bias^2 + variance per cell") {
    auto params = approx::make_tabular(spec.action_count(), spec.feature_count());
    const auto points = analysis::default_eval_points(spec, params, hp, 3, 21);
    REQUIRE(points.size() == 3);
    const auto report = analysis::bias_variance(spec, params, hp, {0.0, 0.5, 1.0}, points, 200, 200, 23);
    for (const auto& cell : report.cells) {
      CHECK(std::abs(cell.mse - (cell.bias_squared + cell.variance)) <=
            std::max(3.0 * cell.stderr_mse, 1e-12));
    }
  }
  SUBCASE("csv has the documented shape") {
    auto params = approx::make_tabular(spec.action_count(), spec.feature_count());
    const std::vector<analysis::EvalPoint> points = {{games::reset(spec), 0}};
    const auto report = analysis::bias_variance(spec, params, hp, {0.0, 1.0}, points, 10, 10, 29);
    const auto csv = report.to_csv();
    CHECK(csv.rfind("lambda,bias_squared,variance,mse,stderr\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
  SUBCASE("insufficient rollouts are rejected") {
    auto params = approx::make_tabular(spec.action_count(), spec.feature_count());
    const std::vector<analysis::EvalPoint> points = {{games::reset(spec), 0}};
    CHECK_THROWS(analysis::bias_variance(spec, params, hp, {1.0}, points, 1, 10, 1));
  }
}

TEST_CASE("legal action statistics") {
  analysis::RandomAgent random;
  SUBCASE("count-up max equals the action space") {
    const auto stats = analysis::legal_action_stats(GameSpec::countup(7, 2), 50, 1, random);
    CHECK(stats.max == 2);
    CHECK(stats.mean == 2.0);
  }
  SUBCASE("hex max is the empty board") {
    const auto stats = analysis::legal_action_stats(GameSpec::hex(3), 50, 2, random);
    CHECK(stats.max == 9);
    CHECK(stats.mean < 9.0);
  }
  SUBCASE("othello legal actions are sparse") {
    const auto stats = analysis::legal_action_stats(GameSpec::othello(4), 100, 3, random);
    CHECK(stats.max <= 12);
    CHECK(stats.mean < 9.0);  // far below the 17-slot action space
    CHECK(stats.mean >= 1.0);
  }
}
