#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "klent/games.hpp"
#include "klent/rng.hpp"

using namespace klent;
using games::GameKind;
using games::GameSpec;
using games::GameState;

namespace {

GameState countup_at(const GameSpec& spec, const std::vector<int>& increments) {
  GameState s = games::reset(spec);
  for (int inc : increments) s = games::step(s, inc - 1).first;
  return s;
}

// Independent hex connectivity check used as an oracle against the engine.
bool hex_side_connected(const std::vector<int8_t>& cells, int n, int player) {
  const int8_t stone = static_cast<int8_t>(player + 1);
  std::vector<int> stack;
  std::vector<uint8_t> seen(cells.size(), 0);
  for (int i = 0; i < n; ++i) {
    const int start = player == 0 ? i : i * n;
    if (cells[static_cast<size_t>(start)] == stone && !seen[static_cast<size_t>(start)]) {
      seen[static_cast<size_t>(start)] = 1;
      stack.push_back(start);
    }
  }
  const int dr[6] = {-1, -1, 0, 0, 1, 1};
  const int dc[6] = {0, 1, -1, 1, -1, 0};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    const int r = cur / n, c = cur % n;
    if ((player == 0 && r == n - 1) || (player == 1 && c == n - 1)) return true;
    for (int d = 0; d < 6; ++d) {
      const int nr = r + dr[d], nc = c + dc[d];
      if (nr < 0 || nr >= n || nc < 0 || nc >= n) continue;
      const int idx = nr * n + nc;
      if (!seen[static_cast<size_t>(idx)] && cells[static_cast<size_t>(idx)] == stone) {
        seen[static_cast<size_t>(idx)] = 1;
        stack.push_back(idx);
      }
    }
  }
  return false;
}

struct Playout {
  GameState final_state;
  std::vector<int> actions;
  int plies = 0;
  int last_mover = -1;
};

Playout random_playout(const GameSpec& spec, Rng& rng) {
  Playout p;
  GameState s = games::reset(spec);
  while (!s.terminal) {
    const auto mask = games::legal_actions(s);
    const int action = mask.legal[static_cast<size_t>(rng.uniform_int(mask.count()))];
    p.actions.push_back(action);
    p.last_mover = s.to_move;
    s = games::step(s, action).first;
    ++p.plies;
  }
  p.final_state = std::move(s);
  return p;
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS(GameSpec::hex(1));
  CHECK_THROWS(GameSpec::othello(5));
  CHECK_THROWS(GameSpec::othello(2));
  CHECK_THROWS(GameSpec::countup(0, 2));
  CHECK_THROWS(GameSpec::countup(7, 0));
  CHECK(GameSpec::hex(2).action_count() == 4);
  CHECK(GameSpec::othello(4).action_count() == 17);
  CHECK(GameSpec::countup(7, 2).action_count() == 2);
}

TEST_CASE("count-up reset and stepping") {
  const auto spec = GameSpec::countup(7, 2);
  const auto s0 = games::reset(spec);
  CHECK(s0.counter == 0);
  CHECK(s0.to_move == 0);
  CHECK_FALSE(s0.terminal);
  CHECK(games::legal_actions(s0).legal == std::vector<int>{0, 1});

  SUBCASE("non-terminal step") {
    const auto [s1, r] = games::step(s0, 0);
    CHECK(r == 0);
    CHECK(s1.counter == 1);
    CHECK(s1.to_move == 1);
    CHECK_FALSE(s1.terminal);
  }
  SUBCASE("winning step from position 5") {
    const auto s5 = countup_at(spec, {2, 2, 1});
    CHECK(s5.counter == 5);
    const auto [st, r] = games::step(s5, 1);  // +2 reaches 7
    CHECK(r == 1);
    CHECK(st.terminal);
    CHECK(st.outcome == 1);
  }
  SUBCASE("both actions stay legal near the target") {
    const auto s6 = countup_at(spec, {2, 2, 2});
    CHECK(s6.counter == 6);
    CHECK(games::legal_actions(s6).count() == 2);
  }
}

TEST_CASE("hex reset, win detection, no draws") {
  const auto spec = GameSpec::hex(3);
  const auto s0 = games::reset(spec);
  CHECK(std::count(s0.cells.begin(), s0.cells.end(), 0) == 9);
  CHECK(games::legal_actions(s0).count() == 9);

  SUBCASE("five-move top-bottom chain wins for the first player") {
    GameState s = s0;
    int reward = 0;
    for (int a : {0, 1, 3, 4}) s = games::step(s, a).first;
    CHECK_FALSE(s.terminal);
    std::tie(s, reward) = games::step(s, 6);  // a1, a2, a3 complete the chain
    CHECK(reward == 1);
    CHECK(s.terminal);
    CHECK(s.outcome == 1);
  }
  SUBCASE("random playouts always produce exactly one connected winner") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      const auto p = random_playout(spec, rng);
      CHECK(p.plies <= 9);
      CHECK(p.final_state.outcome == 1);  // connecting move wins on the spot
      CHECK(hex_side_connected(p.final_state.cells, 3, p.last_mover));
      CHECK_FALSE(hex_side_connected(p.final_state.cells, 3, 1 - p.last_mover));
    }
  }
  SUBCASE("full boards have exactly one winner") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      for (int n : {3, 4}) {
        std::vector<int8_t> cells(static_cast<size_t>(n) * n);
        for (size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int8_t>(i % 2 + 1);
        rng.shuffle(cells);
        const bool p0 = hex_side_connected(cells, n, 0);
        const bool p1 = hex_side_connected(cells, n, 1);
        CHECK(p0 != p1);
      }
    }
  }
}

TEST_CASE("othello reset and rules") {
  const auto spec = GameSpec::othello(4);
  const auto s0 = games::reset(spec);
  CHECK(std::count(s0.cells.begin(), s0.cells.end(), 0) == 12);

  SUBCASE("initial placements") {
    const auto mask = games::legal_actions(s0);
    CHECK(mask.legal == std::vector<int>{1, 4, 11, 14});
  }
  SUBCASE("a placement flips the bracketed stone") {
    const auto [s1, r] = games::step(s0, 1);  // b1 flips b2
    CHECK(r == 0);
    CHECK(s1.cells[1] == 1);
    CHECK(s1.cells[5] == 1);
    CHECK(s1.to_move == 1);
  }
  SUBCASE("pass is legal exactly when no placement flips") {
    Rng rng(3);
    int passes_seen = 0;
    for (int trial = 0; trial < 300; ++trial) {
      GameState s = s0;
      while (!s.terminal) {
        const auto mask = games::legal_actions(s);
        if (mask.is_legal(16)) {
          CHECK(mask.count() == 1);  // pass only when stuck
          ++passes_seen;
        }
        s = games::step(s, mask.legal[static_cast<size_t>(rng.uniform_int(mask.count()))]).first;
      }
    }
    CHECK(passes_seen > 0);
  }
  SUBCASE("outcome matches an independent stone count") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      const auto p = random_playout(spec, rng);
      const auto& cells = p.final_state.cells;
      const int mover_stone = p.last_mover + 1;
      const int mine = static_cast<int>(std::count(cells.begin(), cells.end(), mover_stone));
      const int theirs = static_cast<int>(std::count(cells.begin(), cells.end(), 3 - mover_stone));
      const int expected = mine > theirs ? 1 : (mine < theirs ? -1 : 0);
      CHECK(p.final_state.outcome == expected);
      CHECK(p.plies <= spec.default_max_ply());
    }
  }
}

TEST_CASE("episode finiteness") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    CHECK(random_playout(GameSpec::countup(7, 2), rng).plies <= 7);
    CHECK(random_playout(GameSpec::hex(4), rng).plies <= 16);
    CHECK(random_playout(GameSpec::othello(4), rng).plies <= 3 * 16);
  }
}

TEST_CASE("step is pure: replay reproduces the terminal state") {
  Rng rng(17);
  for (const auto& spec : {GameSpec::countup(9, 3), GameSpec::hex(3), GameSpec::othello(4)}) {
    const auto p = random_playout(spec, rng);
    GameState s = games::reset(spec);
    for (int a : p.actions) s = games::step(s, a).first;
    CHECK(s == p.final_state);
    CHECK(games::state_key(s) == games::state_key(p.final_state));
  }
}

TEST_CASE("encode") {
  SUBCASE("countup one-hot plus to-move bit") {
    const auto spec = GameSpec::countup(7, 2);
    const auto s = countup_at(spec, {2, 1});  // position 3, player 0 to move
    const auto f = games::encode(s);
    REQUIRE(f.size() == 8);
    CHECK(f[3] == 1.0);
    CHECK(f[7] == 1.0);
    int nonzero = 0;
    for (double v : f) nonzero += v != 0.0;
    CHECK(nonzero == 2);
  }
  SUBCASE("hex empty board") {
    const auto f = games::encode(games::reset(GameSpec::hex(3)));
    REQUIRE(f.size() == 27);
    for (size_t i = 0; i < 18; ++i) CHECK(f[i] == 0.0);
    for (size_t i = 18; i < 27; ++i) CHECK(f[i] == 1.0);
  }
  SUBCASE("othello initial has four stone entries") {
    const auto f = games::encode(games::reset(GameSpec::othello(4)));
    int stones = 0;
    for (size_t i = 0; i < 32; ++i) stones += f[i] != 0.0;
    CHECK(stones == 4);
  }
}

TEST_CASE("state keys are injective over reachable states") {
  SUBCASE("countup positions all distinct") {
    const auto spec = GameSpec::countup(7, 2);
    std::set<std::string> keys;
    GameState s = games::reset(spec);
    keys.insert(games::state_key(s));
    while (!s.terminal) {
      s = games::step(s, 0).first;
      keys.insert(games::state_key(s));
    }
    CHECK(keys.size() == 8);
  }
  SUBCASE("to-move changes the key") {
    auto a = games::reset(GameSpec::hex(3));
    auto b = a;
    b.to_move = 1;
    CHECK(games::state_key(a) != games::state_key(b));
    CHECK(games::state_key(a) == games::state_key(a));
  }
  SUBCASE("random playout states of one game are all distinct") {
    Rng rng(19);
    for (const auto& spec : {GameSpec::hex(3), GameSpec::othello(4)}) {
      std::set<std::string> keys;
      size_t states = 0;
      GameState s = games::reset(spec);
      keys.insert(games::state_key(s));
      ++states;
      while (!s.terminal) {
        const auto mask = games::legal_actions(s);
        s = games::step(s, mask.legal[static_cast<size_t>(rng.uniform_int(mask.count()))]).first;
        keys.insert(games::state_key(s));
        ++states;
      }
      CHECK(keys.size() == states);
    }
  }
}

TEST_CASE("error paths") {
  const auto spec = GameSpec::countup(2, 2);
  auto [s, r] = games::step(games::reset(spec), 1);
  REQUIRE(s.terminal);
  CHECK(r == 1);
  CHECK_THROWS(games::legal_actions(s));
  CHECK_THROWS(games::step(s, 0));
  const auto hex0 = games::reset(games::GameSpec::hex(3));
  const auto occupied = games::step(hex0, 4).first;
  CHECK_THROWS_AS(static_cast<void>(games::step(occupied, 4)), std::invalid_argument);
}

TEST_CASE("action names parse back") {
  for (const auto& spec : {GameSpec::countup(7, 2), GameSpec::hex(3), GameSpec::othello(4)}) {
    for (int a = 0; a < spec.action_count(); ++a) {
      CHECK(games::parse_action(spec, games::action_name(spec, a)) == a);
    }
    CHECK(games::parse_action(spec, "garbage!") == -1);
  }
}

TEST_CASE("legal mask sparse list agrees with bits") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    GameState s = games::reset(GameSpec::othello(4));
    while (!s.terminal) {
      const auto mask = games::legal_actions(s);
      int popcount = 0;
      for (size_t a = 0; a < mask.bits.size(); ++a) {
        popcount += mask.bits[a] != 0;
        CHECK(mask.is_legal(static_cast<int>(a)) == (mask.bits[a] != 0));
      }
      CHECK(popcount == mask.count());
      CHECK(popcount >= 1);
      s = games::step(s, mask.legal[static_cast<size_t>(rng.uniform_int(mask.count()))]).first;
    }
  }
}
