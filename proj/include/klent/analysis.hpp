#pragma once

#include <optional>
#include <string>
#include <vector>

#include "klent/rng.hpp"
#include "klent/search.hpp"

namespace klent::analysis {

// ---------------------------------------------------------------------------
// exact count-up solvers
// ---------------------------------------------------------------------------

// Backward-induction solution. Positions 0..N-1; action index a means
// adding a+1. Values are from the perspective of the player to move.
struct CountUpSolution {
  int target = 0;
  int max_increment = 0;
  std::vector<int> value;                       // per position, +1 or -1
  std::vector<std::vector<int>> q;              // per position, per action
  std::vector<std::vector<int>> optimal_actions;  // ascending action indices

  bool is_optimal(int position, int action) const;
};

CountUpSolution solve_countup_optimal(int target, int max_increment);

// Quantal response equilibrium at temperature alpha: at every position the
// policy is the softmax of its own action values, and action values satisfy
// the negamax recursion under that policy. Solved exactly backwards.
struct QrePolicy {
  int target = 0;
  int max_increment = 0;
  double alpha = 0.0;
  std::vector<std::vector<double>> policy;  // per position, per action
  std::vector<std::vector<double>> q;
  std::vector<double> value;                // E_{a~policy} q

  // max over (position, action) of |policy - softmax(q/alpha)|
  double fixed_point_residual() const;
};

QrePolicy solve_countup_qre(int target, int max_increment, double alpha);

// ---------------------------------------------------------------------------
// agents and match harness
// ---------------------------------------------------------------------------

struct Agent {
  virtual ~Agent() = default;
  virtual int act(const games::GameState& state, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

struct RandomAgent final : Agent {
  int act(const games::GameState& state, Rng& rng) override;
  std::string name() const override { return "random"; }
};

// Greedy argmax of the policy head; `simulations` > 0 turns on PUCT.
struct PolicyAgent final : Agent {
  const approx::Parameters* params;
  regopt::RegWeights reg;
  search::SearchConfig search_cfg;

  PolicyAgent(const approx::Parameters& p, regopt::RegWeights w, search::SearchConfig cfg = {})
      : params(&p), reg(w), search_cfg(cfg) {}
  int act(const games::GameState& state, Rng& rng) override;
  std::string name() const override;
};

// Plays a lowest-index optimal action from the exact solution.
struct OptimalCountUpAgent final : Agent {
  CountUpSolution solution;

  explicit OptimalCountUpAgent(CountUpSolution s) : solution(std::move(s)) {}
  int act(const games::GameState& state, Rng& rng) override;
  std::string name() const override { return "optimal-countup"; }
};

struct GameRecord {
  uint64_t seed = 0;
  bool a_moved_first = false;
  std::vector<int> actions;
  int result_for_a = 0;  // +1 win, 0 draw, -1 loss
};

struct MatchResult {
  int wins = 0, losses = 0, draws = 0;  // from agent a's perspective
  std::vector<GameRecord> games;

  int total() const { return wins + losses + draws; }
  double winrate() const {  // draws count half
    return (wins + 0.5 * draws) / static_cast<double>(total());
  }
};

// Plays `games` games with the first-mover role alternating every game.
// Game g runs on its own RNG stream derived from (seed, g) and is recorded
// for replay.
MatchResult play_match(Agent& agent_a, Agent& agent_b, const games::GameSpec& spec, int games,
                       uint64_t seed);

// R = 400 * log10(w / (1 - w)) + r0; throws for w in {0, 1} (unbounded).
double elo_from_winrate(double winrate, double anchor_rating);

// ---------------------------------------------------------------------------
// lambda-return bias/variance measurement
// ---------------------------------------------------------------------------

struct EvalPoint {
  games::GameState state;
  int action = 0;
};

struct BiasVarianceCell {
  double lambda = 0.0;
  double bias_squared = 0.0;
  double variance = 0.0;  // population convention, so mse = bias^2 + variance per point
  double mse = 0.0;
  double stderr_mse = 0.0;
  double stderr_bias = 0.0;
};

struct BiasVarianceReport {
  std::vector<BiasVarianceCell> cells;  // one per lambda, grid order
  int eval_points = 0;
  int rollouts_per_point = 0;
  int oracle_rollouts = 0;

  std::string to_csv() const;  // lambda,bias_squared,variance,mse,stderr
};

// The first `count` (state, action) pairs of one on-policy rollout from the
// initial state under the frozen parameters.
std::vector<EvalPoint> default_eval_points(const games::GameSpec& spec,
                                           const approx::Parameters& params,
                                           const Hyperparameters& hp, int count, uint64_t seed);

// For each evaluation pair, the ground-truth surrogate is the mean of
// `oracle_rollouts` Monte Carlo returns; each lambda's bias/variance/mse is
// then estimated from `rollouts_per_point` fresh rollouts under the same
// frozen improved policy.
BiasVarianceReport bias_variance(const games::GameSpec& spec, const approx::Parameters& params,
                                 const Hyperparameters& hp,
                                 const std::vector<double>& lambda_grid,
                                 const std::vector<EvalPoint>& eval_points, int rollouts_per_point,
                                 int oracle_rollouts, uint64_t seed);

// ---------------------------------------------------------------------------
// legal-action statistics
// ---------------------------------------------------------------------------

struct LegalActionStats {
  double mean = 0.0;
  int max = 0;
  uint64_t states_visited = 0;
};

LegalActionStats legal_action_stats(const games::GameSpec& spec, int games, uint64_t seed,
                                    Agent& policy);

}  // namespace klent::analysis
