#include "klent/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "klent/returns.hpp"

namespace klent::analysis {

// ---------------------------------------------------------------------------
// count-up solvers
// ---------------------------------------------------------------------------

bool CountUpSolution::is_optimal(int position, int action) const {
  const auto& opts = optimal_actions.at(static_cast<size_t>(position));
  return std::find(opts.begin(), opts.end(), action) != opts.end();
}

CountUpSolution solve_countup_optimal(int target, int max_increment) {
  if (target < 1 || max_increment < 1)
    throw std::invalid_argument("count-up parameters must be positive");
  CountUpSolution sol;
  sol.target = target;
  sol.max_increment = max_increment;
  sol.value.assign(static_cast<size_t>(target), 0);
  sol.q.assign(static_cast<size_t>(target), std::vector<int>(static_cast<size_t>(max_increment), 0));
  sol.optimal_actions.assign(static_cast<size_t>(target), {});
  for (int s = target - 1; s >= 0; --s) {
    int best = -1;
    for (int a = 0; a < max_increment; ++a) {
      const int next = s + a + 1;
      const int q = next >= target ? 1 : -sol.value[static_cast<size_t>(next)];
      sol.q[static_cast<size_t>(s)][static_cast<size_t>(a)] = q;
      best = std::max(best, q);
    }
    sol.value[static_cast<size_t>(s)] = best;
    for (int a = 0; a < max_increment; ++a) {
      if (sol.q[static_cast<size_t>(s)][static_cast<size_t>(a)] == best)
        sol.optimal_actions[static_cast<size_t>(s)].push_back(a);
    }
  }
  return sol;
}

namespace {

std::vector<double> softmax_scaled(const std::vector<double>& q, double inv_temp) {
  double max_v = q[0] * inv_temp;
  for (double v : q) max_v = std::max(max_v, v * inv_temp);
  std::vector<double> p(q.size());
  double z = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp(q[i] * inv_temp - max_v);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

QrePolicy solve_countup_qre(int target, int max_increment, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("qre temperature must be positive");
  if (target < 1 || max_increment < 1)
    throw std::invalid_argument("count-up parameters must be positive");
  QrePolicy qre;
  qre.target = target;
  qre.max_increment = max_increment;
  qre.alpha = alpha;
  qre.policy.assign(static_cast<size_t>(target), {});
  qre.q.assign(static_cast<size_t>(target), std::vector<double>(static_cast<size_t>(max_increment), 0.0));
  qre.value.assign(static_cast<size_t>(target), 0.0);
  for (int s = target - 1; s >= 0; --s) {
    for (int a = 0; a < max_increment; ++a) {
      const int next = s + a + 1;
      qre.q[static_cast<size_t>(s)][static_cast<size_t>(a)] =
          next >= target ? 1.0 : -qre.value[static_cast<size_t>(next)];
    }
    qre.policy[static_cast<size_t>(s)] = softmax_scaled(qre.q[static_cast<size_t>(s)], 1.0 / alpha);
    double v = 0.0;
    for (int a = 0; a < max_increment; ++a) {
      v += qre.policy[static_cast<size_t>(s)][static_cast<size_t>(a)] *
           qre.q[static_cast<size_t>(s)][static_cast<size_t>(a)];
    }
    qre.value[static_cast<size_t>(s)] = v;
  }
  return qre;
}

double QrePolicy::fixed_point_residual() const {
  double worst = 0.0;
  for (size_t s = 0; s < policy.size(); ++s) {
    const auto br = softmax_scaled(q[s], 1.0 / alpha);
    for (size_t a = 0; a < br.size(); ++a) {
      worst = std::max(worst, std::abs(policy[s][a] - br[a]));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// agents and matches
// ---------------------------------------------------------------------------

int RandomAgent::act(const games::GameState& state, Rng& rng) {
  const auto mask = games::legal_actions(state);
  return mask.legal[static_cast<size_t>(rng.uniform_int(mask.count()))];
}

int PolicyAgent::act(const games::GameState& state, Rng&) {
  return search::search(state, *params, reg, search_cfg).action;
}

std::string PolicyAgent::name() const {
  return search_cfg.simulations > 0 ? "search-" + std::to_string(search_cfg.simulations) : "greedy";
}

int OptimalCountUpAgent::act(const games::GameState& state, Rng&) {
  if (state.spec.kind != games::GameKind::countup)
    throw std::logic_error("optimal count-up agent used outside count-up");
  return solution.optimal_actions.at(static_cast<size_t>(state.counter)).front();
}

MatchResult play_match(Agent& agent_a, Agent& agent_b, const games::GameSpec& spec, int games,
                       uint64_t seed) {
  if (games < 1) throw std::invalid_argument("play_match: games must be >= 1");
  MatchResult result;
  for (int g = 0; g < games; ++g) {
    GameRecord rec;
    rec.seed = derive_seed(seed, static_cast<uint64_t>(g));
    rec.a_moved_first = g % 2 == 0;
    Rng rng(rec.seed);
    games::GameState state = games::reset(spec);
    int last_mover = -1;
    while (!state.terminal) {
      const bool a_to_move = (state.to_move == 0) == rec.a_moved_first;
      Agent& mover = a_to_move ? agent_a : agent_b;
      const int action = mover.act(state, rng);
      const auto mask = games::legal_actions(state);
      if (!mask.is_legal(action)) {
        std::ostringstream os;
        os << "agent '" << mover.name() << "' returned illegal action " << action << " in game "
           << g << " after moves:";
        for (int m : rec.actions) os << " " << m;
        throw std::runtime_error(os.str());
      }
      rec.actions.push_back(action);
      last_mover = state.to_move;
      state = games::step(state, action).first;
    }
    const bool a_moved_last = (last_mover == 0) == rec.a_moved_first;
    rec.result_for_a = a_moved_last ? state.outcome : -state.outcome;
    if (rec.result_for_a > 0) ++result.wins;
    else if (rec.result_for_a < 0) ++result.losses;
    else ++result.draws;
    result.games.push_back(std::move(rec));
  }
  return result;
}

double elo_from_winrate(double winrate, double anchor_rating) {
  if (!(winrate > 0.0 && winrate < 1.0))
    throw std::domain_error("elo is unbounded for win rates of 0 or 1");
  return 400.0 * std::log10(winrate / (1.0 - winrate)) + anchor_rating;
}

// ---------------------------------------------------------------------------
// bias/variance of lambda-returns
// ---------------------------------------------------------------------------

namespace {

// Trajectory from `point.state` where the first action is forced and the
// rest are sampled from the frozen improved policy.
std::vector<returns::TrajectoryStep> rollout_from(const games::GameSpec&,
                                                  const approx::Parameters& params,
                                                  const Hyperparameters& hp, const EvalPoint& point,
                                                  Rng& rng) {
  std::vector<returns::TrajectoryStep> traj;
  games::GameState state = point.state;
  bool first = true;
  while (!state.terminal) {
    auto input = acting::observe(state);
    auto ev = acting::evaluate(params, input, hp.reg());
    const int action = first ? point.action : rng.sample(ev.improved.probs, input.mask.legal);
    first = false;
    auto [next, reward] = games::step(state, action);
    returns::TrajectoryStep step;
    step.state_key = std::move(input.key);
    step.features = std::move(input.features);
    step.mask = std::move(input.mask);
    step.action = action;
    step.reward = reward;
    step.target_policy = std::move(ev.improved);
    step.vhat = ev.vhat;
    step.mover = state.to_move;
    traj.push_back(std::move(step));
    state = std::move(next);
  }
  return traj;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // population (1/n)
  double se_mean = 0.0;
};

Moments moments_of(const std::vector<double>& xs) {
  Moments m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
  m.var /= n;
  m.se_mean = std::sqrt(m.var / n);
  return m;
}

}  // namespace

std::vector<EvalPoint> default_eval_points(const games::GameSpec& spec,
                                           const approx::Parameters& params,
                                           const Hyperparameters& hp, int count, uint64_t seed) {
  Rng rng(seed);
  std::vector<EvalPoint> points;
  games::GameState state = games::reset(spec);
  while (!state.terminal && static_cast<int>(points.size()) < count) {
    const auto input = acting::observe(state);
    const auto ev = acting::evaluate(params, input, hp.reg());
    const int action = rng.sample(ev.improved.probs, input.mask.legal);
    points.push_back({state, action});
    state = games::step(state, action).first;
  }
  return points;
}

BiasVarianceReport bias_variance(const games::GameSpec& spec, const approx::Parameters& params,
                                 const Hyperparameters& hp,
                                 const std::vector<double>& lambda_grid,
                                 const std::vector<EvalPoint>& eval_points, int rollouts_per_point,
                                 int oracle_rollouts, uint64_t seed) {
  if (rollouts_per_point < 2 || oracle_rollouts < 2)
    throw std::invalid_argument("bias_variance needs at least 2 rollouts");
  if (eval_points.empty()) throw std::invalid_argument("bias_variance: no evaluation points");

  BiasVarianceReport report;
  report.eval_points = static_cast<int>(eval_points.size());
  report.rollouts_per_point = rollouts_per_point;
  report.oracle_rollouts = oracle_rollouts;

  const size_t n_lambda = lambda_grid.size();
  std::vector<BiasVarianceCell> cells(n_lambda);
  for (size_t li = 0; li < n_lambda; ++li) cells[li].lambda = lambda_grid[li];

  for (size_t pi = 0; pi < eval_points.size(); ++pi) {
    const auto& point = eval_points[pi];

    // ground-truth surrogate: mean Monte Carlo return for this (s, a)
    Rng oracle_rng(derive_seed(seed, pi, 0));
    std::vector<double> mc(static_cast<size_t>(oracle_rollouts));
    for (int r = 0; r < oracle_rollouts; ++r) {
      const auto traj = rollout_from(spec, params, hp, point, oracle_rng);
      mc[static_cast<size_t>(r)] = returns::lambda_returns(traj, 1.0, hp.gamma).g_lambda[0];
    }
    const Moments oracle = moments_of(mc);

    // fresh rollouts, each scored at every lambda
    Rng est_rng(derive_seed(seed, pi, 1));
    std::vector<std::vector<double>> g(n_lambda,
                                       std::vector<double>(static_cast<size_t>(rollouts_per_point)));
    for (int r = 0; r < rollouts_per_point; ++r) {
      const auto traj = rollout_from(spec, params, hp, point, est_rng);
      for (size_t li = 0; li < n_lambda; ++li) {
        g[li][static_cast<size_t>(r)] =
            returns::lambda_returns(traj, lambda_grid[li], hp.gamma).g_lambda[0];
      }
    }
    for (size_t li = 0; li < n_lambda; ++li) {
      const Moments est = moments_of(g[li]);
      const double bias = est.mean - oracle.mean;
      std::vector<double> sq(g[li].size());
      for (size_t r = 0; r < g[li].size(); ++r) {
        sq[r] = (g[li][r] - oracle.mean) * (g[li][r] - oracle.mean);
      }
      const Moments mse = moments_of(sq);
      cells[li].bias_squared += bias * bias;
      cells[li].variance += est.var;
      cells[li].mse += mse.mean;
      cells[li].stderr_mse += mse.se_mean * mse.se_mean;
      cells[li].stderr_bias += est.se_mean * est.se_mean + oracle.se_mean * oracle.se_mean;
    }
  }
  const double inv_points = 1.0 / static_cast<double>(eval_points.size());
  for (auto& cell : cells) {
    cell.bias_squared *= inv_points;
    cell.variance *= inv_points;
    cell.mse *= inv_points;
    cell.stderr_mse = std::sqrt(cell.stderr_mse) * inv_points;
    cell.stderr_bias = std::sqrt(cell.stderr_bias) * inv_points;
  }
  report.cells = std::move(cells);
  return report;
}

std::string BiasVarianceReport::to_csv() const {
  std::ostringstream os;
  os << "lambda,bias_squared,variance,mse,stderr\n";
  os.precision(17);
  for (const auto& cell : cells) {
    os << cell.lambda << "," << cell.bias_squared << "," << cell.variance << "," << cell.mse << ","
       << cell.stderr_mse << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// legal-action statistics
// ---------------------------------------------------------------------------

LegalActionStats legal_action_stats(const games::GameSpec& spec, int games, uint64_t seed,
                                    Agent& policy) {
  if (games < 1) throw std::invalid_argument("legal_action_stats: games must be >= 1");
  LegalActionStats stats;
  double total = 0.0;
  for (int g = 0; g < games; ++g) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(g)));
    games::GameState state = games::reset(spec);
    while (!state.terminal) {
      const auto mask = games::legal_actions(state);
      total += mask.count();
      stats.max = std::max(stats.max, mask.count());
      ++stats.states_visited;
      state = games::step(state, policy.act(state, rng)).first;
    }
  }
  stats.mean = total / static_cast<double>(stats.states_visited);
  return stats;
}

}  // namespace klent::analysis
