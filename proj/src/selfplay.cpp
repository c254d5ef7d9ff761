#include "klent/selfplay.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "klent/analysis.hpp"

namespace klent::selfplay {

namespace {

// purpose tags for seed-stream derivation
constexpr uint64_t kInitStream = 0x11;
constexpr uint64_t kCollectStream = 0x22;
constexpr uint64_t kFitStream = 0x33;
constexpr uint64_t kEvalStream = 0x44;

uint64_t episode_seed(uint64_t seed, uint64_t iteration, uint64_t episode) {
  return derive_seed(derive_seed(seed, kCollectStream, iteration), episode);
}

}  // namespace

const char* to_string(EvalOpponent o) {
  return o == EvalOpponent::random ? "random" : "optimal-countup";
}

EvalOpponent eval_opponent_from_string(const std::string& name) {
  if (name == "random") return EvalOpponent::random;
  if (name == "optimal-countup") return EvalOpponent::optimal_countup;
  throw std::invalid_argument("unknown eval opponent: " + name);
}

void TrainConfig::validate() const {
  game.validate();
  hp.validate();
  if (buffer_capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (budget_sim_evals == 0 && max_iterations == 0)
    throw std::invalid_argument("either a simulator-evaluation budget or an iteration cap is required");
  if (workers <= 0) throw std::invalid_argument("workers must be positive");
  if (eval_cadence < 0 || eval_games <= 0) throw std::invalid_argument("bad eval settings");
  if (eval_opponent == EvalOpponent::optimal_countup && game.kind != games::GameKind::countup)
    throw std::invalid_argument("optimal-countup opponent requires the count-up game");
  if (backend == approx::Backend::mlp && hidden.empty())
    throw std::invalid_argument("mlp backend needs hidden layer sizes");
}

std::vector<approx::SampleRecord> run_episode(const games::GameSpec& spec,
                                              const approx::Parameters& params,
                                              const Hyperparameters& hp, Rng& rng, int max_ply,
                                              uint64_t params_version) {
  hp.validate();
  games::GameState state = games::reset(spec);
  std::vector<returns::TrajectoryStep> traj;
  int ply = 0;
  while (!state.terminal) {
    if (++ply > max_ply) {
      throw std::runtime_error("episode exceeded " + std::to_string(max_ply) +
                               " plies; environment looks broken");
    }
    auto input = acting::observe(state);
    auto ev = acting::evaluate(params, input, hp.reg());
    const int action = rng.sample(ev.improved.probs, input.mask.legal);
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
  const auto targets = returns::lambda_returns(traj, hp.lambda, hp.gamma);

  std::vector<approx::SampleRecord> records;
  records.reserve(traj.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    approx::SampleRecord rec;
    rec.state_key = std::move(traj[i].state_key);
    rec.features = std::move(traj[i].features);
    rec.mask = std::move(traj[i].mask);
    rec.action = traj[i].action;
    rec.target_policy = std::move(traj[i].target_policy);
    rec.g_lambda = targets.g_lambda[i];
    rec.params_version = params_version;
    records.push_back(std::move(rec));
  }
  return records;
}

SampleBuffer fill_buffer(const TrainConfig& cfg, const approx::Parameters& params,
                         uint64_t iteration, uint64_t params_version, uint64_t& sim_evals) {
  SampleBuffer buf;
  buf.capacity = cfg.buffer_capacity;
  const int max_ply = cfg.max_ply > 0 ? cfg.max_ply : cfg.game.default_max_ply();
  const int workers = cfg.workers;
  uint64_t next_episode = 0;

  // Episodes are seeded by episode index, produced in rounds of `workers`
  // and consumed in index order, so the buffer never depends on the worker
  // count. Surplus episodes of the final round are dropped uncounted.
  while (buf.records.size() < buf.capacity) {
    std::vector<std::vector<approx::SampleRecord>> round(static_cast<size_t>(workers));
    auto produce = [&](int w) {
      Rng rng(episode_seed(cfg.seed, iteration, next_episode + static_cast<uint64_t>(w)));
      round[static_cast<size_t>(w)] =
          run_episode(cfg.game, params, cfg.hp, rng, max_ply, params_version);
    };
    if (workers == 1) {
      produce(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(static_cast<size_t>(workers));
      for (int w = 0; w < workers; ++w) threads.emplace_back(produce, w);
      for (auto& t : threads) t.join();
    }
    for (int w = 0; w < workers && buf.records.size() < buf.capacity; ++w) {
      auto& episode = round[static_cast<size_t>(w)];
      sim_evals += episode.size();
      buf.episodes += 1;
      for (auto& rec : episode) buf.records.push_back(std::move(rec));
    }
    next_episode += static_cast<uint64_t>(workers);
  }
  return buf;
}

double evaluate_winrate(const TrainConfig& cfg, const approx::Parameters& params, uint64_t seed) {
  analysis::PolicyAgent learner(params, cfg.hp.reg());
  if (cfg.eval_opponent == EvalOpponent::optimal_countup) {
    analysis::OptimalCountUpAgent opponent(
        analysis::solve_countup_optimal(cfg.game.countup_target, cfg.game.countup_increment));
    return analysis::play_match(learner, opponent, cfg.game, cfg.eval_games, seed).winrate();
  }
  analysis::RandomAgent opponent;
  return analysis::play_match(learner, opponent, cfg.game, cfg.eval_games, seed).winrate();
}

TrainResult train(const TrainConfig& cfg, const MetricsSink& metrics_sink,
                  const CheckpointSink& checkpoint_sink) {
  cfg.validate();
  TrainResult result;
  result.params = cfg.backend == approx::Backend::tabular
                      ? approx::make_tabular(cfg.game.action_count(), cfg.game.feature_count())
                      : approx::make_mlp(cfg.game.action_count(), cfg.game.feature_count(),
                                         cfg.hidden, derive_seed(cfg.seed, kInitStream));
  result.opt.lr = cfg.lr;

  uint64_t params_version = 0;
  const auto emit_checkpoint = [&]() {
    if (!checkpoint_sink) return;
    approx::Checkpoint ckpt;
    ckpt.params = result.params;
    ckpt.opt = result.opt;
    ckpt.iteration = result.iterations;
    ckpt.sim_evals = result.sim_evals;
    ckpt.config_hash = cfg.config_hash;
    checkpoint_sink(ckpt);
  };

  while ((cfg.budget_sim_evals == 0 || result.sim_evals < cfg.budget_sim_evals) &&
         (cfg.max_iterations == 0 || result.iterations < cfg.max_iterations)) {
    const auto t0 = std::chrono::steady_clock::now();
    const uint64_t iteration = result.iterations;
    SampleBuffer buf = fill_buffer(cfg, result.params, iteration, params_version, result.sim_evals);

    IterationMetrics m;
    m.iteration = iteration + 1;
    m.sim_evals = result.sim_evals;
    m.mean_episode_length =
        static_cast<double>(buf.records.size()) / static_cast<double>(buf.episodes);
    for (const auto& rec : buf.records) {
      if (rec.params_version != params_version)
        throw std::logic_error("stale sample in buffer: on-policy contract violated");
      m.mean_entropy += regopt::entropy(rec.target_policy);
    }
    m.mean_entropy /= static_cast<double>(buf.records.size());

    try {
      approx::ensure_rows(result.params, buf.records);
      Rng fit_rng(derive_seed(cfg.seed, kFitStream, iteration));
      double loss_sum = 0.0;
      uint64_t batches = 0;
      for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        fit_rng.shuffle(buf.records);
        for (size_t start = 0; start < buf.records.size(); start += static_cast<size_t>(cfg.batch_size)) {
          const size_t len = std::min(static_cast<size_t>(cfg.batch_size), buf.records.size() - start);
          const approx::TrainBatch batch(buf.records.data() + start, len);
          loss_sum += approx::loss(result.params, batch);
          const auto grad = approx::gradient(result.params, batch);
          approx::optimizer_step(result.params, grad, result.opt);
          ++batches;
        }
      }
      m.mean_loss = loss_sum / static_cast<double>(batches);
    } catch (const std::exception&) {
      emit_checkpoint();  // preserve the offending iteration's parameters
      throw;
    }

    params_version += 1;
    result.iterations += 1;

    const bool cadence_hit = cfg.eval_cadence > 0 && result.iterations % static_cast<uint64_t>(cfg.eval_cadence) == 0;
    if (cadence_hit) {
      m.eval_winrate = evaluate_winrate(cfg, result.params,
                                        derive_seed(cfg.seed, kEvalStream, result.iterations));
    }
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.metrics.push_back(m);
    if (metrics_sink) metrics_sink(m);
    if (cadence_hit) emit_checkpoint();
  }
  emit_checkpoint();
  return result;
}

}  // namespace klent::selfplay
