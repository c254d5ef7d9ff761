#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "klent/acting.hpp"
#include "klent/rng.hpp"

namespace klent::selfplay {

using klent::Hyperparameters;

enum class EvalOpponent { random, optimal_countup };

const char* to_string(EvalOpponent o);
EvalOpponent eval_opponent_from_string(const std::string& name);

struct TrainConfig {
  games::GameSpec game;
  Hyperparameters hp;
  approx::Backend backend = approx::Backend::tabular;
  std::vector<int> hidden = {128, 128};  // mlp trunk
  size_t buffer_capacity = 4096;
  int batch_size = 256;
  int epochs = 1;
  double lr = 1e-3;
  uint64_t budget_sim_evals = 200000;
  uint64_t max_iterations = 0;  // 0 = unlimited, budget governs
  int eval_cadence = 10;        // iterations between eval/checkpoint; 0 = never
  int eval_games = 128;
  EvalOpponent eval_opponent = EvalOpponent::random;
  uint64_t seed = 1;
  int workers = 1;
  int max_ply = 0;        // 0 = game default
  uint64_t config_hash = 0;  // stamped into checkpoints

  void validate() const;
};

// Cleared at the start of every iteration; holds whole episodes only.
struct SampleBuffer {
  std::vector<approx::SampleRecord> records;
  size_t capacity = 0;
  size_t episodes = 0;
};

struct IterationMetrics {
  uint64_t iteration = 0;
  uint64_t sim_evals = 0;  // cumulative plies collected
  double mean_loss = 0.0;
  double mean_entropy = 0.0;  // of pi' over collected records
  double mean_episode_length = 0.0;
  std::optional<double> eval_winrate;
  double wall_seconds = 0.0;  // telemetry only; never serialized
};

// Plays one full game with actions sampled from the improved policy and
// emits one record per ply carrying the full pi' vector and its
// lambda-return.
std::vector<approx::SampleRecord> run_episode(const games::GameSpec& spec,
                                              const approx::Parameters& params,
                                              const Hyperparameters& hp, Rng& rng, int max_ply,
                                              uint64_t params_version);

// Runs whole episodes until the buffer holds at least `capacity` records.
// Episode e of iteration `iteration` draws from the RNG stream derived from
// (seed, iteration, e), so buffer contents are identical for any worker
// count. Adds the number of collected plies to `sim_evals`.
SampleBuffer fill_buffer(const TrainConfig& cfg, const approx::Parameters& params,
                         uint64_t iteration, uint64_t params_version, uint64_t& sim_evals);

using MetricsSink = std::function<void(const IterationMetrics&)>;
using CheckpointSink = std::function<void(const approx::Checkpoint&)>;

struct TrainResult {
  approx::Parameters params;
  approx::OptimizerState opt;
  uint64_t iterations = 0;
  uint64_t sim_evals = 0;
  std::vector<IterationMetrics> metrics;
};

// Alternates collection and fitting until the simulator-evaluation budget
// (or iteration cap) is reached. Deterministic for a given config. On a
// non-finite loss the current checkpoint is flushed to the sink before the
// error propagates.
TrainResult train(const TrainConfig& cfg, const MetricsSink& metrics_sink = {},
                  const CheckpointSink& checkpoint_sink = {});

// Greedy-policy match against the configured opponent; returns the win rate
// with draws as half-wins.
double evaluate_winrate(const TrainConfig& cfg, const approx::Parameters& params, uint64_t seed);

}  // namespace klent::selfplay
