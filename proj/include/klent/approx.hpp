#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "klent/regopt.hpp"

namespace klent::approx {

enum class Backend { tabular, mlp };

const char* to_string(Backend b);
Backend backend_from_string(const std::string& name);

struct Layout {
  Backend backend = Backend::tabular;
  int action_count = 0;
  int feature_count = 0;
  std::vector<int> hidden;  // mlp trunk widths

  size_t theta_size_mlp() const;
  bool operator==(const Layout&) const = default;
};

// Flat parameter vector plus its layout. Tabular parameters are a growable
// row table keyed by state key; each row is [policy logits | q values].
struct Parameters {
  Layout layout;
  std::vector<double> theta;
  std::vector<std::string> table_keys;  // tabular rows in insertion order
  std::unordered_map<std::string, int> table_index;

  int row_width() const { return 2 * layout.action_count; }
};

Parameters make_tabular(int action_count, int feature_count);
Parameters make_mlp(int action_count, int feature_count, const std::vector<int>& hidden,
                    uint64_t seed);

// What the approximator sees of a game state.
struct StateInput {
  std::string key;
  std::vector<double> features;
  games::LegalMask mask;
};

struct NetOutput {
  std::vector<double> policy_logits;
  regopt::QValues q;
};

// Deterministic evaluation. Tabular: stored row for the key, zeros if
// unseen. MLP: shared rectifier trunk feeding two linear heads.
NetOutput forward(const Parameters& params, const StateInput& input);

// argmax of the policy head over legal actions, ties to the lowest index.
int greedy_action(const Parameters& params, const StateInput& input);

// One training sample: a state, the action taken, the full target policy,
// and its lambda-return target.
struct SampleRecord {
  std::string state_key;
  std::vector<double> features;
  games::LegalMask mask;
  int action = 0;
  regopt::ActionDistribution target_policy;
  double g_lambda = 0.0;
  uint64_t params_version = 0;
};

using TrainBatch = std::span<const SampleRecord>;

// Mean over the batch of cross-entropy(target || masked softmax of policy
// logits) plus (q(action) - g_lambda)^2.
double loss(const Parameters& params, TrainBatch batch);

// Exact reverse-mode gradient of loss(); same length as theta.
std::vector<double> gradient(const Parameters& params, TrainBatch batch);

// Tabular only: allocate zero rows for every key in the batch that has none
// yet, so gradients have somewhere to land. No-op for the MLP backend.
void ensure_rows(Parameters& params, TrainBatch batch);

struct OptimizerState {
  uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m;
  std::vector<double> v;

  void ensure_size(size_t n);
};

// Adam update with bias correction; grows moment vectors when theta grew.
void optimizer_step(Parameters& params, const std::vector<double>& grad, OptimizerState& opt);

struct Checkpoint {
  Parameters params;
  OptimizerState opt;
  uint64_t iteration = 0;
  uint64_t sim_evals = 0;
  uint64_t config_hash = 0;
};

// Versioned binary container; byte layout is documented in the README.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace klent::approx
