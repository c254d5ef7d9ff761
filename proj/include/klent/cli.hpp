#pragma once

#include <cstdint>
#include <string>

#include "klent/selfplay.hpp"

namespace klent::cli {

// Flat, diff-friendly run configuration. Values are stored resolved; the
// preset name is kept for provenance and re-expands before any explicit
// alpha/beta/lambda keys are applied, so serialized configs replay exactly.
struct RunConfig {
  std::string game = "countup";
  int countup_n = 7;
  int countup_k = 2;
  int hex_side = 3;
  int othello_side = 4;

  std::string preset = "klent";
  double alpha = 0.03;
  double beta = 0.1;
  double lambda = 0.8824969025845955;  // exp(-1/8)
  double gamma = 1.0;

  std::string backend = "tabular";
  std::string hidden = "128,128";
  uint64_t buffer_capacity = 4096;
  int batch_size = 256;
  int epochs = 1;
  double lr = 1e-3;
  uint64_t budget = 200000;
  uint64_t max_iterations = 0;
  int eval_cadence = 10;
  int eval_games = 128;
  std::string eval_opponent = "random";
  uint64_t seed = 1;
  int workers = 1;
  int max_ply = 0;

  std::string out_dir;       // empty: <out root>/<game>-<preset>-seed<seed>
  std::string metrics_path;  // empty: <out_dir>/metrics.jsonl

  games::GameSpec game_spec() const;
  selfplay::TrainConfig train_config() const;  // config_hash left to the caller
  std::string resolved_out_dir() const;
  std::string resolved_metrics_path() const;
};

// Table of ablation presets: klent, kl-only, ent-only, one-step, monte-carlo.
void apply_preset(RunConfig& cfg, const std::string& name);

// One `key = value` assignment; `preset` expands immediately.
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);
uint64_t config_hash(const std::string& serialized);

std::string format_double(double v);  // shortest round-trip decimal

// Full command-line entry point; returns the process exit status.
int run_cli(int argc, const char* const* argv);

}  // namespace klent::cli
