#include "klent/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "klent/analysis.hpp"

namespace klent::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// config plumbing
// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

const std::vector<std::string>& key_order() {
  // preset precedes alpha/beta/lambda so explicit values win on replay
  static const std::vector<std::string> keys = {
      "game",        "countup_n",  "countup_k",      "hex_side",   "othello_side",
      "preset",      "alpha",      "beta",           "lambda",     "gamma",
      "backend",     "hidden",     "buffer_capacity", "batch_size", "epochs",
      "lr",          "budget",     "max_iterations", "eval_cadence", "eval_games",
      "eval_opponent", "seed",     "workers",        "max_ply",    "out_dir",
      "metrics_path"};
  return keys;
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': not an integer: '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size() || v.find('-') != std::string::npos) throw std::invalid_argument(v);
    return static_cast<uint64_t>(r);
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': not a non-negative integer: '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': not a number: '" + v + "'");
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(to_int(key, item));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::vector<uint64_t> parse_u64_list(const std::string& key, const std::string& v) {
  std::vector<uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(to_u64(key, item));
  }
  return out;
}

std::string get_key(const RunConfig& c, const std::string& key) {
  if (key == "game") return c.game;
  if (key == "countup_n") return std::to_string(c.countup_n);
  if (key == "countup_k") return std::to_string(c.countup_k);
  if (key == "hex_side") return std::to_string(c.hex_side);
  if (key == "othello_side") return std::to_string(c.othello_side);
  if (key == "preset") return c.preset;
  if (key == "alpha") return format_double(c.alpha);
  if (key == "beta") return format_double(c.beta);
  if (key == "lambda") return format_double(c.lambda);
  if (key == "gamma") return format_double(c.gamma);
  if (key == "backend") return c.backend;
  if (key == "hidden") return c.hidden;
  if (key == "buffer_capacity") return std::to_string(c.buffer_capacity);
  if (key == "batch_size") return std::to_string(c.batch_size);
  if (key == "epochs") return std::to_string(c.epochs);
  if (key == "lr") return format_double(c.lr);
  if (key == "budget") return std::to_string(c.budget);
  if (key == "max_iterations") return std::to_string(c.max_iterations);
  if (key == "eval_cadence") return std::to_string(c.eval_cadence);
  if (key == "eval_games") return std::to_string(c.eval_games);
  if (key == "eval_opponent") return c.eval_opponent;
  if (key == "seed") return std::to_string(c.seed);
  if (key == "workers") return std::to_string(c.workers);
  if (key == "max_ply") return std::to_string(c.max_ply);
  if (key == "out_dir") return c.out_dir;
  if (key == "metrics_path") return c.metrics_path;
  throw std::invalid_argument("unknown config key: " + key);
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  size_t e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

void apply_preset(RunConfig& cfg, const std::string& name) {
  const double lam = default_lambda();
  if (name == "klent") {
    cfg.alpha = 0.03; cfg.beta = 0.1; cfg.lambda = lam;
  } else if (name == "kl-only") {
    cfg.alpha = 0.0; cfg.beta = 0.1; cfg.lambda = lam;
  } else if (name == "ent-only") {
    cfg.alpha = 0.03; cfg.beta = 0.0; cfg.lambda = lam;
  } else if (name == "one-step") {
    cfg.alpha = 0.03; cfg.beta = 0.1; cfg.lambda = 0.0;
  } else if (name == "monte-carlo") {
    cfg.alpha = 0.03; cfg.beta = 0.1; cfg.lambda = 1.0;
  } else {
    throw std::invalid_argument("unknown preset: " + name +
                                " (expected klent, kl-only, ent-only, one-step, monte-carlo)");
  }
  cfg.preset = name;
}

void apply_key_value(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "game") { c.game = value; games::game_kind_from_string(value); return; }
  if (key == "countup_n") { c.countup_n = to_int(key, value); return; }
  if (key == "countup_k") { c.countup_k = to_int(key, value); return; }
  if (key == "hex_side") { c.hex_side = to_int(key, value); return; }
  if (key == "othello_side") { c.othello_side = to_int(key, value); return; }
  if (key == "preset") { apply_preset(c, value); return; }
  if (key == "alpha") { c.alpha = to_double(key, value); return; }
  if (key == "beta") { c.beta = to_double(key, value); return; }
  if (key == "lambda") { c.lambda = to_double(key, value); return; }
  if (key == "gamma") { c.gamma = to_double(key, value); return; }
  if (key == "backend") { c.backend = value; approx::backend_from_string(value); return; }
  if (key == "hidden") { c.hidden = value; parse_int_list(key, value); return; }
  if (key == "buffer_capacity") { c.buffer_capacity = to_u64(key, value); return; }
  if (key == "batch_size") { c.batch_size = to_int(key, value); return; }
  if (key == "epochs") { c.epochs = to_int(key, value); return; }
  if (key == "lr") { c.lr = to_double(key, value); return; }
  if (key == "budget") { c.budget = to_u64(key, value); return; }
  if (key == "max_iterations") { c.max_iterations = to_u64(key, value); return; }
  if (key == "eval_cadence") { c.eval_cadence = to_int(key, value); return; }
  if (key == "eval_games") { c.eval_games = to_int(key, value); return; }
  if (key == "eval_opponent") {
    c.eval_opponent = value;
    selfplay::eval_opponent_from_string(value);
    return;
  }
  if (key == "seed") { c.seed = to_u64(key, value); return; }
  if (key == "workers") { c.workers = to_int(key, value); return; }
  if (key == "max_ply") { c.max_ply = to_int(key, value); return; }
  if (key == "out_dir") { c.out_dir = value; return; }
  if (key == "metrics_path") { c.metrics_path = value; return; }
  throw std::invalid_argument("unknown config key: " + key);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    apply_key_value(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "# klent run config v1\n";
  for (const auto& key : key_order()) os << key << " = " << get_key(cfg, key) << "\n";
  return os.str();
}

uint64_t config_hash(const std::string& serialized) {
  uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : serialized) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

games::GameSpec RunConfig::game_spec() const {
  switch (games::game_kind_from_string(game)) {
    case games::GameKind::countup: return games::GameSpec::countup(countup_n, countup_k);
    case games::GameKind::hex: return games::GameSpec::hex(hex_side);
    case games::GameKind::othello: return games::GameSpec::othello(othello_side);
  }
  throw std::invalid_argument("unknown game: " + game);
}

selfplay::TrainConfig RunConfig::train_config() const {
  selfplay::TrainConfig tc;
  tc.game = game_spec();
  tc.hp = {alpha, beta, lambda, gamma};
  tc.backend = approx::backend_from_string(backend);
  tc.hidden = parse_int_list("hidden", hidden);
  tc.buffer_capacity = buffer_capacity;
  tc.batch_size = batch_size;
  tc.epochs = epochs;
  tc.lr = lr;
  tc.budget_sim_evals = budget;
  tc.max_iterations = max_iterations;
  tc.eval_cadence = eval_cadence;
  tc.eval_games = eval_games;
  tc.eval_opponent = selfplay::eval_opponent_from_string(eval_opponent);
  tc.seed = seed;
  tc.workers = workers;
  tc.max_ply = max_ply;
  return tc;
}

std::string RunConfig::resolved_out_dir() const {
  if (!out_dir.empty()) return out_dir;
  const char* root = std::getenv("KLENT_OUT_ROOT");
  return std::string(root ? root : "runs") + "/" + game + "-" + preset + "-seed" +
         std::to_string(seed);
}

std::string RunConfig::resolved_metrics_path() const {
  if (!metrics_path.empty()) return metrics_path;
  return resolved_out_dir() + "/metrics.jsonl";
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

namespace {

json metrics_to_json(const selfplay::IterationMetrics& m) {
  json j;
  j["schema"] = "klent.metrics.v1";
  j["iteration"] = m.iteration;
  j["sim_evals"] = m.sim_evals;
  j["loss"] = m.mean_loss;
  j["entropy"] = m.mean_entropy;
  j["episode_length"] = m.mean_episode_length;
  if (m.eval_winrate) j["eval_winrate"] = *m.eval_winrate;
  return j;
}

int cmd_train(RunConfig cfg) {
  cfg.out_dir = cfg.resolved_out_dir();
  cfg.metrics_path = cfg.resolved_metrics_path();
  fs::create_directories(cfg.out_dir);
  const std::string serialized = serialize_config(cfg);
  {
    std::ofstream os(cfg.out_dir + "/config.txt", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + cfg.out_dir + "/config.txt");
    os << serialized;
  }
  auto tc = cfg.train_config();
  tc.config_hash = config_hash(serialized);

  std::ofstream metrics(cfg.metrics_path, std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write " + cfg.metrics_path);
  const auto metrics_sink = [&](const selfplay::IterationMetrics& m) {
    metrics << metrics_to_json(m).dump() << "\n";
    metrics.flush();
  };
  const auto checkpoint_sink = [&](const approx::Checkpoint& ckpt) {
    char name[32];
    std::snprintf(name, sizeof(name), "ckpt-%06llu.bin",
                  static_cast<unsigned long long>(ckpt.iteration));
    approx::save_checkpoint(cfg.out_dir + "/" + name, ckpt);
    approx::save_checkpoint(cfg.out_dir + "/latest.bin", ckpt);
  };

  const auto result = selfplay::train(tc, metrics_sink, checkpoint_sink);

  std::cout << "trained " << result.iterations << " iterations, " << result.sim_evals
            << " simulator evaluations\n";
  double last_eval = -1.0;
  for (auto it = result.metrics.rbegin(); it != result.metrics.rend(); ++it) {
    if (it->eval_winrate) { last_eval = *it->eval_winrate; break; }
  }
  if (last_eval >= 0.0) {
    std::cout << "last eval win-rate vs " << cfg.eval_opponent << ": " << last_eval << "\n";
  }
  std::cout << "config:     " << cfg.out_dir << "/config.txt\n";
  std::cout << "metrics:    " << cfg.metrics_path << "\n";
  std::cout << "checkpoint: " << cfg.out_dir << "/latest.bin\n";
  return 0;
}

approx::Checkpoint load_checkpoint_for(const games::GameSpec& spec, const std::string& path) {
  auto ckpt = approx::load_checkpoint(path);
  if (ckpt.params.layout.action_count != spec.action_count() ||
      ckpt.params.layout.feature_count != spec.feature_count()) {
    throw std::runtime_error("checkpoint " + path + " does not match the requested game (" +
                             std::to_string(ckpt.params.layout.action_count) + " actions vs " +
                             std::to_string(spec.action_count()) + ")");
  }
  return ckpt;
}

struct EvalArgs {
  std::string checkpoint;
  std::string opponent = "random";
  int games = 1024;
  int simulations = 0;
  double c_puct = 1.25;
  double anchor = 1000.0;
};

int cmd_eval(const RunConfig& cfg, const EvalArgs& args) {
  const auto spec = cfg.game_spec();
  const auto ckpt = load_checkpoint_for(spec, args.checkpoint);
  const regopt::RegWeights reg{cfg.alpha, cfg.beta};
  const search::SearchConfig scfg{args.simulations, args.c_puct};
  analysis::PolicyAgent agent_a(ckpt.params, reg, scfg);

  std::unique_ptr<analysis::Agent> agent_b;
  approx::Checkpoint opponent_ckpt;
  if (args.opponent == "random") {
    agent_b = std::make_unique<analysis::RandomAgent>();
  } else if (args.opponent == "optimal-countup") {
    if (spec.kind != games::GameKind::countup)
      throw std::invalid_argument("optimal-countup opponent requires --game countup");
    agent_b = std::make_unique<analysis::OptimalCountUpAgent>(
        analysis::solve_countup_optimal(spec.countup_target, spec.countup_increment));
  } else {
    opponent_ckpt = load_checkpoint_for(spec, args.opponent);
    agent_b = std::make_unique<analysis::PolicyAgent>(opponent_ckpt.params, reg, scfg);
  }

  const auto result = analysis::play_match(agent_a, *agent_b, spec, args.games, cfg.seed);
  std::cout << "games: " << result.total() << "  wins: " << result.wins
            << "  draws: " << result.draws << "  losses: " << result.losses << "\n";
  const double w = result.winrate();
  std::cout << "win-rate (draws as half-wins): " << w << "\n";
  if (w > 0.0 && w < 1.0) {
    std::cout << "elo vs anchor " << args.anchor << ": " << analysis::elo_from_winrate(w, args.anchor)
              << "\n";
  } else {
    std::cout << "elo vs anchor " << args.anchor << ": unbounded (win-rate at the boundary)\n";
  }
  return 0;
}

int cmd_play(const RunConfig& cfg, const std::string& checkpoint_path, int simulations,
             double c_puct, int human_player) {
  const auto spec = cfg.game_spec();
  const auto ckpt = load_checkpoint_for(spec, checkpoint_path);
  const regopt::RegWeights reg{cfg.alpha, cfg.beta};
  analysis::PolicyAgent agent(ckpt.params, reg, {simulations, c_puct});
  Rng rng(cfg.seed);

  games::GameState state = games::reset(spec);
  std::cout << games::render(state);
  while (!state.terminal) {
    int action;
    if (state.to_move == human_player) {
      const auto mask = games::legal_actions(state);
      std::string line;
      std::cout << "your move: " << std::flush;
      if (!std::getline(std::cin, line)) {
        std::cout << "\nbye\n";
        return 0;
      }
      action = games::parse_action(spec, line);
      if (!mask.is_legal(action)) {
        std::cout << "illegal move; legal:";
        for (int a : mask.legal) std::cout << " " << games::action_name(spec, a);
        std::cout << "\n";
        continue;
      }
    } else {
      action = agent.act(state, rng);
      std::cout << "agent plays " << games::action_name(spec, action) << "\n";
    }
    const int mover = state.to_move;
    state = games::step(state, action).first;
    std::cout << games::render(state);
    if (state.terminal) {
      const bool human_moved_last = mover == human_player;
      const int for_human = human_moved_last ? state.outcome : -state.outcome;
      std::cout << (for_human > 0 ? "you win\n" : for_human < 0 ? "you lose\n" : "draw\n");
    }
  }
  return 0;
}

int cmd_solve_countup(int n, int k, double alpha) {
  const auto sol = analysis::solve_countup_optimal(n, k);
  std::cout << "state  value  optimal actions\n";
  for (int s = n - 1; s >= 0; --s) {
    std::cout << s << "      " << (sol.value[static_cast<size_t>(s)] > 0 ? "win " : "lose") << "  ";
    if (sol.value[static_cast<size_t>(s)] > 0) {
      for (int a : sol.optimal_actions[static_cast<size_t>(s)]) std::cout << " +" << a + 1;
    } else {
      std::cout << " (lose anyway)";
    }
    std::cout << "\n";
  }
  if (alpha > 0.0) {
    const auto qre = analysis::solve_countup_qre(n, k, alpha);
    std::cout << "\nquantal response equilibrium at alpha = " << alpha << "\n";
    for (int s = n - 1; s >= 0; --s) {
      std::cout << "state " << s << ": pi = [";
      for (int a = 0; a < k; ++a) {
        std::cout << (a ? ", " : "") << qre.policy[static_cast<size_t>(s)][static_cast<size_t>(a)];
      }
      std::cout << "], q = [";
      for (int a = 0; a < k; ++a) {
        std::cout << (a ? ", " : "") << qre.q[static_cast<size_t>(s)][static_cast<size_t>(a)];
      }
      std::cout << "], v = " << qre.value[static_cast<size_t>(s)] << "\n";
    }
    std::cout << "fixed-point residual: " << qre.fixed_point_residual() << "\n";
  }
  return 0;
}

int cmd_bias_variance(const RunConfig& cfg, const std::string& checkpoint_path,
                      const std::string& lambdas, int rollouts, int oracle_rollouts, int points,
                      const std::string& out_path) {
  const auto spec = cfg.game_spec();
  const auto ckpt = load_checkpoint_for(spec, checkpoint_path);
  const Hyperparameters hp{cfg.alpha, cfg.beta, cfg.lambda, cfg.gamma};
  const auto grid = parse_double_list("lambdas", lambdas);
  if (grid.empty()) throw std::invalid_argument("empty lambda grid");
  const auto eval_points =
      analysis::default_eval_points(spec, ckpt.params, hp, points, derive_seed(cfg.seed, 0xE));
  const auto report = analysis::bias_variance(spec, ckpt.params, hp, grid, eval_points, rollouts,
                                              oracle_rollouts, derive_seed(cfg.seed, 0xB));
  const std::string csv = report.to_csv();
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream os(out_path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + out_path);
    os << csv;
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_sweep(const RunConfig& base, const std::string& alphas, const std::string& betas,
              const std::string& lambdas, const std::string& seeds, const std::string& out_path) {
  const auto alpha_grid = parse_double_list("alphas", alphas);
  const auto beta_grid = parse_double_list("betas", betas);
  const auto lambda_grid = parse_double_list("lambdas", lambdas);
  const auto seed_list = parse_u64_list("seeds", seeds);
  if (alpha_grid.empty() || beta_grid.empty() || lambda_grid.empty() || seed_list.empty())
    throw std::invalid_argument("sweep grids and seeds must be non-empty");

  struct Row {
    double alpha, beta, lambda;
    std::vector<double> winrates;
    std::string error;
  };
  std::vector<Row> rows;
  for (double a : alpha_grid) {
    for (double b : beta_grid) {
      for (double l : lambda_grid) {
        Row row{a, b, l, {}, {}};
        for (uint64_t seed : seed_list) {
          try {
            RunConfig cfg = base;
            cfg.alpha = a;
            cfg.beta = b;
            cfg.lambda = l;
            cfg.seed = seed;
            cfg.eval_cadence = 0;  // only the final evaluation matters here
            auto tc = cfg.train_config();
            const auto result = selfplay::train(tc);
            row.winrates.push_back(
                selfplay::evaluate_winrate(tc, result.params, derive_seed(seed, 0x5EED)));
          } catch (const std::exception& e) {
            row.error = e.what();
          }
        }
        rows.push_back(std::move(row));
      }
    }
  }

  std::ostringstream table;
  table << "alpha,beta,lambda,seeds,mean_winrate,std_winrate,error\n";
  for (const auto& row : rows) {
    double mean = 0.0, sd = 0.0;
    for (double w : row.winrates) mean += w;
    if (!row.winrates.empty()) mean /= static_cast<double>(row.winrates.size());
    for (double w : row.winrates) sd += (w - mean) * (w - mean);
    if (!row.winrates.empty()) sd = std::sqrt(sd / static_cast<double>(row.winrates.size()));
    table << format_double(row.alpha) << "," << format_double(row.beta) << ","
          << format_double(row.lambda) << "," << row.winrates.size() << ",";
    if (row.winrates.empty()) {
      table << ",,\"" << row.error << "\"";
    } else {
      table << format_double(mean) << "," << format_double(sd) << ","
            << (row.error.empty() ? "" : "\"" + row.error + "\"");
    }
    table << "\n";
  }
  std::cout << table.str();
  if (!out_path.empty()) {
    std::ofstream os(out_path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + out_path);
    os << table.str();
  }
  return 0;
}

int cmd_legal_stats(const RunConfig& cfg, int games) {
  analysis::RandomAgent random;
  const auto stats = analysis::legal_action_stats(cfg.game_spec(), games, cfg.seed, random);
  std::cout << "games: " << games << "  states visited: " << stats.states_visited << "\n";
  std::cout << "action space size: " << cfg.game_spec().action_count() << "\n";
  std::cout << "mean legal actions: " << stats.mean << "\n";
  std::cout << "max legal actions:  " << stats.max << "\n";
  return 0;
}

// Registers the shared config flags on a subcommand; returns a map filled at
// parse time, applied over the config file in canonical key order.
std::shared_ptr<std::map<std::string, std::string>> add_config_flags(CLI::App* cmd,
                                                                     bool training_flags,
                                                                     bool io_flags = true) {
  auto values = std::make_shared<std::map<std::string, std::string>>();
  const auto bind = [cmd, values](const std::string& flag, const std::string& key,
                                  const std::string& desc) {
    cmd->add_option_function<std::string>(
        flag, [values, key](const std::string& v) { (*values)[key] = v; }, desc);
  };
  bind("--game", "game", "countup | hex | othello");
  bind("--countup-n", "countup_n", "count-up target N");
  bind("--countup-k", "countup_k", "count-up max increment k");
  bind("--hex-side", "hex_side", "hex board side");
  bind("--othello-side", "othello_side", "othello board side (even)");
  bind("--preset", "preset", "klent | kl-only | ent-only | one-step | monte-carlo");
  bind("--alpha", "alpha", "entropy weight");
  bind("--beta", "beta", "KL weight");
  bind("--lambda", "lambda", "return mixing in [0,1]");
  bind("--gamma", "gamma", "discount in (0,1]");
  bind("--seed", "seed", "RNG seed");
  if (training_flags) {
    bind("--backend", "backend", "tabular | mlp");
    bind("--hidden", "hidden", "mlp hidden widths, comma separated");
    bind("--buffer", "buffer_capacity", "on-policy buffer capacity (samples)");
    bind("--batch", "batch_size", "minibatch size");
    bind("--epochs", "epochs", "epochs per fitting phase");
    bind("--lr", "lr", "learning rate");
    bind("--budget", "budget", "simulator-evaluation budget (plies)");
    bind("--iters", "max_iterations", "iteration cap (0 = none)");
    bind("--eval-cadence", "eval_cadence", "iterations between evals (0 = never)");
    bind("--eval-games", "eval_games", "games per evaluation");
    bind("--eval-opponent", "eval_opponent", "random | optimal-countup");
    bind("--workers", "workers", "parallel episode workers");
    bind("--max-ply", "max_ply", "episode length guard (0 = game default)");
    if (io_flags) {
      bind("--out", "out_dir", "output directory");
      bind("--metrics", "metrics_path", "metrics JSONL path");
    }
  }
  return values;
}

RunConfig resolve_config(const std::string& config_path,
                         const std::map<std::string, std::string>& flag_values) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config_file(config_path);
  for (const auto& key : key_order()) {
    const auto it = flag_values.find(key);
    if (it != flag_values.end()) apply_key_value(cfg, key, it->second);
  }
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"klent: regularized self-play reinforcement learning for small board games"};
  app.require_subcommand(1);
  int exit_code = 0;

  // train
  auto* train = app.add_subcommand("train", "run the self-play training loop");
  std::string train_config_path;
  train->add_option("--config", train_config_path, "key = value config file");
  auto train_flags = add_config_flags(train, true);
  train->callback([&] {
    exit_code = cmd_train(resolve_config(train_config_path, *train_flags));
  });

  // eval
  auto* eval = app.add_subcommand("eval", "play a checkpoint against an opponent");
  std::string eval_config_path;
  eval->add_option("--config", eval_config_path, "key = value config file");
  auto eval_flags = add_config_flags(eval, false);
  auto eval_args = std::make_shared<EvalArgs>();
  eval->add_option("--checkpoint", eval_args->checkpoint, "checkpoint to evaluate")->required();
  eval->add_option("--opponent", eval_args->opponent,
                   "checkpoint path, 'random', or 'optimal-countup' (default random)");
  eval->add_option("--games", eval_args->games, "number of games (default 1024)");
  eval->add_option("--simulations", eval_args->simulations, "search budget per move (0 = greedy)");
  eval->add_option("--c-puct", eval_args->c_puct, "PUCT exploration constant");
  eval->add_option("--anchor", eval_args->anchor, "anchor Elo rating (default 1000)");
  eval->callback([&] {
    exit_code = cmd_eval(resolve_config(eval_config_path, *eval_flags), *eval_args);
  });

  // play
  auto* play = app.add_subcommand("play", "play against a checkpoint in the terminal");
  std::string play_config_path, play_checkpoint;
  int play_simulations = 0, play_human = 0;
  double play_c_puct = 1.25;
  play->add_option("--config", play_config_path, "key = value config file");
  auto play_flags = add_config_flags(play, false);
  play->add_option("--checkpoint", play_checkpoint, "agent checkpoint")->required();
  play->add_option("--simulations", play_simulations, "agent search budget (0 = greedy)");
  play->add_option("--c-puct", play_c_puct, "PUCT exploration constant");
  play->add_option("--human-player", play_human, "which side you play, 0 moves first");
  play->callback([&] {
    exit_code = cmd_play(resolve_config(play_config_path, *play_flags), play_checkpoint,
                         play_simulations, play_c_puct, play_human);
  });

  // solve-countup
  auto* solve = app.add_subcommand("solve-countup", "exact count-up solver");
  int solve_n = 7, solve_k = 2;
  double solve_alpha = 0.0;
  solve->add_option("n", solve_n, "target N")->required();
  solve->add_option("k", solve_k, "max increment k")->required();
  solve->add_option("--alpha", solve_alpha, "also print the QRE at this temperature");
  solve->callback([&] { exit_code = cmd_solve_countup(solve_n, solve_k, solve_alpha); });

  // bias-variance
  auto* bv = app.add_subcommand("bias-variance", "lambda-return bias/variance measurement");
  std::string bv_config_path, bv_checkpoint, bv_out;
  std::string bv_lambdas = "0,0.5,0.8824969025845955,1";
  int bv_rollouts = 1000, bv_oracle = 1000, bv_points = 3;
  bv->add_option("--config", bv_config_path, "key = value config file");
  auto bv_flags = add_config_flags(bv, false);
  bv->add_option("--checkpoint", bv_checkpoint, "frozen checkpoint")->required();
  bv->add_option("--lambdas", bv_lambdas, "lambda grid, comma separated");
  bv->add_option("--rollouts", bv_rollouts, "rollouts per (state, lambda)");
  bv->add_option("--oracle-rollouts", bv_oracle, "Monte Carlo rollouts for the surrogate truth");
  bv->add_option("--points", bv_points, "evaluation (state, action) pairs");
  bv->add_option("--out", bv_out, "CSV output path (default stdout)");
  bv->callback([&] {
    exit_code = cmd_bias_variance(resolve_config(bv_config_path, *bv_flags), bv_checkpoint,
                                  bv_lambdas, bv_rollouts, bv_oracle, bv_points, bv_out);
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "train + eval over an alpha x beta x lambda grid");
  std::string sweep_config_path, sweep_out;
  std::string sweep_alphas = "0.03", sweep_betas = "0.1", sweep_lambdas, sweep_seeds = "1";
  sweep_lambdas = format_double(default_lambda());
  sweep->add_option("--config", sweep_config_path, "key = value base config file");
  auto sweep_flags = add_config_flags(sweep, true, false);
  sweep->add_option("--alphas", sweep_alphas, "alpha grid, comma separated");
  sweep->add_option("--betas", sweep_betas, "beta grid, comma separated");
  sweep->add_option("--lambdas", sweep_lambdas, "lambda grid, comma separated");
  sweep->add_option("--seeds", sweep_seeds, "seeds, comma separated");
  sweep->add_option("--out", sweep_out, "also write the table to this CSV path");
  sweep->callback([&] {
    exit_code = cmd_sweep(resolve_config(sweep_config_path, *sweep_flags), sweep_alphas,
                          sweep_betas, sweep_lambdas, sweep_seeds, sweep_out);
  });

  // legal-stats
  auto* stats = app.add_subcommand("legal-stats", "legal-action statistics under random play");
  std::string stats_config_path;
  int stats_games = 1000;
  stats->add_option("--config", stats_config_path, "key = value config file");
  auto stats_flags = add_config_flags(stats, false);
  stats->add_option("--games", stats_games, "playouts to sample");
  stats->callback([&] {
    exit_code = cmd_legal_stats(resolve_config(stats_config_path, *stats_flags), stats_games);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}

}  // namespace klent::cli
