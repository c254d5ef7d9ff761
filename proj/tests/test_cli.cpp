#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "klent/cli.hpp"

using namespace klent;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  std::vector<const char*> argv{"klent"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("cli_test") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all("cli_test"); }
  std::string str(const std::string& child = "") const { return (path / child).string(); }
};

std::vector<std::string> tiny_train_args(const std::string& out) {
  return {"train",          "--game", "countup", "--budget", "1500", "--buffer", "256",
          "--batch",        "64",     "--eval-cadence", "2",  "--eval-games", "16",
          "--seed",         "4",      "--out",   out};
}

}  // namespace

TEST_CASE("presets expand to the ablation table") {
  cli::RunConfig cfg;
  const double lam = default_lambda();
  cli::apply_preset(cfg, "klent");
  CHECK(cfg.alpha == 0.03);
  CHECK(cfg.beta == 0.1);
  CHECK(cfg.lambda == lam);
  cli::apply_preset(cfg, "kl-only");
  CHECK(cfg.alpha == 0.0);
  CHECK(cfg.beta == 0.1);
  CHECK(cfg.lambda == lam);
  cli::apply_preset(cfg, "ent-only");
  CHECK(cfg.alpha == 0.03);
  CHECK(cfg.beta == 0.0);
  CHECK(cfg.lambda == lam);
  cli::apply_preset(cfg, "one-step");
  CHECK(cfg.alpha == 0.03);
  CHECK(cfg.beta == 0.1);
  CHECK(cfg.lambda == 0.0);
  cli::apply_preset(cfg, "monte-carlo");
  CHECK(cfg.lambda == 1.0);
  CHECK_THROWS(cli::apply_preset(cfg, "alphazero"));
}

TEST_CASE("explicit values override a preset in application order") {
  cli::RunConfig cfg;
  cli::apply_key_value(cfg, "preset", "kl-only");
  cli::apply_key_value(cfg, "alpha", "0.25");
  CHECK(cfg.alpha == 0.25);
  CHECK(cfg.beta == 0.1);
}

TEST_CASE("config serialization round-trips") {
  TempDir tmp("roundtrip");
  cli::RunConfig cfg;
  cli::apply_key_value(cfg, "game", "hex");
  cli::apply_key_value(cfg, "hex_side", "4");
  cli::apply_key_value(cfg, "preset", "one-step");
  cli::apply_key_value(cfg, "lr", "0.0025");
  cli::apply_key_value(cfg, "out_dir", tmp.str("x"));
  const std::string text = cli::serialize_config(cfg);
  {
    std::ofstream os(tmp.str("config.txt"));
    os << text;
  }
  const auto loaded = cli::load_config_file(tmp.str("config.txt"));
  CHECK(cli::serialize_config(loaded) == text);
  CHECK(cli::config_hash(cli::serialize_config(loaded)) == cli::config_hash(text));
  CHECK(loaded.lr == 0.0025);
  CHECK(loaded.game_spec().action_count() == 16);
}

TEST_CASE("config parsing rejects junk") {
  cli::RunConfig cfg;
  CHECK_THROWS(cli::apply_key_value(cfg, "no_such_key", "1"));
  CHECK_THROWS(cli::apply_key_value(cfg, "alpha", "abc"));
  CHECK_THROWS(cli::apply_key_value(cfg, "budget", "-3"));
  CHECK_THROWS(cli::apply_key_value(cfg, "game", "go"));
  CHECK_THROWS(cli::apply_key_value(cfg, "backend", "transformer"));
  CHECK_THROWS(cli::apply_key_value(cfg, "eval_opponent", "stockfish"));
  CHECK_THROWS(cli::load_config_file("missing_config.txt"));
}

TEST_CASE("train writes config, metrics and checkpoints; reruns are byte-identical") {
  TempDir tmp("train");
  const std::string out = tmp.str("run1");
  REQUIRE(run(tiny_train_args(out)) == 0);
  CHECK(fs::exists(out + "/config.txt"));
  CHECK(fs::exists(out + "/latest.bin"));
  const std::string metrics1 = slurp(out + "/metrics.jsonl");
  CHECK(!metrics1.empty());

  SUBCASE("metrics lines are self-describing records") {
    std::istringstream is(metrics1);
    std::string line;
    int lines = 0;
    bool saw_eval = false;
    while (std::getline(is, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j.at("schema") == "klent.metrics.v1");
      CHECK(j.contains("iteration"));
      CHECK(j.contains("sim_evals"));
      CHECK(j.contains("loss"));
      CHECK(j.contains("entropy"));
      CHECK(j.contains("episode_length"));
      saw_eval = saw_eval || j.contains("eval_winrate");
      ++lines;
    }
    CHECK(lines >= 5);
    CHECK(saw_eval);
  }
  SUBCASE("rerunning from the written config reproduces the stream bit for bit") {
    REQUIRE(run({"train", "--config", out + "/config.txt"}) == 0);
    CHECK(slurp(out + "/metrics.jsonl") == metrics1);
  }
  SUBCASE("the archived config carries resolved paths and hashes stably") {
    const auto cfg = cli::load_config_file(out + "/config.txt");
    CHECK(cfg.out_dir == out);
    CHECK(cfg.metrics_path == out + "/metrics.jsonl");
  }
}

TEST_CASE("eval plays a trained checkpoint") {
  TempDir tmp("eval");
  const std::string out = tmp.str("run");
  REQUIRE(run(tiny_train_args(out)) == 0);
  CHECK(run({"eval", "--game", "countup", "--checkpoint", out + "/latest.bin", "--opponent",
             "random", "--games", "20", "--seed", "2"}) == 0);
  CHECK(run({"eval", "--game", "countup", "--checkpoint", out + "/latest.bin", "--opponent",
             "optimal-countup", "--games", "10", "--simulations", "8"}) == 0);
  SUBCASE("game/checkpoint mismatch is an error") {
    CHECK(run({"eval", "--game", "hex", "--hex-side", "3", "--checkpoint", out + "/latest.bin"}) ==
          1);
  }
  SUBCASE("checkpoint against itself") {
    CHECK(run({"eval", "--game", "countup", "--checkpoint", out + "/latest.bin", "--opponent",
               out + "/latest.bin", "--games", "10"}) == 0);
  }
}

TEST_CASE("solver and measurement subcommands") {
  TempDir tmp("tools");
  CHECK(run({"solve-countup", "7", "2"}) == 0);
  CHECK(run({"solve-countup", "7", "2", "--alpha", "1.0"}) == 0);
  CHECK(run({"solve-countup", "3", "5"}) == 0);

  const std::string out = tmp.str("run");
  REQUIRE(run(tiny_train_args(out)) == 0);
  const std::string csv = tmp.str("bv.csv");
  CHECK(run({"bias-variance", "--game", "countup", "--checkpoint", out + "/latest.bin",
             "--lambdas", "0,1", "--rollouts", "50", "--oracle-rollouts", "50", "--points", "2",
             "--out", csv}) == 0);
  const std::string content = slurp(csv);
  CHECK(content.rfind("lambda,bias_squared,variance,mse,stderr\n", 0) == 0);
  CHECK(std::count(content.begin(), content.end(), '\n') == 3);

  CHECK(run({"legal-stats", "--game", "othello", "--games", "50"}) == 0);
}

TEST_CASE("sweep") {
  TempDir tmp("sweep");
  const std::string csv = tmp.str("sweep.csv");
  CHECK(run({"sweep", "--game", "countup", "--budget", "600", "--buffer", "128", "--batch", "64",
             "--eval-games", "16", "--alphas", "0.03", "--betas", "0.1", "--lambdas", "0.5",
             "--seeds", "1,2", "--out", csv}) == 0);
  const std::string content = slurp(csv);
  CHECK(content.rfind("alpha,beta,lambda,seeds,mean_winrate,std_winrate,error\n", 0) == 0);
  CHECK(std::count(content.begin(), content.end(), '\n') == 2);

  SUBCASE("degenerate cells are recorded, not fatal") {
    const std::string csv2 = tmp.str("sweep2.csv");
    CHECK(run({"sweep", "--game", "countup", "--budget", "600", "--buffer", "128", "--batch", "64",
               "--alphas", "0,0.03", "--betas", "0", "--lambdas", "0.5", "--seeds", "1", "--out",
               csv2}) == 0);
    const std::string content2 = slurp(csv2);
    CHECK(content2.find("alpha + beta") != std::string::npos);  // (0, 0) cell failed
    CHECK(std::count(content2.begin(), content2.end(), '\n') == 3);
  }
}

TEST_CASE("cli error handling") {
  CHECK(run({"no-such-command"}) != 0);
  CHECK(run({}) != 0);
  CHECK(run({"train", "--game", "countup", "--lambda", "2.0", "--budget", "100"}) == 1);
  CHECK(run({"eval", "--game", "countup"}) != 0);  // missing required checkpoint
  CHECK(run({"eval", "--game", "countup", "--checkpoint", "nope.bin"}) == 1);
  CHECK(run({"train", "--config", "does_not_exist.txt"}) == 1);
}

TEST_CASE("out root environment variable") {
  TempDir tmp("envroot");
  setenv("KLENT_OUT_ROOT", tmp.str("root").c_str(), 1);
  cli::RunConfig cfg;
  CHECK(cfg.resolved_out_dir() == tmp.str("root") + "/countup-klent-seed1");
  unsetenv("KLENT_OUT_ROOT");
}

TEST_CASE("play exits cleanly on end of input") {
#ifdef KLENT_BINARY_PATH
  TempDir tmp("play");
  const std::string out = tmp.str("run");
  REQUIRE(run(tiny_train_args(out)) == 0);
  const std::string cmd = std::string(KLENT_BINARY_PATH) + " play --game countup --checkpoint " +
                          out + "/latest.bin < /dev/null > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
#endif
}
