#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mtrl/cli.hpp"
#include "mtrl/io/checkpoint.hpp"
#include "mtrl/io/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mtrl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = mtrl::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mtrl_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Small budgets so every subcommand finishes in well under a second.
const std::string kQuickConfig = "eval_every = 100\neval_rollouts = 2\n";

}  // namespace

TEST_CASE("cli envs lists the seven variants") {
  const auto r = run({"envs"});
  CHECK(r.code == 0);
  CHECK(r.out == "Base\nSmallMass\nBigMass\nSmallDrag\nBigDrag\nSmallForce\nBigForce\n");
}

TEST_CASE("cli train writes checkpoint, curve and a manifest with the default hyperparameters") {
  const auto dir = temp_dir("train");
  const auto r = run({"train", "--env", "Base", "--steps", "200", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "checkpoint.json"));
  CHECK(fs::exists(dir / "curve.csv"));
  const auto manifest = mtrl::io::KeyValues::load(dir / "manifest.txt");
  CHECK(manifest.get_string("lr", "") == "0.0007");
  CHECK(manifest.get_string("t_max", "") == "5");
  CHECK(manifest.get_string("entropy_coef", "") == "0.01");
  CHECK(manifest.get_string("gamma", "") == "0.99");
  CHECK(manifest.get_string("eval_rollouts", "") == "20");
  CHECK(manifest.get_string("seed", "") == "0");
  CHECK(manifest.get_string("run.command", "") == "train");
  CHECK(manifest.get_string("run.env", "") == "Base");
  const auto ck = mtrl::io::load_checkpoint(dir / "checkpoint.json");
  CHECK(ck.kind == "single");
  CHECK(ck.config.at("lr") == "0.0007");
}

TEST_CASE("cli rejects unknown flags, subcommands and config keys") {
  auto r = run({"train", "--bogus"});
  CHECK(r.code != 0);
  CHECK_FALSE(r.err.empty());
  r = run({"frobnicate"});
  CHECK(r.code != 0);
  r = run({});
  CHECK(r.code != 0);

  const auto dir = temp_dir("badkey");
  write_file(dir / "c.txt", "learning_rate = 0.1\n");
  r = run({"train", "--config", (dir / "c.txt").string(), "--out-dir", dir.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("learning_rate") != std::string::npos);
  r = run({"train", "--env", "Nowhere", "--steps", "5", "--out-dir", dir.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("SmallMass") != std::string::npos);
}

TEST_CASE("cli runs are reproducible and replayable from the manifest") {
  const auto root = temp_dir("repro");
  write_file(root / "c.txt", kQuickConfig);
  const std::vector<std::string> base{"train", "--env", "SmallDrag", "--steps", "300", "--seed", "5",
                                      "--config", (root / "c.txt").string()};
  auto a = base, b = base;
  a.insert(a.end(), {"--out-dir", (root / "a").string()});
  b.insert(b.end(), {"--out-dir", (root / "b").string()});
  REQUIRE(run(a).code == 0);
  REQUIRE(run(b).code == 0);
  for (const char* f : {"checkpoint.json", "curve.csv", "manifest.txt"})
    CHECK(read_file(root / "a" / f) == read_file(root / "b" / f));

  const auto replay = run({"train", "--env", "SmallDrag", "--config", (root / "a" / "manifest.txt").string(),
                           "--out-dir", (root / "r").string()});
  REQUIRE(replay.code == 0);
  CHECK(read_file(root / "a" / "checkpoint.json") == read_file(root / "r" / "checkpoint.json"));
  CHECK(read_file(root / "a" / "curve.csv") == read_file(root / "r" / "curve.csv"));
}

TEST_CASE("cli multitask, distill, finetune and eval pipelines") {
  const auto root = temp_dir("pipeline");
  write_file(root / "c.txt", kQuickConfig);
  const auto cfg = (root / "c.txt").string();

  auto r = run({"multitask", "--envs", "SmallMass,BigDrag", "--steps-per-env", "200", "--config", cfg,
                "--out-dir", (root / "mt").string()});
  REQUIRE(r.code == 0);
  auto ck = mtrl::io::load_checkpoint(root / "mt" / "checkpoint.json");
  CHECK(ck.kind == "multitask");
  CHECK(ck.actor.num_heads() == 2);
  const auto mt_manifest = mtrl::io::KeyValues::load(root / "mt" / "manifest.txt");
  CHECK(mt_manifest.get_string("steps_per_visit", "") == "5");
  CHECK(mt_manifest.get_string("total_steps_per_env", "") == "200");

  for (const char* env : {"SmallMass", "BigDrag"}) {
    r = run({"train", "--env", env, "--steps", "200", "--config", cfg, "--out-dir",
             (root / env).string()});
    REQUIRE(r.code == 0);
  }
  r = run({"distill", "--multitask", "--envs", "SmallMass,BigDrag", "--teacher",
           (root / "SmallMass" / "checkpoint.json").string(), "--teacher",
           (root / "BigDrag" / "checkpoint.json").string(), "--steps", "200", "--config", cfg,
           "--out-dir", (root / "distill").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("KL") != std::string::npos);
  ck = mtrl::io::load_checkpoint(root / "distill" / "checkpoint.json");
  CHECK(ck.kind == "distill");
  CHECK_FALSE(ck.critic.has_value());

  r = run({"distill", "--envs", "SmallMass,BigDrag", "--teacher",
           (root / "SmallMass" / "checkpoint.json").string(), "--teacher",
           (root / "BigDrag" / "checkpoint.json").string(), "--out-dir", (root / "bad").string()});
  CHECK(r.code != 0);

  r = run({"finetune", "--source", (root / "SmallMass" / "checkpoint.json").string(), "--env",
           "SmallDrag", "--steps", "200", "--config", cfg, "--out-dir", (root / "ft").string()});
  REQUIRE(r.code == 0);
  ck = mtrl::io::load_checkpoint(root / "ft" / "checkpoint.json");
  CHECK(ck.kind == "finetune");
  CHECK(ck.config.at("full_network") == "false");

  r = run({"eval", "--checkpoint", (root / "mt" / "checkpoint.json").string(), "--out-dir",
           (root / "ev").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("SmallMass") != std::string::npos);
  const auto report = read_file(root / "ev" / "report.csv");
  CHECK(report.rfind("env,n_rollouts,mean_return,std_return\n", 0) == 0);
  CHECK(report.find("SmallMass,20,") != std::string::npos);
  CHECK(report.find("BigDrag,20,") != std::string::npos);

  r = run({"eval", "--checkpoint", (root / "missing.json").string()});
  CHECK(r.code != 0);
}
