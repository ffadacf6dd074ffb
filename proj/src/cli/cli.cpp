#include "mtrl/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mtrl/a2c/a2c.hpp"
#include "mtrl/distill/distill.hpp"
#include "mtrl/errors.hpp"
#include "mtrl/eval/evaluate.hpp"
#include "mtrl/io/checkpoint.hpp"
#include "mtrl/io/config.hpp"
#include "mtrl/io/text.hpp"
#include "mtrl/trainers/trainers.hpp"

namespace mtrl {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Flat key = value configuration file");
  cmd->add_option("--seed", o.seed, "Random seed (overrides the config file)");
  cmd->add_option("--out-dir", o.out_dir, "Directory for checkpoint, curve and manifest files");
}

io::KeyValues load_config(const CommonOptions& o) {
  io::KeyValues kv = o.config_path.empty() ? io::KeyValues{} : io::KeyValues::load(o.config_path);
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  return kv;
}

void reject_unused(const io::KeyValues& kv) {
  const auto unused = kv.unused();
  if (unused.empty()) return;
  std::string msg = "unknown config key(s):";
  for (const auto& k : unused) msg += " " + k;
  throw ConfigError(msg);
}

fs::path prepare_out_dir(const CommonOptions& o) {
  fs::path dir(o.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ",") + x;
  return out;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    std::map<std::string, std::string> resolved,
                    const std::map<std::string, std::string>& run_info) {
  resolved["run.command"] = command;
  resolved["run.version"] = kVersion;
  resolved["run.checkpoint_format"] = std::to_string(io::kCheckpointFormatVersion);
  for (const auto& [k, v] : run_info) resolved["run." + k] = v;
  std::ofstream out(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
  out << "# mtrl run manifest; replay with --config manifest.txt\n";
  out << io::KeyValues(std::move(resolved)).to_text();
}

void print_curve_tail(std::ostream& out, const std::vector<eval::CurveRow>& rows) {
  std::map<std::string, const eval::CurveRow*> last;
  for (const auto& r : rows) last[r.env_name] = &r;
  for (const auto& [env, r] : last) {
    out << env << ": steps " << r->env_steps << ", return " << r->mean_return << " +- "
        << r->std_return << "\n";
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task actor-critic training on CheetahLite environments", "mtrl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions common;

  auto* envs_cmd = app.add_subcommand("envs", "List environment variants");
  add_common(envs_cmd, common);

  auto* train_cmd = app.add_subcommand("train", "Single-task A2C from scratch");
  add_common(train_cmd, common);
  std::string train_env = "Base";
  std::optional<long long> train_steps;
  train_cmd->add_option("--env", train_env, "Environment variant");
  train_cmd->add_option("--steps", train_steps, "Total environment steps");

  auto* mt_cmd = app.add_subcommand("multitask", "Vanilla multi-task A2C with environment cycling");
  add_common(mt_cmd, common);
  std::vector<std::string> mt_envs = env::task_variants();
  std::optional<long long> mt_steps;
  std::optional<long long> mt_visit;
  mt_cmd->add_option("--envs", mt_envs, "Environment variants, one head each")->delimiter(',');
  mt_cmd->add_option("--steps-per-env", mt_steps, "Environment steps per environment");
  mt_cmd->add_option("--steps-per-visit", mt_visit, "Environment steps per visit");

  auto* distill_cmd = app.add_subcommand("distill", "Distil teacher checkpoints into a student");
  add_common(distill_cmd, common);
  std::vector<std::string> distill_envs;
  std::vector<std::string> teacher_paths;
  bool distill_multitask = false;
  std::optional<long long> distill_steps;
  distill_cmd->add_option("--envs", distill_envs, "Environment for each teacher")
      ->delimiter(',')
      ->required();
  distill_cmd->add_option("--teacher", teacher_paths, "Teacher checkpoint (repeat per env)")
      ->required();
  distill_cmd->add_flag("--multitask", distill_multitask,
                        "One student head per environment, student-sampled rollouts");
  distill_cmd->add_option("--steps", distill_steps, "Environment steps per environment");

  auto* ft_cmd = app.add_subcommand("finetune", "Transfer a single-task checkpoint to a new env");
  add_common(ft_cmd, common);
  std::string ft_source;
  std::string ft_env;
  bool ft_full = false;
  std::optional<long long> ft_steps;
  ft_cmd->add_option("--source", ft_source, "Source checkpoint")->required();
  ft_cmd->add_option("--env", ft_env, "Target environment")->required();
  ft_cmd->add_flag("--full-network", ft_full, "Fine-tune every layer, not just the last");
  ft_cmd->add_option("--steps", ft_steps, "Total environment steps");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval_cmd, common);
  std::string eval_ckpt;
  std::vector<std::string> eval_envs;
  std::optional<int> eval_n;
  bool eval_det = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--envs", eval_envs, "Environments (default: the checkpoint's)")
      ->delimiter(',');
  eval_cmd->add_option("--n-rollouts", eval_n, "Rollouts per environment (default 20)");
  eval_cmd->add_flag("--eval-deterministic", eval_det, "Act with the policy mean");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*envs_cmd) {
      for (auto name : env::variant_names()) out << name << "\n";
      return 0;
    }

    auto kv = load_config(common);

    if (*train_cmd) {
      if (train_steps) kv.set("total_env_steps", std::to_string(*train_steps));
      const auto config = a2c::TrainConfig::from_key_values(kv);
      reject_unused(kv);
      const auto dir = prepare_out_dir(common);
      const auto result = a2c::train_single(train_env, config);
      io::save_checkpoint(result.checkpoint, dir / "checkpoint.json");
      eval::write_curve(result.curve, dir / "curve.csv");
      write_manifest(dir, "train", a2c::to_key_values(config), {{"env", train_env}});
      print_curve_tail(out, result.curve);
      return 0;
    }

    if (*mt_cmd) {
      if (mt_steps) kv.set("total_steps_per_env", std::to_string(*mt_steps));
      if (mt_visit) kv.set("steps_per_visit", std::to_string(*mt_visit));
      const auto config = a2c::TrainConfig::from_key_values(kv);
      trainers::MultiTaskSchedule schedule;
      schedule.env_names = mt_envs;
      schedule.steps_per_visit = kv.get_int("steps_per_visit", config.t_max);
      schedule.total_steps_per_env = kv.get_int("total_steps_per_env", 50000);
      reject_unused(kv);
      const auto dir = prepare_out_dir(common);
      const auto result = trainers::train_vanilla_multitask(schedule, config);
      io::save_checkpoint(result.checkpoint, dir / "checkpoint.json");
      eval::write_curve(result.curves, dir / "curve.csv");
      auto resolved = a2c::to_key_values(config);
      resolved["steps_per_visit"] = std::to_string(schedule.steps_per_visit);
      resolved["total_steps_per_env"] = std::to_string(schedule.total_steps_per_env);
      write_manifest(dir, "multitask", resolved, {{"envs", join(mt_envs)}});
      print_curve_tail(out, result.curves);
      return 0;
    }

    if (*distill_cmd) {
      if (distill_steps) kv.set("total_env_steps", std::to_string(*distill_steps));
      const auto config = distill::DistillConfig::from_key_values(kv);
      reject_unused(kv);
      if (teacher_paths.size() != distill_envs.size()) {
        throw std::invalid_argument("distill: " + std::to_string(teacher_paths.size()) +
                                    " teachers for " + std::to_string(distill_envs.size()) +
                                    " environments");
      }
      if (!distill_multitask && distill_envs.size() != 1) {
        throw std::invalid_argument("distill: single-env mode takes exactly one env; use --multitask");
      }
      std::vector<policy::ActorNetwork> teachers;
      for (const auto& p : teacher_paths) teachers.push_back(io::load_checkpoint(p).actor);
      const auto dir = prepare_out_dir(common);
      const auto result =
          distill_multitask ? distill::train_distill_multitask(distill_envs, teachers, config)
                            : distill::train_distill_single(distill_envs.front(), teachers.front(), config);
      io::save_checkpoint(result.checkpoint, dir / "checkpoint.json");
      eval::write_curve(result.curves, dir / "curve.csv");
      auto resolved = distill::to_key_values(config);
      write_manifest(dir, "distill", resolved,
                     {{"envs", join(distill_envs)},
                      {"teachers", join(teacher_paths)},
                      {"multitask", distill_multitask ? "true" : "false"}});
      for (const auto& k : result.kl) {
        out << k.env_name << ": KL " << k.initial_kl << " -> " << k.final_kl << "\n";
      }
      print_curve_tail(out, result.curves);
      return 0;
    }

    if (*ft_cmd) {
      if (ft_steps) kv.set("total_env_steps", std::to_string(*ft_steps));
      const auto config = a2c::TrainConfig::from_key_values(kv);
      ft_full = kv.get_bool("full_network", ft_full);
      reject_unused(kv);
      const auto source = io::load_checkpoint(ft_source);
      const auto dir = prepare_out_dir(common);
      const auto result = trainers::transfer_and_finetune(source, ft_env, config, {ft_full});
      io::save_checkpoint(result.checkpoint, dir / "checkpoint.json");
      eval::write_curve(result.curve, dir / "curve.csv");
      auto resolved = a2c::to_key_values(config);
      resolved["full_network"] = ft_full ? "true" : "false";
      write_manifest(dir, "finetune", resolved, {{"env", ft_env}, {"source", ft_source}});
      print_curve_tail(out, result.curve);
      return 0;
    }

    if (*eval_cmd) {
      eval::EvalOptions opts;
      opts.n_rollouts = static_cast<int>(kv.get_int("eval_rollouts", eval::kDefaultRollouts));
      if (eval_n) opts.n_rollouts = *eval_n;
      opts.deterministic = kv.get_bool("eval_deterministic", false) || eval_det;
      opts.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
      reject_unused(kv);
      if (opts.n_rollouts < 1) throw ConfigError("n_rollouts must be >= 1");
      const auto checkpoint = io::load_checkpoint(eval_ckpt);
      if (eval_envs.empty()) eval_envs = checkpoint.env_names;
      const auto reports = trainers::evaluate_matrix(checkpoint, eval_envs, opts);
      out << trainers::format_report(reports);
      if (!common.out_dir.empty()) {
        const auto dir = prepare_out_dir(common);
        std::ofstream csv(dir / "report.csv", std::ios::binary | std::ios::trunc);
        csv << "env,n_rollouts,mean_return,std_return\n";
        for (const auto& r : reports) {
          csv << r.env_name << ',' << r.n_rollouts << ',' << io::format_double_fixed(r.mean_return)
              << ',' << io::format_double_fixed(r.std_return) << '\n';
        }
        write_manifest(dir, "eval",
                       {{"eval_rollouts", std::to_string(opts.n_rollouts)},
                        {"eval_deterministic", opts.deterministic ? "true" : "false"},
                        {"seed", std::to_string(opts.seed)}},
                       {{"checkpoint", eval_ckpt}, {"envs", join(eval_envs)}});
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mtrl
