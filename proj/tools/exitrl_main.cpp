#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "exitrl/checkpoint.hpp"
#include "exitrl/config.hpp"
#include "exitrl/error.hpp"
#include "exitrl/evaluate.hpp"
#include "exitrl/reports.hpp"
#include "exitrl/train.hpp"

namespace {

using namespace exitrl;

int cmd_train(const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::string& out_dir, const std::string& resume_path) {
  auto cfg = config::load_config(config_path);
  if (seed_set) cfg.harness.master_seed = seed;
  if (!out_dir.empty()) cfg.harness.output_dir = out_dir;
  cfg.validate();

  harness::TrainResult result = resume_path.empty()
                                    ? harness::train(cfg)
                                    : harness::resume_training(cfg, resume_path);
  std::printf("wrote %s\n", result.metrics_path.string().c_str());
  if (cfg.harness.log_rollouts)
    std::printf("wrote %s\n", result.rollouts_path.string().c_str());
  std::printf("wrote %s\n", result.checkpoint_path.string().c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, int k, bool k_set,
             const std::string& tasks_path, int n, bool n_set) {
  auto state = harness::load_checkpoint(checkpoint_path);
  const auto& cfg = state.config;

  std::vector<sidp::BaseTask> tasks =
      tasks_path.empty() ? cfg.make_eval_tasks(cfg.harness.eval_task_count)
                         : config::load_tasks_file(tasks_path);
  const std::uint32_t steps = k_set ? static_cast<std::uint32_t>(k) : cfg.harness.eval_k;
  const std::uint32_t samples = n_set ? static_cast<std::uint32_t>(n) : cfg.harness.eval_samples;

  const auto featurizer = cfg.make_featurizer();
  const std::uint64_t eval_seed = hash_combine(cfg.harness.master_seed, hash_str("eval"));
  auto result = harness::evaluate_k_step(state.theta, featurizer, tasks, steps,
                                         cfg.env_options(), samples, eval_seed);

  nlohmann::json out{{"tasks", result.task_count},
                     {"turns", result.turn_count},
                     {"steps", result.steps},
                     {"samples", samples},
                     {"accuracy_at", result.accuracy_at},
                     {"mean_quality_at", result.mean_quality_at},
                     {"net_corrections", result.net_corrections},
                     {"delta_k", result.delta_k},
                     {"generations", result.generations}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& kind) {
  const std::filesystem::path dir = run_dir;
  const bool want_curriculum = kind.empty() || kind == "curriculum";
  const bool want_diversity = kind.empty() || kind == "diversity";

  if (want_curriculum) {
    auto report = reports::curriculum_report(dir / "metrics.csv");
    std::cout << reports::to_json_string(report) << "\n";
  }
  if (want_diversity) {
    auto state = harness::load_checkpoint(dir / "checkpoint.json");
    auto report = reports::diversity_report(dir / "rollouts.jsonl",
                                            state.config.env.num_base_tasks);
    std::cout << reports::to_json_string(report) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exitrl: autocurriculum GRPO training on self-improvement tasks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume_path;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "Run the training loop");
  train->add_option("--config", config_path, "Run config (JSON)")->required();
  auto* seed_opt = train->add_option("--seed", seed, "Override the master seed");
  train->add_option("--out", out_dir, "Override the output directory");
  train->add_option("--resume", resume_path, "Continue from a checkpoint file");

  std::string checkpoint_path, tasks_path;
  int k = 0, n = 0;
  auto* eval = app.add_subcommand("eval", "K-step self-improvement evaluation");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  auto* k_opt = eval->add_option("--k", k, "Self-improvement steps per turn");
  eval->add_option("--tasks", tasks_path, "Task list file (JSON)");
  auto* n_opt = eval->add_option("--n", n, "Samples per task (avg@n)");

  std::string run_dir, kind;
  auto* report = app.add_subcommand("report", "Curriculum / diversity reports for a run");
  report->add_option("--run", run_dir, "Run output directory")->required();
  report->add_option("--kind", kind, "curriculum or diversity (default: both)")
      ->check(CLI::IsMember({"curriculum", "diversity"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train))
      return cmd_train(config_path, seed, seed_opt->count() > 0, out_dir, resume_path);
    if (app.got_subcommand(eval))
      return cmd_eval(checkpoint_path, k, k_opt->count() > 0, tasks_path, n,
                      n_opt->count() > 0);
    return cmd_report(run_dir, kind);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
