#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "exitrl/curriculum.hpp"
#include "exitrl/grpo.hpp"
#include "exitrl/policy.hpp"
#include "exitrl/sidp.hpp"

namespace exitrl::config {

// Full ablation ladder. Each level implies the mechanisms of the previous:
//   grpo        — plain GRPO on base tasks, no buffer
//   curriculum  — learnability-prioritized replay of base tasks only
//   improve     — plus self-iteration instances (Improve steps)
//   diverge     — plus divergence steps with probability p_div
//   full        — plus the embedding diversity bonus
enum class AblationLevel { Grpo, Curriculum, Improve, Diverge, Full };

struct EnvBlock {
  sidp::EnvKind kind = sidp::EnvKind::BitstringRepair;
  std::uint32_t length = 12;       // BitstringRepair L
  double corruption_prob = 0.25;   // BitstringRepair q
  std::uint32_t turns = 6;         // MultiTurnKeySequence T
  std::uint32_t vocab = 8;         // MultiTurnKeySequence V
  std::uint32_t num_base_tasks = 64;
  std::uint32_t hash_features = 64;  // key-sequence featurization width
  sidp::FeedbackMode feedback = sidp::FeedbackMode::Scalar;
  sidp::RewardShaping reward_shaping = sidp::RewardShaping::Delta;
  sidp::QualityRange quality_range{};
};

struct GrpoBlock {
  std::uint32_t group_size = 8;  // G
  double epsilon = 0.2;
  double beta = 0.001;
  double learning_rate = 0.05;
  double weight_decay = 0.002;
  std::uint32_t epochs_per_batch = 1;
  std::uint32_t prompts_per_batch = 8;
  std::uint32_t ref_update_interval = 100;  // M
  double ref_update_alpha = 1.0;            // alpha
  grpo::LossAggregation aggregation = grpo::LossAggregation::PerRolloutMean;
  bool invalid_in_baseline = false;
  bool skip_degenerate_groups = false;
  policy::OptimizerKind optimizer = policy::OptimizerKind::Adam;
};

enum class ExpansionRule { Median, Best, Worst, Random };

struct ExitBlock {
  std::size_t buffer_capacity = 128;  // N
  std::size_t buffer_min_size = 32;   // B_min
  double selection_prob = 0.5;        // p
  double divergence_prob = 0.2;       // p_div
  double kappa = 1.0;
  ExpansionRule expansion_rule = ExpansionRule::Median;
  bool diversity_bonus = true;
  AblationLevel ablation = AblationLevel::Full;
};

struct HarnessBlock {
  std::uint64_t iterations = 200;
  std::uint64_t master_seed = 1;
  std::uint32_t eval_k = 8;
  std::uint32_t eval_task_count = 200;
  std::uint32_t eval_samples = 8;
  std::string output_dir = "run";
  std::uint64_t checkpoint_every = 0;  // 0: final checkpoint only
  bool log_rollouts = true;
  bool log_embeddings = false;
};

struct RunConfig {
  EnvBlock env;
  GrpoBlock grpo;
  ExitBlock exit;
  HarnessBlock harness;

  // Throws ConfigError on any violated invariant, including ablation-level
  // consistency (e.g. curriculum forces p_div = 0 and no diversity bonus).
  void validate() const;

  curriculum::BufferConfig buffer_config() const;
  sidp::EnvOptions env_options() const;
  // Featurization for this run's environment.
  policy::EnvFeaturizer make_featurizer() const;
  std::uint32_t env_alphabet() const;

  // The fixed base task set, derived from the master seed.
  std::vector<sidp::BaseTask> make_base_tasks() const;
  // Held-out tasks on a disjoint seed stream.
  std::vector<sidp::BaseTask> make_eval_tasks(std::uint32_t count) const;
};

// Parse the JSON config file. Unknown keys anywhere are rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);
std::string dump_config(const RunConfig& config);

// Task list file: {"tasks": [{"task_id", "env_kind", "seed", env params...}]}.
std::vector<sidp::BaseTask> load_tasks_file(const std::filesystem::path& path);

const char* to_string(AblationLevel level);

}  // namespace exitrl::config
