#include "exitrl/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "exitrl/error.hpp"
#include "exitrl/rng.hpp"

namespace exitrl::config {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& block, std::initializer_list<const char*> known,
                         const std::string& scope) {
  for (const auto& [key, value] : block.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw ConfigError("config: unknown key '" + scope + "." + key + "'");
  }
}

template <typename T>
void read(const json& block, const char* key, T& out) {
  if (!block.contains(key)) return;
  try {
    out = block.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

sidp::EnvKind parse_env_kind(const std::string& s) {
  if (s == "bitstring_repair") return sidp::EnvKind::BitstringRepair;
  if (s == "multi_turn_key_sequence") return sidp::EnvKind::MultiTurnKeySequence;
  throw ConfigError("config: unknown env kind '" + s + "'");
}

sidp::FeedbackMode parse_feedback(const std::string& s) {
  if (s == "none") return sidp::FeedbackMode::None;
  if (s == "scalar") return sidp::FeedbackMode::Scalar;
  if (s == "per_position") return sidp::FeedbackMode::PerPosition;
  throw ConfigError("config: unknown feedback mode '" + s + "'");
}

sidp::RewardShaping parse_shaping(const std::string& s) {
  if (s == "delta") return sidp::RewardShaping::Delta;
  if (s == "absolute") return sidp::RewardShaping::Absolute;
  throw ConfigError("config: unknown reward shaping '" + s + "'");
}

grpo::LossAggregation parse_aggregation(const std::string& s) {
  if (s == "per_rollout") return grpo::LossAggregation::PerRolloutMean;
  if (s == "global_token") return grpo::LossAggregation::GlobalTokenMean;
  throw ConfigError("config: unknown loss aggregation '" + s + "'");
}

policy::OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return policy::OptimizerKind::Adam;
  if (s == "ascent") return policy::OptimizerKind::Ascent;
  throw ConfigError("config: unknown optimizer '" + s + "'");
}

ExpansionRule parse_expansion(const std::string& s) {
  if (s == "median") return ExpansionRule::Median;
  if (s == "best") return ExpansionRule::Best;
  if (s == "worst") return ExpansionRule::Worst;
  if (s == "random") return ExpansionRule::Random;
  throw ConfigError("config: unknown expansion rule '" + s + "'");
}

AblationLevel parse_ablation(const std::string& s) {
  if (s == "grpo") return AblationLevel::Grpo;
  if (s == "curriculum") return AblationLevel::Curriculum;
  if (s == "improve") return AblationLevel::Improve;
  if (s == "diverge") return AblationLevel::Diverge;
  if (s == "full") return AblationLevel::Full;
  throw ConfigError("config: unknown ablation level '" + s + "'");
}

const char* expansion_name(ExpansionRule r) {
  switch (r) {
    case ExpansionRule::Median: return "median";
    case ExpansionRule::Best: return "best";
    case ExpansionRule::Worst: return "worst";
    default: return "random";
  }
}

}  // namespace

void RunConfig::validate() const {
  if (env.kind == sidp::EnvKind::BitstringRepair) {
    if (env.length < 1) throw ConfigError("env.length must be >= 1");
    if (env.corruption_prob < 0.0 || env.corruption_prob > 0.5)
      throw ConfigError("env.corruption_prob must be in [0, 0.5]");
  } else {
    if (env.turns < 1) throw ConfigError("env.turns must be >= 1");
    if (env.vocab < 2) throw ConfigError("env.vocab must be >= 2");
  }
  if (env.num_base_tasks < 1) throw ConfigError("env.num_base_tasks must be >= 1");
  if (env.hash_features < 1) throw ConfigError("env.hash_features must be >= 1");
  if (env.quality_range.worst == env.quality_range.best)
    throw ConfigError("env.quality_range: worst and best must differ");

  if (grpo.group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
  if (grpo.epsilon <= 0.0) throw ConfigError("grpo.epsilon must be > 0");
  if (grpo.beta < 0.0) throw ConfigError("grpo.beta must be >= 0");
  if (grpo.learning_rate <= 0.0) throw ConfigError("grpo.learning_rate must be > 0");
  if (grpo.weight_decay < 0.0) throw ConfigError("grpo.weight_decay must be >= 0");
  if (grpo.epochs_per_batch < 1) throw ConfigError("grpo.epochs_per_batch must be >= 1");
  if (grpo.prompts_per_batch < 1) throw ConfigError("grpo.prompts_per_batch must be >= 1");
  if (grpo.ref_update_interval < 1) throw ConfigError("grpo.ref_update_interval must be >= 1");
  if (grpo.ref_update_alpha < 0.0 || grpo.ref_update_alpha > 1.0)
    throw ConfigError("grpo.ref_update_alpha must be in [0, 1]");

  if (exit.buffer_min_size < 1) throw ConfigError("exit.buffer_min_size must be >= 1");
  if (exit.buffer_capacity < exit.buffer_min_size)
    throw ConfigError("exit.buffer_capacity must be >= exit.buffer_min_size");
  if (exit.selection_prob < 0.0 || exit.selection_prob > 1.0)
    throw ConfigError("exit.selection_prob must be in [0, 1]");
  if (exit.divergence_prob < 0.0 || exit.divergence_prob > 1.0)
    throw ConfigError("exit.divergence_prob must be in [0, 1]");

  // Ablation ladder consistency.
  switch (exit.ablation) {
    case AblationLevel::Grpo:
      break;  // buffer knobs are ignored entirely
    case AblationLevel::Curriculum:
    case AblationLevel::Improve:
      if (exit.divergence_prob != 0.0)
        throw ConfigError("exit.divergence_prob must be 0 below the diverge level");
      [[fallthrough]];
    case AblationLevel::Diverge:
      if (exit.diversity_bonus)
        throw ConfigError("exit.diversity_bonus requires the full ablation level");
      break;
    case AblationLevel::Full:
      if (!exit.diversity_bonus)
        throw ConfigError("the full ablation level requires exit.diversity_bonus");
      break;
  }

  if (harness.iterations < 1) throw ConfigError("harness.iterations must be >= 1");
  if (harness.eval_samples < 1) throw ConfigError("harness.eval_samples must be >= 1");
  if (harness.output_dir.empty()) throw ConfigError("harness.output_dir must be set");
}

curriculum::BufferConfig RunConfig::buffer_config() const {
  return curriculum::BufferConfig{exit.buffer_capacity, exit.buffer_min_size,
                                  exit.selection_prob, exit.divergence_prob, exit.kappa};
}

sidp::EnvOptions RunConfig::env_options() const {
  return sidp::EnvOptions{env.feedback, env.reward_shaping, env.quality_range};
}

std::uint32_t RunConfig::env_alphabet() const {
  return env.kind == sidp::EnvKind::BitstringRepair ? 2u : env.vocab;
}

policy::EnvFeaturizer RunConfig::make_featurizer() const {
  return policy::EnvFeaturizer(env.kind, env_alphabet(), env.hash_features);
}

std::vector<sidp::BaseTask> RunConfig::make_base_tasks() const {
  std::vector<sidp::BaseTask> tasks(env.num_base_tasks);
  for (std::uint32_t i = 0; i < env.num_base_tasks; ++i) {
    auto& t = tasks[i];
    t.task_id = "train-" + std::to_string(i);
    t.env_kind = env.kind;
    t.seed = hash_words(harness.master_seed, {hash_str("base_task"), i});
    if (env.kind == sidp::EnvKind::BitstringRepair)
      t.params = sidp::BitstringParams{env.length, env.corruption_prob};
    else
      t.params = sidp::KeySequenceParams{env.turns, env.vocab};
  }
  return tasks;
}

std::vector<sidp::BaseTask> RunConfig::make_eval_tasks(std::uint32_t count) const {
  std::vector<sidp::BaseTask> tasks(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& t = tasks[i];
    t.task_id = "eval-" + std::to_string(i);
    t.env_kind = env.kind;
    t.seed = hash_words(harness.master_seed, {hash_str("eval_task"), i});
    if (env.kind == sidp::EnvKind::BitstringRepair)
      t.params = sidp::BitstringParams{env.length, env.corruption_prob};
    else
      t.params = sidp::KeySequenceParams{env.turns, env.vocab};
  }
  return tasks;
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  reject_unknown_keys(root, {"env", "grpo", "exit", "harness"}, "(root)");

  RunConfig cfg;
  if (root.contains("env")) {
    const auto& b = root.at("env");
    reject_unknown_keys(b,
                        {"kind", "length", "corruption_prob", "turns", "vocab",
                         "num_base_tasks", "hash_features", "feedback", "reward_shaping",
                         "quality_worst", "quality_best"},
                        "env");
    std::string kind = sidp::to_string(cfg.env.kind);
    read(b, "kind", kind);
    cfg.env.kind = parse_env_kind(kind);
    read(b, "length", cfg.env.length);
    read(b, "corruption_prob", cfg.env.corruption_prob);
    read(b, "turns", cfg.env.turns);
    read(b, "vocab", cfg.env.vocab);
    read(b, "num_base_tasks", cfg.env.num_base_tasks);
    read(b, "hash_features", cfg.env.hash_features);
    std::string feedback = "scalar";
    read(b, "feedback", feedback);
    cfg.env.feedback = parse_feedback(feedback);
    std::string shaping = "delta";
    read(b, "reward_shaping", shaping);
    cfg.env.reward_shaping = parse_shaping(shaping);
    read(b, "quality_worst", cfg.env.quality_range.worst);
    read(b, "quality_best", cfg.env.quality_range.best);
  }
  if (root.contains("grpo")) {
    const auto& b = root.at("grpo");
    reject_unknown_keys(b,
                        {"group_size", "epsilon", "beta", "learning_rate", "weight_decay",
                         "epochs_per_batch",
                         "prompts_per_batch", "ref_update_interval", "ref_update_alpha",
                         "aggregation", "invalid_in_baseline", "skip_degenerate_groups",
                         "optimizer"},
                        "grpo");
    read(b, "group_size", cfg.grpo.group_size);
    read(b, "epsilon", cfg.grpo.epsilon);
    read(b, "beta", cfg.grpo.beta);
    read(b, "learning_rate", cfg.grpo.learning_rate);
    read(b, "weight_decay", cfg.grpo.weight_decay);
    read(b, "epochs_per_batch", cfg.grpo.epochs_per_batch);
    read(b, "prompts_per_batch", cfg.grpo.prompts_per_batch);
    read(b, "ref_update_interval", cfg.grpo.ref_update_interval);
    read(b, "ref_update_alpha", cfg.grpo.ref_update_alpha);
    std::string agg = "per_rollout";
    read(b, "aggregation", agg);
    cfg.grpo.aggregation = parse_aggregation(agg);
    read(b, "invalid_in_baseline", cfg.grpo.invalid_in_baseline);
    read(b, "skip_degenerate_groups", cfg.grpo.skip_degenerate_groups);
    std::string opt = "adam";
    read(b, "optimizer", opt);
    cfg.grpo.optimizer = parse_optimizer(opt);
  }
  if (root.contains("exit")) {
    const auto& b = root.at("exit");
    reject_unknown_keys(b,
                        {"buffer_capacity", "buffer_min_size", "selection_prob",
                         "divergence_prob", "kappa", "expansion_rule", "diversity_bonus",
                         "ablation"},
                        "exit");
    read(b, "buffer_capacity", cfg.exit.buffer_capacity);
    read(b, "buffer_min_size", cfg.exit.buffer_min_size);
    read(b, "selection_prob", cfg.exit.selection_prob);
    read(b, "kappa", cfg.exit.kappa);
    std::string rule = "median";
    read(b, "expansion_rule", rule);
    cfg.exit.expansion_rule = parse_expansion(rule);
    std::string level = "full";
    read(b, "ablation", level);
    cfg.exit.ablation = parse_ablation(level);
    // Level-consistent defaults; explicit values still win (and are
    // validated against the level).
    const bool divergent = cfg.exit.ablation == AblationLevel::Diverge ||
                           cfg.exit.ablation == AblationLevel::Full;
    cfg.exit.divergence_prob = divergent ? 0.2 : 0.0;
    cfg.exit.diversity_bonus = cfg.exit.ablation == AblationLevel::Full;
    read(b, "divergence_prob", cfg.exit.divergence_prob);
    read(b, "diversity_bonus", cfg.exit.diversity_bonus);
  }
  if (root.contains("harness")) {
    const auto& b = root.at("harness");
    reject_unknown_keys(b,
                        {"iterations", "master_seed", "eval_k", "eval_task_count",
                         "eval_samples", "output_dir", "checkpoint_every", "log_rollouts",
                         "log_embeddings"},
                        "harness");
    read(b, "iterations", cfg.harness.iterations);
    read(b, "master_seed", cfg.harness.master_seed);
    read(b, "eval_k", cfg.harness.eval_k);
    read(b, "eval_task_count", cfg.harness.eval_task_count);
    read(b, "eval_samples", cfg.harness.eval_samples);
    read(b, "output_dir", cfg.harness.output_dir);
    read(b, "checkpoint_every", cfg.harness.checkpoint_every);
    read(b, "log_rollouts", cfg.harness.log_rollouts);
    read(b, "log_embeddings", cfg.harness.log_embeddings);
  }

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const RunConfig& cfg) {
  json root;
  root["env"] = {
      {"kind", sidp::to_string(cfg.env.kind)},
      {"length", cfg.env.length},
      {"corruption_prob", cfg.env.corruption_prob},
      {"turns", cfg.env.turns},
      {"vocab", cfg.env.vocab},
      {"num_base_tasks", cfg.env.num_base_tasks},
      {"hash_features", cfg.env.hash_features},
      {"feedback", cfg.env.feedback == sidp::FeedbackMode::None
                       ? "none"
                       : (cfg.env.feedback == sidp::FeedbackMode::Scalar ? "scalar"
                                                                         : "per_position")},
      {"reward_shaping",
       cfg.env.reward_shaping == sidp::RewardShaping::Delta ? "delta" : "absolute"},
      {"quality_worst", cfg.env.quality_range.worst},
      {"quality_best", cfg.env.quality_range.best},
  };
  root["grpo"] = {
      {"group_size", cfg.grpo.group_size},
      {"epsilon", cfg.grpo.epsilon},
      {"beta", cfg.grpo.beta},
      {"learning_rate", cfg.grpo.learning_rate},
      {"weight_decay", cfg.grpo.weight_decay},
      {"epochs_per_batch", cfg.grpo.epochs_per_batch},
      {"prompts_per_batch", cfg.grpo.prompts_per_batch},
      {"ref_update_interval", cfg.grpo.ref_update_interval},
      {"ref_update_alpha", cfg.grpo.ref_update_alpha},
      {"aggregation", cfg.grpo.aggregation == grpo::LossAggregation::PerRolloutMean
                          ? "per_rollout"
                          : "global_token"},
      {"invalid_in_baseline", cfg.grpo.invalid_in_baseline},
      {"skip_degenerate_groups", cfg.grpo.skip_degenerate_groups},
      {"optimizer",
       cfg.grpo.optimizer == policy::OptimizerKind::Adam ? "adam" : "ascent"},
  };
  root["exit"] = {
      {"buffer_capacity", cfg.exit.buffer_capacity},
      {"buffer_min_size", cfg.exit.buffer_min_size},
      {"selection_prob", cfg.exit.selection_prob},
      {"divergence_prob", cfg.exit.divergence_prob},
      {"kappa", cfg.exit.kappa},
      {"expansion_rule", expansion_name(cfg.exit.expansion_rule)},
      {"diversity_bonus", cfg.exit.diversity_bonus},
      {"ablation", to_string(cfg.exit.ablation)},
  };
  root["harness"] = {
      {"iterations", cfg.harness.iterations},
      {"master_seed", cfg.harness.master_seed},
      {"eval_k", cfg.harness.eval_k},
      {"eval_task_count", cfg.harness.eval_task_count},
      {"eval_samples", cfg.harness.eval_samples},
      {"output_dir", cfg.harness.output_dir},
      {"checkpoint_every", cfg.harness.checkpoint_every},
      {"log_rollouts", cfg.harness.log_rollouts},
      {"log_embeddings", cfg.harness.log_embeddings},
  };
  return root.dump(2);
}

std::vector<sidp::BaseTask> load_tasks_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("tasks file: cannot open " + path.string());
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("tasks file: parse error: ") + e.what());
  }
  reject_unknown_keys(root, {"tasks"}, "(root)");
  std::vector<sidp::BaseTask> tasks;
  for (const auto& j : root.at("tasks")) {
    reject_unknown_keys(j, {"task_id", "env_kind", "seed", "length", "corruption_prob",
                            "turns", "vocab"},
                        "tasks[]");
    sidp::BaseTask t;
    t.task_id = j.at("task_id").get<std::string>();
    t.env_kind = parse_env_kind(j.at("env_kind").get<std::string>());
    t.seed = j.at("seed").get<std::uint64_t>();
    if (t.env_kind == sidp::EnvKind::BitstringRepair) {
      sidp::BitstringParams p;
      read(j, "length", p.length);
      read(j, "corruption_prob", p.corruption_prob);
      t.params = p;
    } else {
      sidp::KeySequenceParams p;
      read(j, "turns", p.turns);
      read(j, "vocab", p.vocab);
      t.params = p;
    }
    sidp::validate_task(t);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

const char* to_string(AblationLevel level) {
  switch (level) {
    case AblationLevel::Grpo: return "grpo";
    case AblationLevel::Curriculum: return "curriculum";
    case AblationLevel::Improve: return "improve";
    case AblationLevel::Diverge: return "diverge";
    default: return "full";
  }
}

}  // namespace exitrl::config
