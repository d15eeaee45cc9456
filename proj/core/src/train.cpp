#include "exitrl/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "exitrl/diversity.hpp"
#include "exitrl/error.hpp"
#include "exitrl/rollout.hpp"

namespace exitrl::harness {

using nlohmann::json;

namespace {

class Trainer {
 public:
  Trainer(const config::RunConfig& config, TrainState state, bool resumed)
      : cfg_(config),
        state_(std::move(state)),
        featurizer_(config.make_featurizer()),
        tasks_(config.make_base_tasks()),
        resumed_(resumed) {
    distinct_.insert(state_.distinct_hashes.begin(), state_.distinct_hashes.end());
  }

  TrainResult run();

 private:
  struct PromptWork {
    curriculum::SampledInstance sampled;
    EpisodeSet episodes;
    grpo::AdvantageVector advantages;
    bool skip = false;  // degenerate group skipped per config
  };

  void run_iteration(std::uint64_t iteration, std::ofstream& rollout_log);
  void log_rollouts(std::ofstream& out, std::uint64_t iteration, const PromptWork& work);
  void note_distinct(const curriculum::TaskInstance& instance);
  metrics::MetricRecord make_record(std::uint64_t iteration) const;

  const config::RunConfig& cfg_;
  TrainState state_;
  policy::EnvFeaturizer featurizer_;
  std::vector<sidp::BaseTask> tasks_;
  bool resumed_ = false;

  std::unordered_set<std::uint64_t> distinct_;

  // Per-iteration aggregates for the metric record.
  double agg_objective_ = 0.0;
  double agg_reward_ = 0.0;
  double agg_clip_ = 0.0;
  double agg_kl_ = 0.0;
  double agg_abs_adv_ = 0.0;
  double agg_depth_ = 0.0;
  double agg_start_turn_ = 0.0;
  double agg_recency_ = 0.0;
  std::uint32_t mode_counts_[3] = {0, 0, 0};
  std::uint32_t degenerate_groups_ = 0;
};

TrainResult Trainer::run() {
  cfg_.validate();
  const std::filesystem::path out_dir = cfg_.harness.output_dir;
  std::filesystem::create_directories(out_dir);

  TrainResult result;
  result.output_dir = out_dir;
  result.metrics_path = out_dir / "metrics.csv";
  result.rollouts_path = out_dir / "rollouts.jsonl";
  result.checkpoint_path = out_dir / "checkpoint.json";

  const auto dim = featurizer_.spec().dim();
  if (!resumed_) {
    state_.theta.values.assign(dim, 0.0);
    state_.theta.role = policy::ParamRole::Current;
    state_.theta_ref = state_.theta;
    state_.theta_ref.role = policy::ParamRole::Reference;
    state_.buffer = curriculum::TaskBuffer(cfg_.buffer_config());
    Rng sample_rng = derive_rng(cfg_.harness.master_seed, "sample");
    state_.sample_rng_state = sample_rng.state();
  } else if (state_.theta.values.size() != dim) {
    throw ConfigError("resume: checkpoint parameters do not match this config");
  }
  state_.config = cfg_;

  std::ofstream metric_out(result.metrics_path);
  if (!metric_out) throw StructuralError("train: cannot write " + result.metrics_path.string());
  metrics::write_csv_header(metric_out);

  std::ofstream rollout_out;
  if (cfg_.harness.log_rollouts) {
    rollout_out.open(result.rollouts_path);
    if (!rollout_out)
      throw StructuralError("train: cannot write " + result.rollouts_path.string());
  }

  const std::uint64_t report_every = std::max<std::uint64_t>(1, cfg_.harness.iterations / 10);
  for (std::uint64_t iteration = state_.iteration + 1; iteration <= cfg_.harness.iterations;
       ++iteration) {
    run_iteration(iteration, rollout_out);
    state_.iteration = iteration;

    const auto record = make_record(iteration);
    metrics::write_csv_row(metric_out, record);
    result.records.push_back(record);

    if (iteration % report_every == 0 || iteration == cfg_.harness.iterations) {
      std::printf("iter %6llu | reward %.4f | buffer %4zu | J %.5f | |A| %.3f | degen %u\n",
                  static_cast<unsigned long long>(iteration), record.mean_reward,
                  state_.buffer.size(), record.objective,
                  agg_abs_adv_ / std::max(1u, cfg_.grpo.prompts_per_batch),
                  degenerate_groups_);
      std::fflush(stdout);
    }
    if (cfg_.harness.checkpoint_every > 0 && iteration % cfg_.harness.checkpoint_every == 0 &&
        iteration < cfg_.harness.iterations) {
      // Only set membership matters for the distinct count; order is free.
      state_.distinct_hashes.assign(distinct_.begin(), distinct_.end());
      save_checkpoint(out_dir / ("checkpoint_" + std::to_string(iteration) + ".json"), state_);
    }
  }

  state_.distinct_hashes.assign(distinct_.begin(), distinct_.end());
  save_checkpoint(result.checkpoint_path, state_);
  result.final_state = std::move(state_);
  return result;
}

void Trainer::note_distinct(const curriculum::TaskInstance& instance) {
  distinct_.insert(instance.start_hash());
}

void Trainer::run_iteration(std::uint64_t iteration, std::ofstream& rollout_log) {
  agg_objective_ = agg_reward_ = agg_clip_ = agg_kl_ = agg_abs_adv_ = 0.0;
  agg_depth_ = agg_start_turn_ = agg_recency_ = 0.0;
  mode_counts_[0] = mode_counts_[1] = mode_counts_[2] = 0;
  degenerate_groups_ = 0;

  const std::uint32_t prompts = cfg_.grpo.prompts_per_batch;
  const bool use_buffer = cfg_.exit.ablation != config::AblationLevel::Grpo;

  policy::ParamVector theta_old = state_.theta;
  theta_old.role = policy::ParamRole::Old;

  Rng sample_rng;
  sample_rng.set_state(state_.sample_rng_state);

  std::vector<PromptWork> batch;
  batch.reserve(prompts);
  for (std::uint32_t p = 0; p < prompts; ++p) {
    PromptWork work;
    if (use_buffer) {
      work.sampled = curriculum::sample_training_instance(state_.buffer, tasks_, sample_rng,
                                                          state_.ids, iteration);
    } else {
      curriculum::TaskInstance inst;
      inst.id = state_.ids.next();
      inst.base = tasks_[sample_rng.uniform_int(tasks_.size())];
      inst.mode = sidp::IterationMode::Base;
      inst.created_at = iteration;
      work.sampled = curriculum::SampledInstance{std::move(inst), std::nullopt, iteration};
    }
    note_distinct(work.sampled.instance);

    const auto& inst = work.sampled.instance;
    mode_counts_[static_cast<std::size_t>(*inst.mode)] += 1;
    agg_depth_ += static_cast<double>(inst.depth);
    agg_start_turn_ += static_cast<double>(inst.start_turn());
    agg_recency_ += work.sampled.entry_id
                        ? static_cast<double>(iteration - work.sampled.source_created_at)
                        : 0.0;

    work.episodes = run_group(inst, theta_old, featurizer_, cfg_, iteration, p);
    work.episodes.group = grpo::mask_invalid(std::move(work.episodes.group),
                                             cfg_.grpo.invalid_in_baseline);
    work.advantages = grpo::compute_group_advantages(work.episodes.group);
    if (work.advantages.degenerate) {
      degenerate_groups_ += 1;
      if (cfg_.grpo.skip_degenerate_groups) work.skip = true;
    }
    if (!work.skip && cfg_.exit.diversity_bonus && !work.advantages.degenerate) {
      std::vector<std::vector<double>> embeddings;
      embeddings.reserve(work.episodes.group.rollouts.size());
      for (const auto& r : work.episodes.group.rollouts) embeddings.push_back(*r.embedding);
      work.advantages = diversity::scale_advantages(std::move(work.advantages),
                                                    diversity::diversity_scores(embeddings));
    }

    double group_reward = 0.0;
    for (const auto& r : work.episodes.group.rollouts) group_reward += r.reward;
    agg_reward_ += group_reward / static_cast<double>(work.episodes.group.rollouts.size());

    if (cfg_.harness.log_rollouts) log_rollouts(rollout_log, iteration, work);
    batch.push_back(std::move(work));
  }
  state_.sample_rng_state = sample_rng.state();

  // Optimizer epochs reuse the sampling-time log-probabilities; ratios
  // drift away from 1 after the first step.
  const double batch_norm = 1.0 / static_cast<double>(prompts);
  for (std::uint32_t epoch = 0; epoch < cfg_.grpo.epochs_per_batch; ++epoch) {
    std::vector<double> gradient(featurizer_.spec().dim(), 0.0);
    double objective = 0.0, clip = 0.0, kl = 0.0, abs_adv = 0.0;
    for (const auto& work : batch) {
      if (work.skip) continue;
      auto res = grpo::surrogate_loss_and_grad(work.episodes.group, work.advantages,
                                               state_.theta, state_.theta_ref, featurizer_,
                                               cfg_.grpo.epsilon, cfg_.grpo.beta,
                                               cfg_.grpo.aggregation);
      objective += res.objective;
      clip += res.clip_fraction;
      kl += res.kl_mean;
      abs_adv += res.mean_abs_advantage;
      for (std::size_t i = 0; i < gradient.size(); ++i)
        gradient[i] += batch_norm * res.gradient[i];
    }
    try {
      policy::OptimizerConfig opt;
      opt.kind = cfg_.grpo.optimizer;
      opt.weight_decay = cfg_.grpo.weight_decay;
      policy::apply_update(state_.theta, gradient, state_.optimizer, cfg_.grpo.learning_rate,
                           opt);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iteration) + ": " + e.what());
    }
    agg_objective_ = objective * batch_norm;
    agg_clip_ = clip * batch_norm;
    agg_kl_ = kl * batch_norm;
    agg_abs_adv_ = abs_adv;
  }

  grpo::update_reference(state_.theta_ref, state_.theta, cfg_.grpo.ref_update_alpha, iteration,
                         cfg_.grpo.ref_update_interval);

  if (use_buffer) {
    for (const auto& work : batch) {
      std::vector<double> rewards;
      rewards.reserve(work.episodes.group.rollouts.size());
      for (const auto& r : work.episodes.group.rollouts) rewards.push_back(r.reward);

      std::vector<curriculum::TaskInstance> children;
      if (cfg_.exit.ablation != config::AblationLevel::Curriculum) {
        Rng expand_rng = derive_rng(cfg_.harness.master_seed, "expand",
                                    {iteration, work.sampled.instance.id});
        const int chosen =
            choose_expansion_rollout(work.episodes.group, cfg_.exit.expansion_rule, expand_rng);
        if (chosen >= 0) {
          auto expanded = curriculum::expand(work.sampled.instance,
                                             work.episodes.histories[chosen], state_.ids,
                                             iteration);
          children = curriculum::precompute_children(expanded, state_.ids, iteration);
        }
      }
      curriculum::update_after_rollout(state_.buffer, work.sampled, rewards, children);
    }
  }
}

void Trainer::log_rollouts(std::ofstream& out, std::uint64_t iteration, const PromptWork& work) {
  const auto& inst = work.sampled.instance;
  const std::uint64_t start_hash = inst.start_hash();
  std::vector<double> start_emb;
  if (cfg_.harness.log_embeddings) start_emb = start_embedding(inst, cfg_);

  for (const auto& rollout : work.episodes.group.rollouts) {
    json row;
    row["iteration"] = iteration;
    row["instance"] = inst.id;
    row["task"] = inst.base.task_id;
    if (inst.lineage)
      row["lineage"] = *inst.lineage;
    else
      row["lineage"] = nullptr;
    row["mode"] = sidp::to_string(*inst.mode);
    row["depth"] = inst.depth;
    row["start_turn"] = inst.start_turn();
    row["start_hash"] = start_hash;
    row["tokens"] = rollout.response.tokens;
    row["reward"] = rollout.raw_quality;
    row["shaped_reward"] = rollout.reward;
    row["valid"] = rollout.response.valid;
    if (cfg_.harness.log_embeddings) row["embedding"] = start_emb;
    out << row.dump() << "\n";
  }
}

metrics::MetricRecord Trainer::make_record(std::uint64_t iteration) const {
  const double prompts = static_cast<double>(cfg_.grpo.prompts_per_batch);
  metrics::MetricRecord r;
  r.iteration = iteration;
  r.objective = agg_objective_;
  r.mean_reward = agg_reward_ / prompts;
  r.buffer_size = state_.buffer.size();
  r.mean_score = state_.buffer.mean_score();
  r.min_score = state_.buffer.min_score();
  r.max_score = state_.buffer.max_score();
  r.sampled_depth = agg_depth_ / prompts;
  r.sampled_start_turn = agg_start_turn_ / prompts;
  r.sampled_recency = agg_recency_ / prompts;
  r.mode_base = mode_counts_[0];
  r.mode_improve = mode_counts_[1];
  r.mode_diverge = mode_counts_[2];
  r.distinct_instances = distinct_.size();
  r.clip_fraction = agg_clip_;
  r.kl_mean = agg_kl_;
  return r;
}

}  // namespace

TrainResult train(const config::RunConfig& config) {
  return Trainer(config, TrainState{}, /*resumed=*/false).run();
}

TrainResult resume_training(const config::RunConfig& config,
                            const std::filesystem::path& checkpoint_path) {
  config.validate();
  TrainState state = load_checkpoint(checkpoint_path);

  // Training-relevant blocks must match; only harness details (iteration
  // target, output paths, logging) may change on resume.
  config::RunConfig a = state.config;
  config::RunConfig b = config;
  a.harness = config::HarnessBlock{};
  b.harness = config::HarnessBlock{};
  if (config::dump_config(a) != config::dump_config(b) ||
      state.config.harness.master_seed != config.harness.master_seed)
    throw ConfigError("resume: config does not match the checkpoint");
  if (state.iteration >= config.harness.iterations)
    throw ConfigError("resume: checkpoint is already at or past the target iterations");

  return Trainer(config, std::move(state), /*resumed=*/true).run();
}

}  // namespace exitrl::harness
