#include "exitrl/rollout.hpp"

#include <algorithm>
#include <numeric>

#include "exitrl/diversity.hpp"
#include "exitrl/error.hpp"

namespace exitrl::harness {

namespace {

void append_segment(grpo::Rollout& rollout, const sidp::Observation& obs,
                    policy::SampledResponse&& resp) {
  rollout.segment_lengths.push_back(static_cast<std::uint32_t>(resp.tokens.size()));
  rollout.response.tokens.insert(rollout.response.tokens.end(), resp.tokens.begin(),
                                 resp.tokens.end());
  rollout.response.logps.insert(rollout.response.logps.end(), resp.logps.begin(),
                                resp.logps.end());
  rollout.observations.push_back(obs);
}

grpo::Rollout run_base_episode(const curriculum::TaskInstance& instance,
                               const policy::ParamVector& theta_old,
                               const policy::Featurizer& featurizer,
                               const sidp::EnvOptions& options, Rng& rng,
                               sidp::History& history) {
  grpo::Rollout rollout;
  const auto& task = instance.base;
  for (std::uint32_t t = 0; t < task.turn_count(); ++t) {
    auto obs = sidp::reset(task, history, sidp::IterationMode::Base, rng.state(), options);
    auto resp = policy::sample_response(theta_old, obs, featurizer, rng);
    auto graded = sidp::grade(task, t, resp.tokens, options);
    rollout.response.valid = rollout.response.valid && graded.valid;
    sidp::Iterate it;
    it.tokens = resp.tokens;
    it.feedback = graded.feedback;
    it.position_feedback = graded.position_feedback;
    it.quality = graded.quality;
    it.depth = 0;
    history.turns.push_back({std::move(it)});
    append_segment(rollout, obs, std::move(resp));
  }
  const double turns = static_cast<double>(task.turn_count());
  rollout.raw_quality = sidp::total_quality(history) / turns;
  rollout.reward = rollout.response.valid ? rollout.raw_quality : 0.0;
  return rollout;
}

grpo::Rollout run_iteration_step(const curriculum::TaskInstance& instance,
                                 const policy::ParamVector& theta_old,
                                 const policy::Featurizer& featurizer,
                                 const sidp::EnvOptions& options,
                                 sidp::RewardShaping shaping, Rng& rng,
                                 sidp::History& history) {
  grpo::Rollout rollout;
  const auto& task = instance.base;
  const auto mode = *instance.mode;
  const std::uint32_t turn = instance.start_turn();
  const double prev_quality = instance.history.final_iterate().quality;
  const std::uint32_t prev_depth = instance.history.final_iterate().depth;

  auto obs = sidp::reset(task, instance.history, mode, rng.state(), options);
  auto resp = policy::sample_response(theta_old, obs, featurizer, rng);
  auto graded = sidp::grade(task, turn, resp.tokens, options);
  rollout.response.valid = graded.valid;

  sidp::Iterate it;
  it.tokens = resp.tokens;
  it.feedback = graded.feedback;
  it.position_feedback = graded.position_feedback;
  it.quality = graded.quality;
  it.depth = prev_depth + 1;
  history = instance.history;
  history.turns.back().push_back(std::move(it));

  rollout.raw_quality = graded.quality;
  rollout.reward =
      graded.valid ? sidp::shaped_reward(prev_quality, graded.quality, mode, shaping) : 0.0;
  append_segment(rollout, obs, std::move(resp));
  return rollout;
}

}  // namespace

EpisodeSet run_group(const curriculum::TaskInstance& instance,
                     const policy::ParamVector& theta_old,
                     const policy::Featurizer& featurizer, const config::RunConfig& config,
                     std::uint64_t iteration, std::uint32_t prompt_index) {
  if (!instance.mode) throw StructuralError("run_group: instance has no assigned mode");
  const auto options = config.env_options();
  const bool base = *instance.mode == sidp::IterationMode::Base;
  if (!base && instance.history.empty())
    throw StructuralError("run_group: iteration instance with empty history");

  EpisodeSet out;
  out.group.instance = instance;
  out.group.old_params_id = iteration;
  if (!base) out.prev_quality = instance.history.final_iterate().quality;

  const std::uint32_t G = config.grpo.group_size;
  out.group.rollouts.reserve(G);
  out.histories.reserve(G);
  for (std::uint32_t g = 0; g < G; ++g) {
    Rng rng = derive_rng(config.harness.master_seed, "rollout", {iteration, prompt_index, g});
    sidp::History history;
    grpo::Rollout rollout =
        base ? run_base_episode(instance, theta_old, featurizer, options, rng, history)
             : run_iteration_step(instance, theta_old, featurizer, options,
                                  config.env.reward_shaping, rng, history);
    if (config.exit.diversity_bonus || config.harness.log_embeddings) {
      rollout.embedding = diversity::embed(rollout.response.tokens, config.env.kind,
                                           config.env_alphabet());
    }
    out.group.rollouts.push_back(std::move(rollout));
    out.histories.push_back(std::move(history));
  }
  return out;
}

int choose_expansion_rollout(const grpo::RolloutGroup& group, config::ExpansionRule rule,
                             Rng& rng) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i)
    if (group.rollouts[i].response.valid) valid.push_back(i);
  if (valid.empty()) return -1;

  std::sort(valid.begin(), valid.end(), [&](std::size_t a, std::size_t b) {
    const double ra = group.rollouts[a].reward;
    const double rb = group.rollouts[b].reward;
    return ra < rb || (ra == rb && a < b);
  });
  switch (rule) {
    case config::ExpansionRule::Best:
      return static_cast<int>(valid.back());
    case config::ExpansionRule::Worst:
      return static_cast<int>(valid.front());
    case config::ExpansionRule::Random:
      return static_cast<int>(valid[rng.uniform_int(valid.size())]);
    case config::ExpansionRule::Median:
    default:
      return static_cast<int>(valid[(valid.size() - 1) / 2]);
  }
}

std::vector<double> start_embedding(const curriculum::TaskInstance& instance,
                                    const config::RunConfig& config) {
  if (!instance.is_base()) {
    return diversity::embed(instance.history.final_iterate().tokens, config.env.kind,
                            config.env_alphabet());
  }
  if (config.env.kind == sidp::EnvKind::BitstringRepair) {
    auto hint = sidp::hint_bits(instance.base);
    return diversity::embed(hint, config.env.kind, 2);
  }
  return std::vector<double>(config.env_alphabet(), 0.0);
}

}  // namespace exitrl::harness
