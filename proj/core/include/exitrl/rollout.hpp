#pragma once

#include <cstdint>
#include <vector>

#include "exitrl/config.hpp"
#include "exitrl/curriculum.hpp"
#include "exitrl/grpo.hpp"
#include "exitrl/policy.hpp"

namespace exitrl::harness {

// Episode generation. A Base instance plays every turn of its task with a
// fresh response per turn; an iteration instance takes exactly one step,
// revising the final turn of its starting history. Rewards follow the mode:
// Base episodes earn their mean per-turn quality, iteration steps earn the
// shaped improvement (or absolute) reward.

struct EpisodeSet {
  grpo::RolloutGroup group;
  std::vector<sidp::History> histories;  // completed history per rollout
  double prev_quality = 0.0;             // quality of the revised iterate; 0 for Base
};

// G rollouts of one instance under the sampling parameters. Each rollout
// draws from its own seed stream derived from (master, iteration, prompt,
// rollout), so generation order never affects the results.
EpisodeSet run_group(const curriculum::TaskInstance& instance,
                     const policy::ParamVector& theta_old,
                     const policy::Featurizer& featurizer, const config::RunConfig& config,
                     std::uint64_t iteration, std::uint32_t prompt_index);

// Picks the rollout that seeds expansion per the configured rule, among
// valid rollouts only. Returns -1 when nothing is expandable.
int choose_expansion_rollout(const grpo::RolloutGroup& group, config::ExpansionRule rule,
                             Rng& rng);

// Embedding of an instance's starting point, for the diversity report:
// the iterate being revised, or the task's given material for Base
// instances (the hint for BitstringRepair; the origin for key sequences,
// whose base instances share one empty starting point).
std::vector<double> start_embedding(const curriculum::TaskInstance& instance,
                                    const config::RunConfig& config);

}  // namespace exitrl::harness
