#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "exitrl/curriculum.hpp"
#include "exitrl/policy.hpp"
#include "exitrl/sidp.hpp"

namespace exitrl::grpo {

// Group-relative policy optimization over rollout groups: group-normalized
// advantages, a clipped importance-weighted surrogate with a KL penalty
// against a reference policy, and gradient masking for invalid responses.

// One group member. Multi-turn episodes flatten their per-turn generations:
// observations[k] produced segment_lengths[k] tokens, concatenated into
// response.tokens / response.logps (log-probabilities under the sampling
// parameters).
struct Rollout {
  policy::SampledResponse response;
  std::vector<sidp::Observation> observations;
  std::vector<std::uint32_t> segment_lengths;
  double reward = 0.0;       // training reward in [0,1] (shaped for iteration steps)
  double raw_quality = 0.0;  // quality of the new content before shaping
  std::optional<std::vector<double>> embedding;
  bool in_baseline = true;   // participates in the advantage mean/std
};

struct RolloutGroup {
  curriculum::TaskInstance instance;
  std::vector<Rollout> rollouts;
  std::uint64_t old_params_id = 0;  // iteration stamp of the sampling parameters
};

// Per-rollout advantage, broadcast over that rollout's tokens. Degenerate
// groups (reward std below 1e-8) carry all-zero advantages.
struct AdvantageVector {
  std::vector<double> values;
  bool degenerate = false;
};

// (r - mean) / std with population statistics.
AdvantageVector compute_advantages(std::span<const double> rewards);

// Advantages for a possibly-masked group: statistics over rollouts with
// in_baseline set; invalid rollouts always receive advantage 0.
AdvantageVector compute_group_advantages(const RolloutGroup& group);

// rho_t = exp(logp_new - logp_old), elementwise.
std::vector<double> importance_ratios(std::span<const double> logps_new,
                                      std::span<const double> logps_old);

// Nonnegative per-token estimator u - 1 - ln u with u = exp(logp_ref - logp_theta).
double kl_estimate(double logp_theta, double logp_ref);

// Applies the invalid-response policy: invalid rollouts are excluded from
// the baseline statistics unless invalid_in_baseline is set. (They never
// contribute gradient either way.)
RolloutGroup mask_invalid(RolloutGroup group, bool invalid_in_baseline);

enum class LossAggregation { PerRolloutMean, GlobalTokenMean };

struct SurrogateResult {
  double objective = 0.0;
  std::vector<double> gradient;
  double clip_fraction = 0.0;     // tokens where the clipped branch won
  double kl_mean = 0.0;           // mean per-token KL estimate
  double mean_abs_advantage = 0.0;
  std::size_t token_count = 0;
  std::size_t valid_rollouts = 0;
};

// Objective and exact gradient of the clipped surrogate with KL penalty:
// per token min(rho * A, clip(rho, 1-eps, 1+eps) * A) - beta * KL, averaged
// per rollout then over the group (or globally per token, when configured).
// Gradient flows through a token only when the unclipped branch is selected;
// invalid rollouts contribute nothing.
SurrogateResult surrogate_loss_and_grad(const RolloutGroup& group,
                                        const AdvantageVector& advantages,
                                        const policy::ParamVector& theta,
                                        const policy::ParamVector& theta_ref,
                                        const policy::Featurizer& featurizer, double epsilon,
                                        double beta,
                                        LossAggregation aggregation = LossAggregation::PerRolloutMean);

// On iterations divisible by interval: theta_ref <- alpha * theta +
// (1 - alpha) * theta_ref. No-op elsewhere.
void update_reference(policy::ParamVector& theta_ref, const policy::ParamVector& theta,
                      double alpha, std::uint64_t iteration, std::uint64_t interval);

}  // namespace exitrl::grpo
