#include "exitrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "exitrl/error.hpp"

namespace exitrl::grpo {

namespace {
constexpr double kDegenerateStd = 1e-8;
}

AdvantageVector compute_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw StructuralError("compute_advantages: group size must be >= 2");
  double mean = 0.0;
  for (double r : rewards) {
    if (!std::isfinite(r)) throw NumericError("compute_advantages: non-finite reward");
    mean += r;
  }
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  const double std_dev = std::sqrt(var);

  AdvantageVector out;
  out.values.assign(rewards.size(), 0.0);
  if (std_dev < kDegenerateStd) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) out.values[i] = (rewards[i] - mean) / std_dev;
  return out;
}

AdvantageVector compute_group_advantages(const RolloutGroup& group) {
  std::vector<double> stats_rewards;
  stats_rewards.reserve(group.rollouts.size());
  for (const auto& r : group.rollouts)
    if (r.in_baseline) stats_rewards.push_back(r.reward);

  AdvantageVector out;
  out.values.assign(group.rollouts.size(), 0.0);
  if (stats_rewards.size() < 2) {
    out.degenerate = true;
    return out;
  }
  const AdvantageVector base = compute_advantages(stats_rewards);
  out.degenerate = base.degenerate;
  if (base.degenerate) return out;

  double mean = 0.0;
  for (double r : stats_rewards) mean += r;
  mean /= static_cast<double>(stats_rewards.size());
  double var = 0.0;
  for (double r : stats_rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / static_cast<double>(stats_rewards.size()));
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const auto& r = group.rollouts[i];
    if (r.response.valid) out.values[i] = (r.reward - mean) / std_dev;
  }
  return out;
}

std::vector<double> importance_ratios(std::span<const double> logps_new,
                                      std::span<const double> logps_old) {
  if (logps_new.size() != logps_old.size())
    throw StructuralError("importance_ratios: length mismatch");
  std::vector<double> out(logps_new.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(logps_new[i] - logps_old[i]);
  return out;
}

double kl_estimate(double logp_theta, double logp_ref) {
  if (!std::isfinite(logp_theta) || !std::isfinite(logp_ref))
    throw NumericError("kl_estimate: non-finite log-probability");
  const double diff = logp_ref - logp_theta;
  // u - 1 - ln u, with ln u = diff; exact zero when the policies agree.
  return std::expm1(diff) - diff;
}

RolloutGroup mask_invalid(RolloutGroup group, bool invalid_in_baseline) {
  for (auto& r : group.rollouts) r.in_baseline = r.response.valid || invalid_in_baseline;
  return group;
}

SurrogateResult surrogate_loss_and_grad(const RolloutGroup& group,
                                        const AdvantageVector& advantages,
                                        const policy::ParamVector& theta,
                                        const policy::ParamVector& theta_ref,
                                        const policy::Featurizer& featurizer, double epsilon,
                                        double beta, LossAggregation aggregation) {
  const std::size_t G = group.rollouts.size();
  if (advantages.values.size() != G)
    throw StructuralError("surrogate: advantage count does not match group size");
  const auto& spec = featurizer.spec();

  SurrogateResult result;
  result.gradient.assign(spec.dim(), 0.0);

  // Token totals drive the GlobalTokenMean normalizer; invalid rollouts are
  // excluded from it since they contribute no terms.
  std::size_t total_tokens = 0;
  for (const auto& r : group.rollouts)
    if (r.response.valid) total_tokens += r.response.tokens.size();
  if (total_tokens == 0) return result;  // nothing trainable in this group

  double kl_sum = 0.0;
  std::size_t clipped = 0;

  for (std::size_t i = 0; i < G; ++i) {
    const auto& rollout = group.rollouts[i];
    if (!rollout.response.valid) continue;
    const double advantage = advantages.values[i];
    result.mean_abs_advantage += std::abs(advantage);
    result.valid_rollouts += 1;

    const std::size_t tokens_i = rollout.response.tokens.size();
    const double weight_scale =
        aggregation == LossAggregation::PerRolloutMean
            ? 1.0 / (static_cast<double>(G) * static_cast<double>(tokens_i))
            : 1.0 / static_cast<double>(total_tokens);

    std::size_t flat = 0;
    for (std::size_t seg = 0; seg < rollout.observations.size(); ++seg) {
      const auto feats = featurizer.features(rollout.observations[seg]);
      const std::uint32_t seg_len = rollout.segment_lengths[seg];
      for (std::uint32_t j = 0; j < seg_len; ++j, ++flat) {
        const std::uint32_t token = rollout.response.tokens[flat];
        const double logp_old = rollout.response.logps[flat];
        const auto logps_new = policy::position_log_probs(theta, spec, feats[j]);
        const auto logps_ref = policy::position_log_probs(theta_ref, spec, feats[j]);
        const double logp_new = logps_new[token];
        const double rho = std::exp(logp_new - logp_old);
        if (!std::isfinite(rho))
          throw NumericError("surrogate: non-finite importance ratio in rollout " +
                             std::to_string(i));

        const double clipped_rho = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
        const double unclipped_term = rho * advantage;
        const double clipped_term = clipped_rho * advantage;
        const bool take_unclipped = unclipped_term <= clipped_term;
        const double surrogate_term = take_unclipped ? unclipped_term : clipped_term;
        if (!take_unclipped) clipped += 1;

        const double kl = kl_estimate(logp_new, logps_ref[token]);
        kl_sum += kl;

        result.objective += weight_scale * (surrogate_term - beta * kl);

        // d/d theta of the selected branch: the unclipped term moves with
        // rho * grad logp; the clipped branch is locally constant. The KL
        // estimator contributes (u - 1) * grad logp with u = pref/ptheta.
        double token_weight = 0.0;
        if (take_unclipped) token_weight += advantage * rho;
        token_weight += beta * std::expm1(logps_ref[token] - logp_new);
        policy::accumulate_logp_grad(result.gradient, theta, spec, feats[j], token,
                                     weight_scale * token_weight);
      }
    }
    if (flat != tokens_i)
      throw StructuralError("surrogate: segment lengths do not cover rollout " +
                            std::to_string(i));
  }

  result.token_count = total_tokens;
  result.kl_mean = kl_sum / static_cast<double>(total_tokens);
  result.clip_fraction = static_cast<double>(clipped) / static_cast<double>(total_tokens);
  if (result.valid_rollouts > 0)
    result.mean_abs_advantage /= static_cast<double>(result.valid_rollouts);
  return result;
}

void update_reference(policy::ParamVector& theta_ref, const policy::ParamVector& theta,
                      double alpha, std::uint64_t iteration, std::uint64_t interval) {
  if (alpha < 0.0 || alpha > 1.0)
    throw ConfigError("update_reference: alpha must be in [0,1]");
  if (interval == 0 || iteration % interval != 0) return;
  if (theta_ref.values.size() != theta.values.size())
    throw StructuralError("update_reference: parameter dimensions differ");
  for (std::size_t i = 0; i < theta.values.size(); ++i)
    theta_ref.values[i] = alpha * theta.values[i] + (1.0 - alpha) * theta_ref.values[i];
}

}  // namespace exitrl::grpo
