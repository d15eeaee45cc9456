#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "exitrl/rng.hpp"
#include "exitrl/sidp.hpp"

namespace exitrl::policy {

// Per-position linear-softmax policy over discrete tokens. Logits at each
// position are a linear function of position-wise features, which keeps
// log-probabilities and their parameter gradients in closed form — no
// autodiff anywhere in the optimizer path.

enum class ParamRole { Current, Old, Reference };

struct ParamVector {
  std::vector<double> values;
  ParamRole role = ParamRole::Current;
};

struct SampledResponse {
  std::vector<std::uint32_t> tokens;
  std::vector<double> logps;  // per-token, under the sampling parameters
  bool valid = true;
};

// Featurization descriptor. Parameters are laid out token-major:
// params[a * feature_dim + j] weights feature j toward token a.
struct FeatureSpec {
  sidp::EnvKind env_kind = sidp::EnvKind::BitstringRepair;
  std::uint32_t alphabet = 2;
  std::uint32_t feature_dim = 1;
  std::uint32_t hash_features = 64;  // key-sequence context width

  std::uint32_t dim() const { return alphabet * feature_dim; }
};

class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual const FeatureSpec& spec() const = 0;
  // One feature vector (length feature_dim) per response position.
  virtual std::vector<std::vector<double>> features(const sidp::Observation& obs) const = 0;
};

// Production featurization for the two built-in environments. Inputs tied
// to the previous iterate are gated per mode (separate Improve and Diverge
// slots), so revising a trusted solution and diverging from one do not
// compete for the same weights, and the hint's weight under revision is
// independent of its weight on fresh attempts.
//
// BitstringRepair, per position: bias, mode one-hot, the hint bit gated by
// mode, the hint gated by signed feedback (so hint trust can fall off as
// the revised solution improves), the previous-iterate bit, the previous
// bit gated by signed feedback, the signed feedback itself, and the
// previous bit gated by a verified-solved indicator (each with
// Improve/Diverge slots), plus the previous bit gated by per-position
// feedback (zero unless the debug feedback mode is on). Bits map to
// {-1,+1}; absent inputs are zeros. The solved gate exists because locking
// onto a known-perfect iterate and searching around an imperfect one need
// different weights than any linear-in-feedback schedule can provide.
//
// MultiTurnKeySequence, single position: bias, mode one-hot, turn fraction,
// signed hash features of (task id, turn) shared across modes, then
// mode-gated previous-token one-hots, feedback-weighted one-hots, and the
// signed feedback.
class EnvFeaturizer final : public Featurizer {
 public:
  EnvFeaturizer(sidp::EnvKind kind, std::uint32_t alphabet, std::uint32_t hash_features = 64);

  const FeatureSpec& spec() const override { return spec_; }
  std::vector<std::vector<double>> features(const sidp::Observation& obs) const override;

 private:
  FeatureSpec spec_;
};

// Log-probabilities over the alphabet for a single position.
std::vector<double> position_log_probs(const ParamVector& params, const FeatureSpec& spec,
                                       std::span<const double> feats);

// Adds weight * d(log pi(token))/d(params) for one position into grad.
void accumulate_logp_grad(std::span<double> grad, const ParamVector& params,
                          const FeatureSpec& spec, std::span<const double> feats,
                          std::uint32_t token, double weight);

SampledResponse sample_response(const ParamVector& params, const sidp::Observation& obs,
                                const Featurizer& featurizer, Rng& rng);

// Exact per-token log-probabilities of the given tokens. Recomputing on the
// sampling parameters reproduces SampledResponse::logps bit-for-bit.
std::vector<double> log_prob(const ParamVector& params, const sidp::Observation& obs,
                             const Featurizer& featurizer,
                             std::span<const std::uint32_t> tokens);

// Gradient of the summed token log-probabilities, dimension spec.dim().
std::vector<double> grad_log_prob(const ParamVector& params, const sidp::Observation& obs,
                                  const Featurizer& featurizer,
                                  std::span<const std::uint32_t> tokens);

enum class OptimizerKind { Adam, Ascent };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled weight decay. Keeps parameter directions the data cannot
  // identify (collinear features) anchored at the minimum-norm solution.
  double weight_decay = 0.0;
};

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
};

// Ascent step (maximization). Adam by default; plain gradient ascent when
// configured. Throws NumericError on non-finite gradient entries.
void apply_update(ParamVector& params, std::span<const double> gradient, OptimizerState& state,
                  double learning_rate, const OptimizerConfig& config);

}  // namespace exitrl::policy
