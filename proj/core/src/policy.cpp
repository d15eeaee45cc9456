#include "exitrl/policy.hpp"

#include <cmath>
#include <string>

#include "exitrl/error.hpp"

namespace exitrl::policy {

namespace {

constexpr std::size_t kModeSlots = 3;  // base, improve, diverge one-hot

double signed_bit(std::uint32_t bit) { return bit ? 1.0 : -1.0; }

double signed_feedback(const std::optional<double>& fb) {
  return fb ? 2.0 * *fb - 1.0 : 0.0;
}

void check_dimension(const ParamVector& params, const FeatureSpec& spec) {
  if (params.values.size() != spec.dim())
    throw ConfigError("policy: parameter dimension " + std::to_string(params.values.size()) +
                      " does not match featurization dimension " + std::to_string(spec.dim()));
}

void check_tokens(const sidp::Observation& obs, std::span<const std::uint32_t> tokens) {
  if (tokens.size() != obs.response_length)
    throw DomainError("policy: token arity does not match the observation");
  for (auto tok : tokens)
    if (tok >= obs.alphabet) throw DomainError("policy: token id outside the alphabet");
}

void mode_one_hot(std::vector<double>& f, std::size_t at, sidp::IterationMode mode) {
  f[at + static_cast<std::size_t>(mode)] = 1.0;
}

}  // namespace

EnvFeaturizer::EnvFeaturizer(sidp::EnvKind kind, std::uint32_t alphabet,
                             std::uint32_t hash_features) {
  spec_.env_kind = kind;
  spec_.alphabet = alphabet;
  spec_.hash_features = hash_features;
  if (kind == sidp::EnvKind::BitstringRepair) {
    // bias, mode(3), hint x mode(3), hint*fb(2), prev(2), prev*fb(2),
    // fb(2), prev*solved(2), prev*posfb
    spec_.feature_dim = 18;
  } else {
    // bias, mode(3), turn fraction, hash(H), prev one-hot(2V),
    // prev*fb one-hot(2V), fb(2)
    spec_.feature_dim = 5 + hash_features + 4 * alphabet + 2;
  }
}

std::vector<std::vector<double>> EnvFeaturizer::features(const sidp::Observation& obs) const {
  if (obs.alphabet != spec_.alphabet || obs.env_kind != spec_.env_kind)
    throw ConfigError("featurizer: observation does not match the feature spec");

  std::vector<std::vector<double>> out;
  const auto& prev = obs.previous_iterate;
  const double fb = prev ? signed_feedback(prev->feedback) : 0.0;
  // Index of the Improve/Diverge slot pair; unused in Base mode.
  const std::size_t revise = obs.mode == sidp::IterationMode::Diverge ? 1 : 0;

  if (spec_.env_kind == sidp::EnvKind::BitstringRepair) {
    out.resize(obs.response_length);
    for (std::uint32_t j = 0; j < obs.response_length; ++j) {
      std::vector<double> f(spec_.feature_dim, 0.0);
      f[0] = 1.0;
      mode_one_hot(f, 1, obs.mode);
      const double hint = obs.task_features[j] > 0.5 ? 1.0 : -1.0;
      f[4 + static_cast<std::size_t>(obs.mode)] = hint;
      if (prev) {
        const double pb = signed_bit(prev->tokens[j]);
        f[7 + revise] = hint * fb;  // lets hint trust fall off with feedback
        f[9 + revise] = pb;
        f[11 + revise] = pb * fb;
        f[13 + revise] = fb;
        // Verified-solved indicator: a revision of a known-perfect iterate
        // can lock onto it without saturating the graded-feedback slots.
        if (prev->feedback && *prev->feedback >= 1.0) f[15 + revise] = pb;
        if (prev->position_feedback)
          f[17] = pb * (2.0 * (*prev->position_feedback)[j] - 1.0);
      }
      out[j] = std::move(f);
    }
  } else {
    std::vector<double> f(spec_.feature_dim, 0.0);
    f[0] = 1.0;
    mode_one_hot(f, 1, obs.mode);
    f[4] = obs.turns_total > 0
               ? static_cast<double>(obs.turn) / static_cast<double>(obs.turns_total)
               : 0.0;
    const std::uint64_t ctx = hash_combine(hash_str(obs.task_id), obs.turn);
    for (std::uint32_t j = 0; j < spec_.hash_features; ++j)
      f[5 + j] = (mix64(hash_combine(ctx, j)) & 1ULL) ? 1.0 : -1.0;
    const std::size_t prev_at = 5 + spec_.hash_features;
    if (prev) {
      const std::uint32_t tok = prev->tokens[0];
      const std::uint32_t V = spec_.alphabet;
      f[prev_at + revise * V + tok] = 1.0;
      f[prev_at + (2 + revise) * V + tok] = fb;
      f[prev_at + 4 * V + revise] = fb;
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<double> position_log_probs(const ParamVector& params, const FeatureSpec& spec,
                                       std::span<const double> feats) {
  check_dimension(params, spec);
  const std::uint32_t A = spec.alphabet;
  const std::uint32_t F = spec.feature_dim;
  std::vector<double> logits(A, 0.0);
  for (std::uint32_t a = 0; a < A; ++a) {
    const double* w = params.values.data() + static_cast<std::size_t>(a) * F;
    double acc = 0.0;
    for (std::uint32_t j = 0; j < F; ++j) acc += w[j] * feats[j];
    logits[a] = acc;
  }
  double max = logits[0];
  for (double l : logits) max = std::max(max, l);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - max);
  const double lse = max + std::log(sum);
  for (double& l : logits) l -= lse;
  return logits;  // now log-probabilities
}

void accumulate_logp_grad(std::span<double> grad, const ParamVector& params,
                          const FeatureSpec& spec, std::span<const double> feats,
                          std::uint32_t token, double weight) {
  const std::uint32_t A = spec.alphabet;
  const std::uint32_t F = spec.feature_dim;
  auto logps = position_log_probs(params, spec, feats);
  // d log pi(token) / d w_a = (1[a == token] - softmax_a) * feats
  for (std::uint32_t a = 0; a < A; ++a) {
    const double coeff = weight * ((a == token ? 1.0 : 0.0) - std::exp(logps[a]));
    double* g = grad.data() + static_cast<std::size_t>(a) * F;
    for (std::uint32_t j = 0; j < F; ++j) g[j] += coeff * feats[j];
  }
}

SampledResponse sample_response(const ParamVector& params, const sidp::Observation& obs,
                                const Featurizer& featurizer, Rng& rng) {
  const auto feats = featurizer.features(obs);
  SampledResponse resp;
  resp.tokens.reserve(feats.size());
  resp.logps.reserve(feats.size());
  for (const auto& f : feats) {
    const auto logps = position_log_probs(params, featurizer.spec(), f);
    const double u = rng.uniform();
    double cdf = 0.0;
    std::uint32_t tok = static_cast<std::uint32_t>(logps.size()) - 1;
    for (std::uint32_t a = 0; a < logps.size(); ++a) {
      cdf += std::exp(logps[a]);
      if (u < cdf) {
        tok = a;
        break;
      }
    }
    resp.tokens.push_back(tok);
    resp.logps.push_back(logps[tok]);
  }
  return resp;
}

std::vector<double> log_prob(const ParamVector& params, const sidp::Observation& obs,
                             const Featurizer& featurizer,
                             std::span<const std::uint32_t> tokens) {
  check_tokens(obs, tokens);
  const auto feats = featurizer.features(obs);
  std::vector<double> out(tokens.size());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto logps = position_log_probs(params, featurizer.spec(), feats[j]);
    out[j] = logps[tokens[j]];
  }
  return out;
}

std::vector<double> grad_log_prob(const ParamVector& params, const sidp::Observation& obs,
                                  const Featurizer& featurizer,
                                  std::span<const std::uint32_t> tokens) {
  check_tokens(obs, tokens);
  const auto feats = featurizer.features(obs);
  std::vector<double> grad(featurizer.spec().dim(), 0.0);
  for (std::size_t j = 0; j < tokens.size(); ++j)
    accumulate_logp_grad(grad, params, featurizer.spec(), feats[j], tokens[j], 1.0);
  return grad;
}

void apply_update(ParamVector& params, std::span<const double> gradient, OptimizerState& state,
                  double learning_rate, const OptimizerConfig& config) {
  const std::size_t n = params.values.size();
  if (gradient.size() != n)
    throw StructuralError("apply_update: gradient dimension does not match parameters");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(gradient[i]))
      throw NumericError("apply_update: non-finite gradient entry at index " +
                         std::to_string(i));
  }

  if (config.kind == OptimizerKind::Ascent) {
    for (std::size_t i = 0; i < n; ++i) {
      params.values[i] += learning_rate * gradient[i];
      params.values[i] -= learning_rate * config.weight_decay * params.values[i];
    }
    return;
  }

  if (state.first_moment.size() != n) state.first_moment.assign(n, 0.0);
  if (state.second_moment.size() != n) state.second_moment.assign(n, 0.0);
  state.step += 1;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = b1 * m + (1.0 - b1) * gradient[i];
    v = b2 * v + (1.0 - b2) * gradient[i] * gradient[i];
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params.values[i] += learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    params.values[i] -= learning_rate * config.weight_decay * params.values[i];
  }
}

}  // namespace exitrl::policy
