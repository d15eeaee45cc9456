#pragma once

#include <cstdint>
#include <vector>

#include "exitrl/curriculum.hpp"
#include "exitrl/grpo.hpp"
#include "exitrl/policy.hpp"
#include "exitrl/rng.hpp"
#include "exitrl/sidp.hpp"

namespace testutil {

inline exitrl::sidp::BaseTask bitstring_task(std::uint32_t length, double q,
                                             std::uint64_t seed,
                                             const std::string& id = "t0") {
  exitrl::sidp::BaseTask task;
  task.task_id = id;
  task.env_kind = exitrl::sidp::EnvKind::BitstringRepair;
  task.seed = seed;
  task.params = exitrl::sidp::BitstringParams{length, q};
  return task;
}

inline exitrl::sidp::BaseTask keyseq_task(std::uint32_t turns, std::uint32_t vocab,
                                          std::uint64_t seed,
                                          const std::string& id = "k0") {
  exitrl::sidp::BaseTask task;
  task.task_id = id;
  task.env_kind = exitrl::sidp::EnvKind::MultiTurnKeySequence;
  task.seed = seed;
  task.params = exitrl::sidp::KeySequenceParams{turns, vocab};
  return task;
}

// Featurizer over canned feature matrices, keyed by observation turn index.
// Lets tests build arbitrary tiny (alphabet, feature_dim) instances without
// touching the environments.
class StubFeaturizer final : public exitrl::policy::Featurizer {
 public:
  StubFeaturizer(std::uint32_t alphabet, std::uint32_t feature_dim)
      : spec_{exitrl::sidp::EnvKind::BitstringRepair, alphabet, feature_dim, 0} {}

  const exitrl::policy::FeatureSpec& spec() const override { return spec_; }

  std::vector<std::vector<double>> features(
      const exitrl::sidp::Observation& obs) const override {
    return tables_.at(obs.turn);
  }

  // Registers the feature matrix for segment `index` and returns a matching
  // synthetic observation.
  exitrl::sidp::Observation add_segment(std::uint32_t index,
                                        std::vector<std::vector<double>> feats) {
    if (tables_.size() <= index) tables_.resize(index + 1);
    exitrl::sidp::Observation obs;
    obs.turn = index;
    obs.response_length = static_cast<std::uint32_t>(feats.size());
    obs.alphabet = spec_.alphabet;
    tables_[index] = std::move(feats);
    return obs;
  }

 private:
  exitrl::policy::FeatureSpec spec_;
  std::vector<std::vector<std::vector<double>>> tables_;
};

inline std::vector<std::vector<double>> random_features(exitrl::Rng& rng, std::size_t positions,
                                                        std::uint32_t feature_dim) {
  std::vector<std::vector<double>> feats(positions, std::vector<double>(feature_dim));
  for (auto& row : feats)
    for (auto& v : row) v = 2.0 * rng.uniform() - 1.0;
  return feats;
}

inline exitrl::policy::ParamVector random_params(exitrl::Rng& rng, std::uint32_t dim,
                                                 double scale = 1.0) {
  exitrl::policy::ParamVector p;
  p.values.resize(dim);
  for (auto& v : p.values) v = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

}  // namespace testutil
