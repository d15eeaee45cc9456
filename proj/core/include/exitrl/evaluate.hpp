#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "exitrl/policy.hpp"
#include "exitrl/sidp.hpp"

namespace exitrl::harness {

// Inference-time self-improvement protocol: each turn gets an initial
// response and then K Improve-mode revisions, each conditioned on the
// latest iterate. Scores are averaged over n independently seeded samples.
struct EvalResult {
  std::vector<double> accuracy_at;      // exact-success rate per step, size K+1
  std::vector<double> mean_quality_at;  // mean quality per step, size K+1
  double net_corrections = 0.0;  // wrong->right minus right->wrong, per sample
  double delta_k = 0.0;          // accuracy_at[K] - accuracy_at[0]
  std::uint64_t generations = 0;
  std::uint32_t steps = 0;
  std::size_t task_count = 0;
  std::size_t turn_count = 0;  // tasks x turns scored per step
};

// Produces the tokens for one observation; injectable for scripted
// policies in tests.
using Generator =
    std::function<std::vector<std::uint32_t>(const sidp::Observation&, Rng&)>;

EvalResult evaluate_k_step_with(const Generator& generate,
                                std::span<const sidp::BaseTask> tasks, std::uint32_t k,
                                const sidp::EnvOptions& options, std::uint32_t samples,
                                std::uint64_t eval_seed);

EvalResult evaluate_k_step(const policy::ParamVector& params,
                           const policy::Featurizer& featurizer,
                           std::span<const sidp::BaseTask> tasks, std::uint32_t k,
                           const sidp::EnvOptions& options, std::uint32_t samples,
                           std::uint64_t eval_seed);

}  // namespace exitrl::harness
