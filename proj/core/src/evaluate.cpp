#include "exitrl/evaluate.hpp"

#include <cmath>

#include "exitrl/error.hpp"

namespace exitrl::harness {

namespace {
constexpr double kSuccessThreshold = 1.0 - 1e-12;
}

EvalResult evaluate_k_step_with(const Generator& generate,
                                std::span<const sidp::BaseTask> tasks, std::uint32_t k,
                                const sidp::EnvOptions& options, std::uint32_t samples,
                                std::uint64_t eval_seed) {
  if (samples < 1) throw ConfigError("evaluate_k_step: samples must be >= 1");

  EvalResult result;
  result.steps = k;
  result.task_count = tasks.size();
  result.accuracy_at.assign(k + 1, 0.0);
  result.mean_quality_at.assign(k + 1, 0.0);

  std::size_t scored_turns = 0;
  double corrections = 0.0;

  for (std::uint32_t s = 0; s < samples; ++s) {
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      const auto& task = tasks[ti];
      Rng rng = derive_rng(eval_seed, "eval", {s, ti});
      sidp::History history;
      for (std::uint32_t turn = 0; turn < task.turn_count(); ++turn) {
        if (s == 0) scored_turns += 1;

        auto obs = sidp::reset(task, history, sidp::IterationMode::Base, rng.state(), options);
        auto tokens = generate(obs, rng);
        result.generations += 1;
        auto graded = sidp::grade(task, turn, tokens, options);
        sidp::Iterate it;
        it.tokens = std::move(tokens);
        it.feedback = graded.feedback;
        it.position_feedback = graded.position_feedback;
        it.quality = graded.quality;
        it.depth = 0;
        history.turns.push_back({std::move(it)});

        bool prev_success = graded.quality >= kSuccessThreshold;
        result.accuracy_at[0] += prev_success ? 1.0 : 0.0;
        result.mean_quality_at[0] += graded.quality;

        for (std::uint32_t step = 1; step <= k; ++step) {
          auto step_obs =
              sidp::reset(task, history, sidp::IterationMode::Improve, rng.state(), options);
          auto step_tokens = generate(step_obs, rng);
          result.generations += 1;
          auto step_graded = sidp::grade(task, turn, step_tokens, options);
          sidp::Iterate next;
          next.tokens = std::move(step_tokens);
          next.feedback = step_graded.feedback;
          next.position_feedback = step_graded.position_feedback;
          next.quality = step_graded.quality;
          next.depth = step;
          history.turns.back().push_back(std::move(next));

          const bool success = step_graded.quality >= kSuccessThreshold;
          result.accuracy_at[step] += success ? 1.0 : 0.0;
          result.mean_quality_at[step] += step_graded.quality;
          if (success && !prev_success) corrections += 1.0;
          if (!success && prev_success) corrections -= 1.0;
          prev_success = success;
        }
        // Completed turns keep only their final iterate.
        auto last = history.turns.back().back();
        history.turns.back().assign(1, std::move(last));
      }
    }
  }

  result.turn_count = scored_turns;
  const double denom = static_cast<double>(scored_turns) * static_cast<double>(samples);
  if (denom > 0.0) {
    for (auto& v : result.accuracy_at) v /= denom;
    for (auto& v : result.mean_quality_at) v /= denom;
  }
  result.net_corrections = corrections / static_cast<double>(samples);
  result.delta_k = result.accuracy_at[k] - result.accuracy_at[0];
  return result;
}

EvalResult evaluate_k_step(const policy::ParamVector& params,
                           const policy::Featurizer& featurizer,
                           std::span<const sidp::BaseTask> tasks, std::uint32_t k,
                           const sidp::EnvOptions& options, std::uint32_t samples,
                           std::uint64_t eval_seed) {
  Generator generate = [&](const sidp::Observation& obs, Rng& rng) {
    return policy::sample_response(params, obs, featurizer, rng).tokens;
  };
  return evaluate_k_step_with(generate, tasks, k, options, samples, eval_seed);
}

}  // namespace exitrl::harness
