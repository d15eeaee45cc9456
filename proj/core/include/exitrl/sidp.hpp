#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace exitrl::sidp {

// Self-improvement decision process: multi-turn tasks whose per-turn
// responses can be revised in discrete self-iteration steps. Two synthetic
// environments instantiate it:
//
//   BitstringRepair     — single turn; reconstruct a hidden bitstring from a
//                         corrupted hint; quality is the match fraction.
//   MultiTurnKeySequence — emit one token per turn matching a hidden key
//                         derived from the task seed and the prior keys;
//                         quality per turn is binary.
//
// Both environments are pure functions of (task, history); there is no
// internal mutable state, so evaluation is trivially parallel.

enum class EnvKind { BitstringRepair, MultiTurnKeySequence };

// How a response is produced: a fresh attempt, a revision of a previous
// iterate, or a revision that is asked to differ from it.
enum class IterationMode { Base, Improve, Diverge };

enum class FeedbackMode { None, Scalar, PerPosition };

// Reward rule for Improve steps: normalized quality delta (default) or the
// absolute quality of the new iterate.
enum class RewardShaping { Delta, Absolute };

struct BitstringParams {
  std::uint32_t length = 8;       // L
  double corruption_prob = 0.25;  // q, chance a hint bit is flipped
};

struct KeySequenceParams {
  std::uint32_t turns = 4;  // T_m
  std::uint32_t vocab = 8;  // V
};

struct BaseTask {
  std::string task_id;
  EnvKind env_kind = EnvKind::BitstringRepair;
  std::uint64_t seed = 0;
  std::variant<BitstringParams, KeySequenceParams> params = BitstringParams{};

  std::uint32_t turn_count() const;
  std::uint32_t response_length() const;  // tokens per turn
  std::uint32_t alphabet() const;         // tokens per position
  const BitstringParams& bitstring() const { return std::get<BitstringParams>(params); }
  const KeySequenceParams& key_sequence() const { return std::get<KeySequenceParams>(params); }
};

// Rejects out-of-range env parameters.
void validate_task(const BaseTask& task);

// One revision of a turn's response. depth 0 is the initial attempt.
struct Iterate {
  std::vector<std::uint32_t> tokens;
  std::optional<double> feedback;  // scalar signal shown to the policy
  std::optional<std::vector<double>> position_feedback;  // per-position debug mode
  double quality = 0.0;
  std::uint32_t depth = 0;
};

// Ordered turns, each an iterate chain. Completed (non-final) turns keep
// only their last iterate; the final turn keeps its full chain.
struct History {
  std::vector<std::vector<Iterate>> turns;

  bool empty() const { return turns.empty(); }
  std::size_t turn_count() const { return turns.size(); }
  const Iterate& last_iterate(std::size_t turn) const { return turns[turn].back(); }
  const Iterate& final_iterate() const { return turns.back().back(); }
};

// Throws StructuralError on gaps, empty turns, or non-consecutive depths.
void validate_history(const BaseTask& task, const History& history);

struct QualityRange {
  double worst = 0.0;
  double best = 1.0;
};

// Options that shape observations and grading, fixed per run.
struct EnvOptions {
  FeedbackMode feedback = FeedbackMode::Scalar;
  RewardShaping shaping = RewardShaping::Delta;
  QualityRange quality_range{};
};

// What the policy sees when producing one response.
struct Observation {
  EnvKind env_kind = EnvKind::BitstringRepair;
  std::string task_id;
  std::uint32_t turn = 0;   // 0-based index of the turn being answered
  std::uint32_t turns_total = 1;
  std::vector<double> task_features;  // BitstringRepair: hint bits; key sequence: empty (features are hashed on demand)
  IterationMode mode = IterationMode::Base;
  std::optional<Iterate> previous_iterate;  // absent iff mode == Base
  std::vector<Iterate> visible_history;     // last iterate per earlier turn
  std::uint32_t response_length = 0;
  std::uint32_t alphabet = 2;
  std::uint64_t task_seed = 0;
};

struct GradeResult {
  double quality = 0.0;
  std::optional<double> feedback;
  std::optional<std::vector<double>> position_feedback;
  bool valid = true;  // false for wrong arity/alphabet; graded 0 and masked
};

// Observation for the next response given a (possibly empty) history.
// For non-Base modes the history's final turn is the one being revised.
Observation reset(const BaseTask& task, const History& history, IterationMode mode,
                  std::uint64_t rng_seed, const EnvOptions& options);

GradeResult grade(const BaseTask& task, std::uint32_t turn,
                  std::span<const std::uint32_t> tokens, const EnvOptions& options);

// Sum over turns of the last iterate's quality (the episode quality measure).
double total_quality(const History& history);

// Affine rescale of a raw score onto [0,1], clamped.
double normalize_quality(double raw, const QualityRange& range);

// Reward for one self-iteration step. Improve: max(0, delta / delta_max)
// with delta_max = 1 - prev; if prev == 1 the reward is 1 iff quality is
// maintained. Diverge and Base pass the new quality through.
double shaped_iteration_reward(double prev_quality, double new_quality, IterationMode mode);

// Same, honoring the configured shaping rule for Improve steps.
double shaped_reward(double prev_quality, double new_quality, IterationMode mode,
                     RewardShaping shaping);

// Hidden-state oracles, exposed for tests and scripted policies. Targets are
// a counter-based function of (seed, task_id, turn, prior keys), so nothing
// needs to be stored to reproduce them.
std::vector<std::uint32_t> hidden_target(const BaseTask& task);  // BitstringRepair
std::vector<std::uint32_t> hint_bits(const BaseTask& task);      // BitstringRepair
std::uint32_t hidden_key(const BaseTask& task, std::uint32_t turn);  // MultiTurnKeySequence

const char* to_string(EnvKind kind);
const char* to_string(IterationMode mode);

}  // namespace exitrl::sidp
