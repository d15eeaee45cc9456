#include "exitrl/sidp.hpp"

#include <algorithm>
#include <cmath>

#include "exitrl/error.hpp"
#include "exitrl/rng.hpp"

namespace exitrl::sidp {

namespace {

constexpr std::string_view kTargetTag = "sidp.target";
constexpr std::string_view kHintTag = "sidp.hint";
constexpr std::string_view kKeyTag = "sidp.key";

std::uint64_t task_stream_seed(const BaseTask& task, std::string_view tag) {
  return hash_combine(hash_combine(task.seed, hash_str(tag)), hash_str(task.task_id));
}

}  // namespace

std::uint32_t BaseTask::turn_count() const {
  return env_kind == EnvKind::BitstringRepair ? 1u : key_sequence().turns;
}

std::uint32_t BaseTask::response_length() const {
  return env_kind == EnvKind::BitstringRepair ? bitstring().length : 1u;
}

std::uint32_t BaseTask::alphabet() const {
  return env_kind == EnvKind::BitstringRepair ? 2u : key_sequence().vocab;
}

void validate_task(const BaseTask& task) {
  if (task.env_kind == EnvKind::BitstringRepair) {
    const auto& p = task.bitstring();
    if (p.length < 1) throw ConfigError("BitstringRepair: length must be >= 1");
    if (p.corruption_prob < 0.0 || p.corruption_prob > 0.5)
      throw ConfigError("BitstringRepair: corruption_prob must be in [0, 0.5]");
  } else {
    const auto& p = task.key_sequence();
    if (p.turns < 1) throw ConfigError("MultiTurnKeySequence: turns must be >= 1");
    if (p.vocab < 2) throw ConfigError("MultiTurnKeySequence: vocab must be >= 2");
  }
}

void validate_history(const BaseTask& task, const History& history) {
  if (history.turns.size() > task.turn_count())
    throw StructuralError("history has more turns than the task allows");
  for (std::size_t t = 0; t < history.turns.size(); ++t) {
    const auto& chain = history.turns[t];
    if (chain.empty())
      throw StructuralError("history turn " + std::to_string(t) + " has no iterates");
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      if (chain[k + 1].depth != chain[k].depth + 1)
        throw StructuralError("history turn " + std::to_string(t) +
                              ": iterate depths are not consecutive");
    }
    for (const auto& it : chain) {
      if (it.tokens.size() != task.response_length())
        throw StructuralError("history turn " + std::to_string(t) +
                              ": iterate has wrong token arity");
    }
  }
}

std::vector<std::uint32_t> hidden_target(const BaseTask& task) {
  const auto& p = task.bitstring();
  std::uint64_t base = task_stream_seed(task, kTargetTag);
  std::vector<std::uint32_t> bits(p.length);
  for (std::uint32_t i = 0; i < p.length; ++i) {
    bits[i] = static_cast<std::uint32_t>(mix64(hash_combine(base, i)) & 1ULL);
  }
  return bits;
}

std::vector<std::uint32_t> hint_bits(const BaseTask& task) {
  const auto& p = task.bitstring();
  std::vector<std::uint32_t> bits = hidden_target(task);
  std::uint64_t base = task_stream_seed(task, kHintTag);
  for (std::uint32_t i = 0; i < p.length; ++i) {
    double u = static_cast<double>(mix64(hash_combine(base, i)) >> 11) * 0x1.0p-53;
    if (u < p.corruption_prob) bits[i] ^= 1u;
  }
  return bits;
}

std::uint32_t hidden_key(const BaseTask& task, std::uint32_t turn) {
  const auto& p = task.key_sequence();
  if (turn >= p.turns) throw DomainError("hidden_key: turn out of range");
  std::uint64_t base = task_stream_seed(task, kKeyTag);
  // Chain keys through a rolling hash of their predecessors.
  std::uint64_t prior = 0;
  std::uint32_t key = 0;
  for (std::uint32_t t = 0; t <= turn; ++t) {
    std::uint64_t word = hash_words(base, {static_cast<std::uint64_t>(t), prior});
    key = static_cast<std::uint32_t>(mix64(word) % p.vocab);
    prior = hash_combine(prior, key);
  }
  return key;
}

Observation reset(const BaseTask& task, const History& history, IterationMode mode,
                  std::uint64_t /*rng_seed*/, const EnvOptions& options) {
  validate_task(task);
  validate_history(task, history);
  // Base observations are legal mid-episode (answering the turn after the
  // last completed one); iteration modes need something to iterate on.
  if (mode != IterationMode::Base && history.empty())
    throw StructuralError("reset: iteration modes require a non-empty history");

  Observation obs;
  obs.env_kind = task.env_kind;
  obs.task_id = task.task_id;
  obs.turns_total = task.turn_count();
  obs.mode = mode;
  obs.response_length = task.response_length();
  obs.alphabet = task.alphabet();
  obs.task_seed = task.seed;

  if (mode == IterationMode::Base) {
    // Answering the turn after the last completed one.
    obs.turn = static_cast<std::uint32_t>(history.turn_count());
    if (obs.turn >= obs.turns_total)
      throw StructuralError("reset: no turn left to answer in Base mode");
    for (std::size_t t = 0; t < history.turn_count(); ++t)
      obs.visible_history.push_back(history.last_iterate(t));
  } else {
    // Revising the final turn of the history.
    obs.turn = static_cast<std::uint32_t>(history.turn_count()) - 1;
    obs.previous_iterate = history.final_iterate();
    if (options.feedback == FeedbackMode::None) {
      obs.previous_iterate->feedback.reset();
      obs.previous_iterate->position_feedback.reset();
    } else if (options.feedback == FeedbackMode::Scalar) {
      obs.previous_iterate->position_feedback.reset();
    }
    for (std::size_t t = 0; t + 1 < history.turn_count(); ++t)
      obs.visible_history.push_back(history.last_iterate(t));
  }

  if (task.env_kind == EnvKind::BitstringRepair) {
    auto hint = hint_bits(task);
    obs.task_features.assign(hint.begin(), hint.end());
  }
  return obs;
}

GradeResult grade(const BaseTask& task, std::uint32_t turn,
                  std::span<const std::uint32_t> tokens, const EnvOptions& options) {
  validate_task(task);
  if (turn >= task.turn_count()) throw DomainError("grade: turn out of range");

  GradeResult out;
  const std::uint32_t arity = task.response_length();
  const std::uint32_t alphabet = task.alphabet();
  bool valid = tokens.size() == arity;
  if (valid) {
    for (auto tok : tokens) {
      if (tok >= alphabet) {
        valid = false;
        break;
      }
    }
  }
  if (!valid) {
    out.quality = 0.0;
    out.valid = false;
    if (options.feedback != FeedbackMode::None) out.feedback = 0.0;
    return out;
  }

  double raw = 0.0;
  std::vector<double> matches;
  if (task.env_kind == EnvKind::BitstringRepair) {
    auto target = hidden_target(task);
    std::uint32_t hits = 0;
    matches.resize(arity);
    for (std::uint32_t i = 0; i < arity; ++i) {
      bool hit = tokens[i] == target[i];
      hits += hit ? 1u : 0u;
      matches[i] = hit ? 1.0 : 0.0;
    }
    raw = static_cast<double>(hits) / static_cast<double>(arity);
  } else {
    bool hit = tokens[0] == hidden_key(task, turn);
    raw = hit ? 1.0 : 0.0;
    matches.assign(1, raw);
  }

  out.quality = normalize_quality(raw, options.quality_range);
  if (options.feedback != FeedbackMode::None) out.feedback = out.quality;
  if (options.feedback == FeedbackMode::PerPosition) out.position_feedback = std::move(matches);
  return out;
}

double total_quality(const History& history) {
  double sum = 0.0;
  for (const auto& chain : history.turns) sum += chain.back().quality;
  return sum;
}

double normalize_quality(double raw, const QualityRange& range) {
  if (range.worst == range.best)
    throw ConfigError("quality range: worst and best must differ");
  double v = (raw - range.worst) / (range.best - range.worst);
  return std::clamp(v, 0.0, 1.0);
}

double shaped_iteration_reward(double prev_quality, double new_quality, IterationMode mode) {
  if (prev_quality < 0.0 || prev_quality > 1.0 || new_quality < 0.0 || new_quality > 1.0)
    throw DomainError("shaped_iteration_reward: qualities must lie in [0,1]");
  if (mode != IterationMode::Improve) return new_quality;
  if (prev_quality >= 1.0) return new_quality >= 1.0 ? 1.0 : 0.0;
  double delta = new_quality - prev_quality;
  if (delta <= 0.0) return 0.0;
  return delta / (1.0 - prev_quality);
}

double shaped_reward(double prev_quality, double new_quality, IterationMode mode,
                     RewardShaping shaping) {
  if (mode == IterationMode::Improve && shaping == RewardShaping::Absolute)
    return shaped_iteration_reward(prev_quality, new_quality, IterationMode::Base);
  return shaped_iteration_reward(prev_quality, new_quality, mode);
}

const char* to_string(EnvKind kind) {
  return kind == EnvKind::BitstringRepair ? "bitstring_repair" : "multi_turn_key_sequence";
}

const char* to_string(IterationMode mode) {
  switch (mode) {
    case IterationMode::Base: return "base";
    case IterationMode::Improve: return "improve";
    default: return "diverge";
  }
}

}  // namespace exitrl::sidp
