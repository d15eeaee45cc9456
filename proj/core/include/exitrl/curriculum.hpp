#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "exitrl/rng.hpp"
#include "exitrl/sidp.hpp"

namespace exitrl::curriculum {

using InstanceId = std::uint64_t;

// Monotone id source; owned by the training loop and checkpointed so that
// ids stay unique across resume.
class IdAllocator {
 public:
  InstanceId next() { return next_id_++; }
  InstanceId peek() const { return next_id_; }
  void restore(InstanceId next) { next_id_ = next; }

 private:
  InstanceId next_id_ = 1;
};

// A base task plus the partial history it starts from. depth counts the
// self-iteration step this instance asks for: 0 is a fresh attempt, k >= 1
// revises the history's final iterate (whose depth is k - 1). mode stays
// unassigned while the instance sits in the buffer.
struct TaskInstance {
  InstanceId id = 0;
  sidp::BaseTask base;
  std::uint32_t depth = 0;
  sidp::History history;
  std::optional<sidp::IterationMode> mode;
  std::optional<InstanceId> lineage;
  std::uint64_t created_at = 0;

  bool is_base() const { return history.empty(); }
  // 0-based turn the episode starts generating from.
  std::uint32_t start_turn() const {
    return is_base() ? 0u : static_cast<std::uint32_t>(history.turn_count()) - 1;
  }
  // Stable content hash of the starting point (task id, start turn, and the
  // iterate being revised). Used for distinct-instance accounting.
  std::uint64_t start_hash() const;
};

struct BufferEntry {
  TaskInstance instance;
  double score = 0.0;      // learnability: group reward variance, in [0, 0.25]
  bool inherited = true;   // true until the first evaluation re-scores it
};

struct BufferConfig {
  std::size_t capacity = 128;    // N
  std::size_t min_size = 32;     // B_min, replay activation threshold
  double selection_prob = 0.5;   // p
  double divergence_prob = 0.2;  // p_div
  double kappa = 1.0;            // softmax inverse temperature
};

// Fixed-capacity priority store. At capacity an insert is admitted only if
// its score is >= the current minimum, which it evicts (ties evict the
// oldest, then the lowest id).
class TaskBuffer {
 public:
  TaskBuffer() = default;
  explicit TaskBuffer(BufferConfig config) : config_(config) {}

  const BufferConfig& config() const { return config_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<BufferEntry>& entries() const { return entries_; }

  bool insert(TaskInstance instance, double score, bool inherited = true);
  // Updates the score of the entry holding `id` and clears its inherited
  // flag; returns false if the entry is no longer resident.
  bool rescore(InstanceId id, double score);
  const BufferEntry* find(InstanceId id) const;

  double min_score() const;
  double max_score() const;
  double mean_score() const;

  // Softmax draw with weights exp(score * kappa); the entry stays resident.
  const BufferEntry& sample(Rng& rng) const;

  void restore_entries(std::vector<BufferEntry> entries) { entries_ = std::move(entries); }

 private:
  std::size_t min_index() const;

  BufferConfig config_;
  std::vector<BufferEntry> entries_;
};

// Population variance of the group rewards (the learnability score S).
double learnability_score(std::span<const double> rewards);

// Diverge with probability p_div, else Improve.
sidp::IterationMode assign_mode(Rng& rng, double divergence_prob);

struct SampledInstance {
  TaskInstance instance;
  std::optional<InstanceId> entry_id;  // set when replayed from the buffer
  std::uint64_t source_created_at = 0;  // the replayed entry's creation iteration
};

// One training instance: a buffer replay when the buffer has reached its
// activation size and the selection gate fires, otherwise a fresh Base
// instance drawn uniformly from the base task set. Replayed instances with
// a history get a mode assigned here; depth-0 replays stay Base.
SampledInstance sample_training_instance(const TaskBuffer& buffer,
                                         std::span<const sidp::BaseTask> base_tasks,
                                         Rng& rng, IdAllocator& ids, std::uint64_t iteration);

// Successor instance after one rollout: the rollout's completed history
// (for Base parents, every turn it generated; otherwise the parent history
// with the new iterate appended on its final turn), depth incremented.
TaskInstance expand(const TaskInstance& parent, sidp::History rollout_history,
                    IdAllocator& ids, std::uint64_t iteration);

// Selection-ready instances for every per-turn prefix of the expanded
// instance's history; the full-history prefix is the expanded instance
// itself. Modes stay unassigned.
std::vector<TaskInstance> precompute_children(const TaskInstance& expanded, IdAllocator& ids,
                                              std::uint64_t iteration);

struct UpdateResult {
  double score = 0.0;
  bool rescored = false;
  std::size_t inserted = 0;
};

// Alg-style buffer update after a graded group: computes S, re-scores the
// replayed entry (or inserts a fresh Base instance with its empirical
// score), then offers each child at inherited score S.
UpdateResult update_after_rollout(TaskBuffer& buffer, const SampledInstance& sampled,
                                  std::span<const double> group_rewards,
                                  std::span<const TaskInstance> children);

}  // namespace exitrl::curriculum
