#include "exitrl/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "exitrl/error.hpp"

namespace exitrl::curriculum {

std::uint64_t TaskInstance::start_hash() const {
  std::uint64_t h = hash_str(base.task_id);
  if (is_base()) return hash_combine(h, 0x6261736521ULL);
  h = hash_combine(h, start_turn());
  const auto& it = history.final_iterate();
  h = hash_combine(h, it.depth);
  for (auto tok : it.tokens) h = hash_combine(h, tok);
  return h;
}

bool TaskBuffer::insert(TaskInstance instance, double score, bool inherited) {
  if (!std::isfinite(score)) throw NumericError("buffer insert: score is not finite");
  if (entries_.size() < config_.capacity) {
    entries_.push_back(BufferEntry{std::move(instance), score, inherited});
    return true;
  }
  const std::size_t victim = min_index();
  if (score < entries_[victim].score) return false;
  entries_[victim] = BufferEntry{std::move(instance), score, inherited};
  return true;
}

bool TaskBuffer::rescore(InstanceId id, double score) {
  if (!std::isfinite(score)) throw NumericError("buffer rescore: score is not finite");
  for (auto& e : entries_) {
    if (e.instance.id == id) {
      e.score = score;
      e.inherited = false;
      return true;
    }
  }
  return false;
}

const BufferEntry* TaskBuffer::find(InstanceId id) const {
  for (const auto& e : entries_)
    if (e.instance.id == id) return &e;
  return nullptr;
}

std::size_t TaskBuffer::min_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    const auto& cand = entries_[i];
    const auto& cur = entries_[best];
    if (cand.score < cur.score ||
        (cand.score == cur.score &&
         (cand.instance.created_at < cur.instance.created_at ||
          (cand.instance.created_at == cur.instance.created_at &&
           cand.instance.id < cur.instance.id)))) {
      best = i;
    }
  }
  return best;
}

double TaskBuffer::min_score() const {
  double v = entries_.empty() ? 0.0 : entries_[0].score;
  for (const auto& e : entries_) v = std::min(v, e.score);
  return v;
}

double TaskBuffer::max_score() const {
  double v = entries_.empty() ? 0.0 : entries_[0].score;
  for (const auto& e : entries_) v = std::max(v, e.score);
  return v;
}

double TaskBuffer::mean_score() const {
  if (entries_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.score;
  return sum / static_cast<double>(entries_.size());
}

const BufferEntry& TaskBuffer::sample(Rng& rng) const {
  if (entries_.empty()) throw StructuralError("buffer sample: buffer is empty");
  // Stable softmax over exp(score * kappa).
  double max_w = -std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) max_w = std::max(max_w, e.score * config_.kappa);
  double total = 0.0;
  for (const auto& e : entries_) total += std::exp(e.score * config_.kappa - max_w);
  const double u = rng.uniform() * total;
  double cdf = 0.0;
  for (const auto& e : entries_) {
    cdf += std::exp(e.score * config_.kappa - max_w);
    if (u < cdf) return e;
  }
  return entries_.back();
}

double learnability_score(std::span<const double> rewards) {
  if (rewards.size() < 2)
    throw StructuralError("learnability_score: need at least two rewards");
  double mean = 0.0;
  for (double r : rewards) {
    if (!std::isfinite(r)) throw NumericError("learnability_score: non-finite reward");
    mean += r;
  }
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  return var / static_cast<double>(rewards.size());
}

sidp::IterationMode assign_mode(Rng& rng, double divergence_prob) {
  if (divergence_prob < 0.0 || divergence_prob > 1.0)
    throw ConfigError("assign_mode: divergence probability must be in [0,1]");
  return rng.uniform() < divergence_prob ? sidp::IterationMode::Diverge
                                         : sidp::IterationMode::Improve;
}

SampledInstance sample_training_instance(const TaskBuffer& buffer,
                                         std::span<const sidp::BaseTask> base_tasks,
                                         Rng& rng, IdAllocator& ids, std::uint64_t iteration) {
  if (base_tasks.empty())
    throw StructuralError("sample_training_instance: base task set is empty");
  // Short-circuit like the gate is written: the selection draw is only
  // consumed once the buffer has reached its activation size.
  if (buffer.size() >= buffer.config().min_size &&
      rng.uniform() < buffer.config().selection_prob) {
    const BufferEntry& entry = buffer.sample(rng);
    TaskInstance inst = entry.instance;
    const InstanceId entry_id = inst.id;
    const std::uint64_t entry_created_at = inst.created_at;
    inst.id = ids.next();
    inst.lineage = entry_id;
    inst.created_at = iteration;
    inst.mode = inst.is_base() ? sidp::IterationMode::Base
                               : assign_mode(rng, buffer.config().divergence_prob);
    return SampledInstance{std::move(inst), entry_id, entry_created_at};
  }
  TaskInstance inst;
  inst.id = ids.next();
  inst.base = base_tasks[rng.uniform_int(base_tasks.size())];
  inst.depth = 0;
  inst.mode = sidp::IterationMode::Base;
  inst.created_at = iteration;
  return SampledInstance{std::move(inst), std::nullopt, iteration};
}

TaskInstance expand(const TaskInstance& parent, sidp::History rollout_history,
                    IdAllocator& ids, std::uint64_t iteration) {
  TaskInstance next;
  next.id = ids.next();
  next.base = parent.base;
  next.depth = parent.depth + 1;
  next.history = std::move(rollout_history);
  next.lineage = parent.id;
  next.created_at = iteration;
  return next;
}

std::vector<TaskInstance> precompute_children(const TaskInstance& expanded, IdAllocator& ids,
                                              std::uint64_t iteration) {
  std::vector<TaskInstance> children;
  const auto& turns = expanded.history.turns;
  children.reserve(turns.size());
  for (std::size_t cut = 0; cut < turns.size(); ++cut) {
    TaskInstance child;
    child.id = ids.next();
    child.base = expanded.base;
    child.lineage = expanded.id;
    child.created_at = iteration;
    child.history.turns.assign(turns.begin(), turns.begin() + static_cast<std::ptrdiff_t>(cut) + 1);
    // Earlier turns keep only their last iterate; the prefix's final turn
    // keeps its full chain.
    for (std::size_t t = 0; t < cut; ++t) {
      auto last = child.history.turns[t].back();
      child.history.turns[t].assign(1, std::move(last));
    }
    child.depth = child.history.final_iterate().depth + 1;
    children.push_back(std::move(child));
  }
  return children;
}

UpdateResult update_after_rollout(TaskBuffer& buffer, const SampledInstance& sampled,
                                  std::span<const double> group_rewards,
                                  std::span<const TaskInstance> children) {
  UpdateResult out;
  out.score = learnability_score(group_rewards);
  if (sampled.entry_id) {
    out.rescored = buffer.rescore(*sampled.entry_id, out.score);
  } else {
    // A fresh Base instance enters with its empirical score.
    TaskInstance copy = sampled.instance;
    copy.mode.reset();
    if (buffer.insert(std::move(copy), out.score, /*inherited=*/false)) out.inserted += 1;
  }
  for (const auto& child : children) {
    if (buffer.insert(child, out.score, /*inherited=*/true)) out.inserted += 1;
  }
  return out;
}

}  // namespace exitrl::curriculum
