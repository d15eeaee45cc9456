#include <doctest.h>

#include <cmath>
#include <map>
#include <unordered_map>

#include "exitrl/curriculum.hpp"
#include "exitrl/error.hpp"
#include "helpers.hpp"

using namespace exitrl;
using namespace exitrl::curriculum;
using testutil::bitstring_task;
using testutil::keyseq_task;

namespace {

TaskInstance base_instance(IdAllocator& ids, std::uint64_t created = 0,
                           const std::string& task = "t0") {
  TaskInstance inst;
  inst.id = ids.next();
  inst.base = bitstring_task(4, 0.25, 7, task);
  inst.created_at = created;
  return inst;
}

sidp::Iterate iter(std::vector<std::uint32_t> tokens, double quality, std::uint32_t depth) {
  sidp::Iterate it;
  it.tokens = std::move(tokens);
  it.quality = quality;
  it.depth = depth;
  return it;
}

}  // namespace

TEST_CASE("learnability_score: population variance by hand") {
  CHECK(learnability_score(std::vector<double>{1, 1, 0, 0}) == doctest::Approx(0.25));
  CHECK(learnability_score(std::vector<double>{1, 1, 1, 1}) == doctest::Approx(0.0));
  CHECK(learnability_score(std::vector<double>{1, 0, 0, 0}) == doctest::Approx(0.1875));
  CHECK_THROWS_AS(learnability_score(std::vector<double>{1.0}), StructuralError);
  CHECK_THROWS_AS(learnability_score(std::vector<double>{1.0, std::nan("")}), NumericError);
}

TEST_CASE("insert: capacity rules with greater-or-equal admission") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{2, 1, 0.5, 0.0, 1.0});
  auto a = base_instance(ids, 1);
  const auto a_id = a.id;
  auto b = base_instance(ids, 2);
  CHECK(buf.insert(std::move(a), 0.1));
  CHECK(buf.insert(std::move(b), 0.2));
  CHECK(buf.size() == 2);

  // Below the minimum: rejected.
  auto c = base_instance(ids, 3);
  CHECK_FALSE(buf.insert(std::move(c), 0.05));
  CHECK(buf.size() == 2);
  CHECK(buf.min_score() == doctest::Approx(0.1));

  // Equal to the minimum: admitted, evicting the old minimum entry.
  auto d = base_instance(ids, 4);
  const auto d_id = d.id;
  CHECK(buf.insert(std::move(d), 0.1));
  CHECK(buf.size() == 2);
  CHECK(buf.find(a_id) == nullptr);
  CHECK(buf.find(d_id) != nullptr);
}

TEST_CASE("insert: empty buffer accepts anything") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{4, 1, 0.5, 0.0, 1.0});
  CHECK(buf.insert(base_instance(ids), 0.0));
  CHECK(buf.size() == 1);
}

TEST_CASE("eviction removes the oldest minimum on score ties") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{2, 1, 0.5, 0.0, 1.0});
  auto old_min = base_instance(ids, /*created=*/1);
  const auto old_id = old_min.id;
  auto new_min = base_instance(ids, /*created=*/5);
  const auto new_id = new_min.id;
  buf.insert(std::move(old_min), 0.1);
  buf.insert(std::move(new_min), 0.1);
  buf.insert(base_instance(ids, 9), 0.3);
  CHECK(buf.find(old_id) == nullptr);  // the older of the two minima went
  CHECK(buf.find(new_id) != nullptr);
}

TEST_CASE("sample gate: below the activation size everything is a fresh Base task") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{8, 4, 1.0, 0.0, 1.0});
  buf.insert(base_instance(ids), 0.2);  // size 1 < min_size 4
  std::vector<sidp::BaseTask> tasks{bitstring_task(4, 0.0, 1, "a"),
                                    bitstring_task(4, 0.0, 2, "b")};
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto s = sample_training_instance(buf, tasks, rng, ids, 1);
    CHECK_FALSE(s.entry_id.has_value());
    CHECK(s.instance.mode == sidp::IterationMode::Base);
    CHECK(s.instance.is_base());
  }
}

TEST_CASE("sample gate: p = 1 with B_min = 1 replays after the first insert") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{8, 1, 1.0, 0.0, 1.0});
  buf.insert(base_instance(ids), 0.2);
  std::vector<sidp::BaseTask> tasks{bitstring_task(4, 0.0, 1, "a")};
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    auto s = sample_training_instance(buf, tasks, rng, ids, 2);
    CHECK(s.entry_id.has_value());
  }
}

TEST_CASE("softmax sampling: kappa 0 is uniform (chi-square)") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{8, 1, 1.0, 0.0, 0.0});
  std::map<InstanceId, int> counts;
  for (int i = 0; i < 8; ++i) {
    auto inst = base_instance(ids, i);
    counts[inst.id] = 0;
    buf.insert(std::move(inst), 0.25 * i / 7.0);
  }
  Rng rng(5);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[buf.sample(rng).instance.id] += 1;
  const double expected = draws / 8.0;
  double chi2 = 0.0;
  for (auto& [id, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 18.4753);  // chi-square 0.99 quantile, 7 dof
}

TEST_CASE("softmax sampling: hand-computed two-entry weights") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{2, 1, 1.0, 0.0, 4.0});
  auto first = base_instance(ids);
  const auto first_id = first.id;
  buf.insert(std::move(first), 0.25);
  buf.insert(base_instance(ids), 0.0);
  Rng rng(6);
  const int draws = 100000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) hits += buf.sample(rng).instance.id == first_id ? 1 : 0;
  const double e = std::exp(1.0);
  const double target = e / (e + 1.0);  // exp(0.25*4) vs exp(0)
  CHECK(static_cast<double>(hits) / draws == doctest::Approx(target).epsilon(0.015));
}

TEST_CASE("assign_mode: degenerate and empirical divergence rates") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    CHECK(assign_mode(rng, 0.0) == sidp::IterationMode::Improve);
    CHECK(assign_mode(rng, 1.0) == sidp::IterationMode::Diverge);
  }
  int diverge = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    diverge += assign_mode(rng, 0.2) == sidp::IterationMode::Diverge ? 1 : 0;
  CHECK(static_cast<double>(diverge) / draws == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("expand: depth and final-turn chain growth") {
  IdAllocator ids;
  auto parent = base_instance(ids);
  sidp::History rolled;
  rolled.turns.push_back({iter({1, 1, 0, 0}, 0.5, 0)});
  auto child = expand(parent, rolled, ids, 3);
  CHECK(child.depth == 1);
  CHECK(child.history.turn_count() == 1);
  CHECK(child.history.final_iterate().depth == 0);
  CHECK(child.lineage == parent.id);
  CHECK(child.created_at == 3);

  // A second expansion appends on the final turn.
  auto next_hist = child.history;
  next_hist.turns.back().push_back(iter({1, 1, 1, 0}, 0.75, 1));
  auto grandchild = expand(child, next_hist, ids, 4);
  CHECK(grandchild.depth == 2);
  CHECK(grandchild.history.turns.back().size() == child.history.turns.back().size() + 1);
  CHECK(grandchild.lineage == child.id);
}

TEST_CASE("expand: lineage chain of length 3 after two expansions") {
  IdAllocator ids;
  std::unordered_map<InstanceId, TaskInstance> registry;
  auto root = base_instance(ids);
  registry[root.id] = root;

  sidp::History h1;
  h1.turns.push_back({iter({0, 0, 0, 0}, 0.25, 0)});
  auto first = expand(root, h1, ids, 1);
  registry[first.id] = first;

  auto h2 = first.history;
  h2.turns.back().push_back(iter({0, 1, 0, 0}, 0.5, 1));
  auto second = expand(first, h2, ids, 2);
  registry[second.id] = second;

  int hops = 0;
  auto cursor = second;
  while (cursor.lineage) {
    cursor = registry.at(*cursor.lineage);
    hops += 1;
  }
  CHECK(hops == 2);
  CHECK(cursor.is_base());
}

TEST_CASE("precompute_children: one child per turn prefix") {
  IdAllocator ids;
  // Single turn, one iterate: exactly one child at depth 1.
  TaskInstance single = base_instance(ids);
  sidp::History h;
  h.turns.push_back({iter({0, 1, 0, 1}, 0.5, 0)});
  auto expanded = expand(single, h, ids, 1);
  auto kids = precompute_children(expanded, ids, 1);
  REQUIRE(kids.size() == 1);
  CHECK(kids[0].depth == 1);
  CHECK(kids[0].lineage == expanded.id);

  // Three turns, last iterates only: three children.
  TaskInstance multi;
  multi.id = ids.next();
  multi.base = keyseq_task(3, 4, 5);
  sidp::History h3;
  for (int t = 0; t < 3; ++t) h3.turns.push_back({iter({1}, 1.0, 0)});
  auto expanded3 = expand(multi, h3, ids, 2);
  auto kids3 = precompute_children(expanded3, ids, 2);
  REQUIRE(kids3.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(kids3[i].history.turn_count() == i + 1);
    CHECK(kids3[i].depth == 1);
    CHECK(kids3[i].start_turn() == i);
  }
  // The full-history prefix is the expansion instance itself.
  CHECK(kids3[2].history.turn_count() == expanded3.history.turn_count());
}

TEST_CASE("precompute_children keeps only the final turn's chain") {
  IdAllocator ids;
  TaskInstance inst;
  inst.id = ids.next();
  inst.base = keyseq_task(2, 4, 5);
  sidp::History h;
  h.turns.push_back({iter({1}, 1.0, 0)});
  h.turns.push_back({iter({2}, 0.0, 0), iter({3}, 1.0, 1)});
  inst.history = h;
  inst.depth = 2;
  auto kids = precompute_children(inst, ids, 1);
  REQUIRE(kids.size() == 2);
  CHECK(kids[0].history.turns[0].size() == 1);
  CHECK(kids[1].history.turns[0].size() == 1);   // earlier turn reduced to its last iterate
  CHECK(kids[1].history.turns[1].size() == 2);   // final turn keeps the chain
  CHECK(kids[1].depth == 2);                     // 1 + final iterate depth
}

TEST_CASE("update_after_rollout: re-scoring and child inheritance") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{16, 1, 1.0, 0.0, 1.0});

  // Fresh Base instance enters with its empirical score; children inherit it.
  SampledInstance fresh;
  fresh.instance = base_instance(ids);
  fresh.instance.mode = sidp::IterationMode::Base;
  sidp::History h;
  h.turns.push_back({iter({1, 0, 0, 1}, 0.5, 0)});
  auto expanded = expand(fresh.instance, h, ids, 1);
  auto kids = precompute_children(expanded, ids, 1);
  auto result = update_after_rollout(buf, fresh, std::vector<double>{1, 0, 0, 1}, kids);
  CHECK(result.score == doctest::Approx(0.25));
  CHECK(result.inserted == 2);  // the base instance and one child
  for (const auto& e : buf.entries()) {
    CHECK(e.score == doctest::Approx(0.25));
    if (e.instance.id == kids[0].id) CHECK(e.inherited);
    if (e.instance.is_base()) CHECK_FALSE(e.inherited);
  }

  // Replaying a resident instance re-scores it in place.
  const auto resident_id = kids[0].id;
  SampledInstance replay;
  replay.instance = kids[0];
  replay.instance.mode = sidp::IterationMode::Improve;
  replay.entry_id = resident_id;
  auto rescored = update_after_rollout(buf, replay, std::vector<double>{1, 1, 1, 1}, {});
  CHECK(rescored.score == doctest::Approx(0.0));
  CHECK(rescored.rescored);
  CHECK(buf.find(resident_id)->score == doctest::Approx(0.0));
  CHECK_FALSE(buf.find(resident_id)->inherited);
}

TEST_CASE("update_after_rollout: full buffer rejects low-scoring children") {
  IdAllocator ids;
  TaskBuffer buf(BufferConfig{2, 1, 1.0, 0.0, 1.0});
  buf.insert(base_instance(ids), 0.2);
  buf.insert(base_instance(ids), 0.21);

  SampledInstance fresh;
  fresh.instance = base_instance(ids);
  fresh.instance.mode = sidp::IterationMode::Base;
  sidp::History h;
  h.turns.push_back({iter({0, 0, 0, 0}, 0.5, 0)});
  auto expanded = expand(fresh.instance, h, ids, 2);
  auto kids = precompute_children(expanded, ids, 2);
  // Rewards nearly constant: score ~ 0.0025 < current minimum 0.2.
  auto result =
      update_after_rollout(buf, fresh, std::vector<double>{0.5, 0.5, 0.5, 0.6}, kids);
  CHECK(result.inserted == 0);
  CHECK(buf.size() == 2);
  CHECK(buf.min_score() == doctest::Approx(0.2));
}

TEST_CASE("buffer property suite: capacity, admission, eviction, inheritance") {
  IdAllocator ids;
  const std::size_t N = 16;
  TaskBuffer buf(BufferConfig{N, 4, 0.5, 0.2, 1.0});
  std::vector<sidp::BaseTask> tasks{bitstring_task(4, 0.25, 1, "a"),
                                    bitstring_task(4, 0.25, 2, "b")};
  std::unordered_map<InstanceId, TaskInstance> registry;
  Rng rng(12345);

  double min_since_rescore = -1.0;
  bool tracking = false;
  for (int op = 0; op < 100000; ++op) {
    const double pick = rng.uniform();
    if (pick < 0.5) {
      // Insert a fresh instance with a random score.
      const bool at_capacity = buf.size() == N;
      const double before_min = at_capacity ? buf.min_score() : 0.0;
      auto inst = base_instance(ids, op, op % 2 ? "a" : "b");
      registry[inst.id] = inst;
      const double score = rng.uniform() * 0.25;
      const bool inserted = buf.insert(inst, score);
      if (at_capacity) {
        if (!inserted) {
          REQUIRE(score < before_min);
        } else {
          REQUIRE(score >= before_min);
          REQUIRE(buf.min_score() >= before_min);  // eviction removed a minimum
        }
        if (tracking) REQUIRE(buf.min_score() >= min_since_rescore);
        min_since_rescore = std::max(min_since_rescore, buf.min_score());
        tracking = true;
      }
    } else if (pick < 0.8 && buf.size() >= 4) {
      // Sample and expand: children inherit the measured score.
      auto sampled = sample_training_instance(buf, tasks, rng, ids, op);
      registry[sampled.instance.id] = sampled.instance;
      if (sampled.entry_id) {
        std::vector<double> rewards(4);
        for (auto& r : rewards) r = rng.uniform_int(2) ? 1.0 : 0.0;
        sidp::History h = sampled.instance.history;
        if (h.empty()) h.turns.push_back({iter({0, 0, 0, 0}, 0.5, 0)});
        else h.turns.back().push_back(iter({0, 0, 0, 0}, 0.5, h.final_iterate().depth + 1));
        auto expanded = expand(sampled.instance, h, ids, op);
        registry[expanded.id] = expanded;
        auto kids = precompute_children(expanded, ids, op);
        for (const auto& k : kids) registry[k.id] = k;
        const auto result = update_after_rollout(buf, sampled, rewards, kids);
        for (const auto& k : kids) {
          if (const auto* e = buf.find(k.id)) {
            REQUIRE(e->score == result.score);  // exact inheritance
            REQUIRE(e->inherited);
          }
        }
        // Re-scoring may lower the minimum; restart the monotonicity window.
        tracking = false;
        min_since_rescore = -1.0;
      }
    } else if (buf.size() > 0) {
      (void)buf.sample(rng);
    }
    REQUIRE(buf.size() <= N);
  }

  // Every non-Base instance resolves through its lineage to a Base instance.
  int checked = 0;
  for (const auto& e : buf.entries()) {
    if (e.instance.is_base()) continue;
    auto cursor = e.instance;
    int hops = 0;
    while (cursor.lineage && hops < 10000) {
      cursor = registry.at(*cursor.lineage);
      hops += 1;
    }
    CHECK(cursor.is_base());
    checked += 1;
  }
  CHECK(checked > 0);

  // Scores stay within the variance bound for [0,1] rewards.
  for (const auto& e : buf.entries()) {
    CHECK(e.score >= 0.0);
    CHECK(e.score <= 0.25);
  }
}
