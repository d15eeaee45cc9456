#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "exitrl/grpo.hpp"
#include "exitrl/sidp.hpp"

namespace exitrl::diversity {

// Embedding-based diversity scoring for rollout groups: each rollout's
// distance to the group centroid, range-normalized within the group, used
// as a multiplicative coefficient on the group-relative advantages.

// Deterministic toy embedding of a response. BitstringRepair: the bit
// vector itself as reals (dimension = token count). MultiTurnKeySequence:
// the mean of per-token one-hots (dimension = alphabet), which reduces to a
// plain one-hot for single-token responses.
std::vector<double> embed(std::span<const std::uint32_t> tokens, sidp::EnvKind env_kind,
                          std::uint32_t alphabet);

// d_i = ||e_i - centroid|| / (max_j ||e_j - centroid|| - min_j ...).
// A degenerate range (below 1e-12) yields all-ones so scaling is a no-op.
std::vector<double> diversity_scores(const std::vector<std::vector<double>>& embeddings);

// Elementwise A'_i = d_i * A_i. Degenerate advantage groups pass through.
grpo::AdvantageVector scale_advantages(grpo::AdvantageVector advantages,
                                       std::span<const double> scores);

}  // namespace exitrl::diversity
