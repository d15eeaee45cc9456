#include "exitrl/diversity.hpp"

#include <algorithm>
#include <cmath>

#include "exitrl/error.hpp"

namespace exitrl::diversity {

std::vector<double> embed(std::span<const std::uint32_t> tokens, sidp::EnvKind env_kind,
                          std::uint32_t alphabet) {
  for (auto tok : tokens)
    if (tok >= alphabet) throw DomainError("embed: token id outside the alphabet");

  if (env_kind == sidp::EnvKind::BitstringRepair) {
    std::vector<double> out(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) out[i] = static_cast<double>(tokens[i]);
    return out;
  }
  std::vector<double> out(alphabet, 0.0);
  if (tokens.empty()) return out;
  const double w = 1.0 / static_cast<double>(tokens.size());
  for (auto tok : tokens) out[tok] += w;
  return out;
}

std::vector<double> diversity_scores(const std::vector<std::vector<double>>& embeddings) {
  const std::size_t n = embeddings.size();
  if (n < 2) throw StructuralError("diversity_scores: need at least two embeddings");
  const std::size_t dim = embeddings[0].size();
  for (const auto& e : embeddings)
    if (e.size() != dim) throw StructuralError("diversity_scores: mixed embedding dimensions");

  std::vector<double> centroid(dim, 0.0);
  for (const auto& e : embeddings)
    for (std::size_t j = 0; j < dim; ++j) centroid[j] += e[j];
  for (double& c : centroid) c /= static_cast<double>(n);

  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = embeddings[i][j] - centroid[j];
      acc += d * d;
    }
    dist[i] = std::sqrt(acc);
  }

  double lo = dist[0], hi = dist[0];
  for (double d : dist) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double range = hi - lo;
  if (range < 1e-12) return std::vector<double>(n, 1.0);

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = dist[i] / range;
  return scores;
}

grpo::AdvantageVector scale_advantages(grpo::AdvantageVector advantages,
                                       std::span<const double> scores) {
  if (advantages.values.size() != scores.size())
    throw StructuralError("scale_advantages: length mismatch");
  if (advantages.degenerate) return advantages;
  for (std::size_t i = 0; i < scores.size(); ++i) advantages.values[i] *= scores[i];
  return advantages;
}

}  // namespace exitrl::diversity
