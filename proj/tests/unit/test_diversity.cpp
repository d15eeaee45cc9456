#include <doctest.h>

#include <cmath>

#include "exitrl/diversity.hpp"
#include "exitrl/error.hpp"
#include "exitrl/rng.hpp"

using namespace exitrl;
using namespace exitrl::diversity;

TEST_CASE("embed: bitstring responses embed as their bit vector") {
  std::vector<std::uint32_t> bits{0, 1, 1, 0};
  auto e = embed(bits, sidp::EnvKind::BitstringRepair, 2);
  CHECK(e == std::vector<double>{0, 1, 1, 0});
}

TEST_CASE("embed: key-sequence tokens embed as one-hots") {
  std::vector<std::uint32_t> tok{2};
  auto e = embed(tok, sidp::EnvKind::MultiTurnKeySequence, 4);
  CHECK(e == std::vector<double>{0, 0, 1, 0});

  // Multi-token responses average their one-hots.
  std::vector<std::uint32_t> two{1, 3};
  auto m = embed(two, sidp::EnvKind::MultiTurnKeySequence, 4);
  CHECK(m == std::vector<double>{0, 0.5, 0, 0.5});
}

TEST_CASE("embed: determinism and domain checks") {
  std::vector<std::uint32_t> a{1, 0, 1};
  CHECK(embed(a, sidp::EnvKind::BitstringRepair, 2) ==
        embed(a, sidp::EnvKind::BitstringRepair, 2));
  std::vector<std::uint32_t> bad{2};
  CHECK_THROWS_AS(embed(bad, sidp::EnvKind::BitstringRepair, 2), DomainError);
}

TEST_CASE("diversity_scores: hand-evaluated 1-D group") {
  std::vector<std::vector<double>> e{{0.0}, {1.0}, {2.0}};
  auto d = diversity_scores(e);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == doctest::Approx(1.0));
  CHECK(d[1] == doctest::Approx(0.0));
  CHECK(d[2] == doctest::Approx(1.0));
}

TEST_CASE("diversity_scores: degenerate groups return all ones") {
  std::vector<std::vector<double>> identical{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
  for (double v : diversity_scores(identical)) CHECK(v == 1.0);

  // Two points are always equidistant from their centroid.
  std::vector<std::vector<double>> pair{{0.0}, {3.0}};
  for (double v : diversity_scores(pair)) CHECK(v == 1.0);
}

TEST_CASE("diversity_scores: range normalization and ordering invariants") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.uniform_int(6);
    const std::size_t dim = 1 + rng.uniform_int(4);
    std::vector<std::vector<double>> e(n, std::vector<double>(dim));
    for (auto& row : e)
      for (auto& v : row) v = 2.0 * rng.uniform() - 1.0;
    auto d = diversity_scores(e);
    double lo = d[0], hi = d[0];
    for (double v : d) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo == 0.0) continue;  // degenerate draw
    CHECK(std::abs((hi - lo) - 1.0) < 1e-9);

    // Translation invariance.
    std::vector<double> shift(dim);
    for (auto& s : shift) s = 2.0 * rng.uniform() - 1.0;
    auto shifted = e;
    for (auto& row : shifted)
      for (std::size_t j = 0; j < dim; ++j) row[j] += shift[j];
    auto d2 = diversity_scores(shifted);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(d[i] - d2[i]) < 1e-9);
  }
}

TEST_CASE("diversity_scores: farthest point gets the largest score") {
  std::vector<std::vector<double>> e{{0.0, 0.0}, {0.1, 0.0}, {5.0, 5.0}, {0.0, 0.2}};
  auto d = diversity_scores(e);
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i] > d[argmax]) argmax = i;
  CHECK(argmax == 2);
}

TEST_CASE("scale_advantages: elementwise product preserving signs and zeros") {
  grpo::AdvantageVector adv;
  adv.values = {1.0, -1.0};
  auto scaled = scale_advantages(adv, std::vector<double>{2.0, 0.5});
  CHECK(scaled.values[0] == doctest::Approx(2.0));
  CHECK(scaled.values[1] == doctest::Approx(-0.5));

  grpo::AdvantageVector same;
  same.values = {0.3, -0.7, 0.0};
  auto identity = scale_advantages(same, std::vector<double>{1.0, 1.0, 1.0});
  CHECK(identity.values == same.values);

  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    grpo::AdvantageVector a;
    a.values = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
    std::vector<double> d{rng.uniform() * 2.0, rng.uniform() * 2.0};
    auto s = scale_advantages(a, d);
    for (std::size_t j = 0; j < 2; ++j) {
      if (a.values[j] > 0.0) CHECK(s.values[j] >= 0.0);
      if (a.values[j] < 0.0) CHECK(s.values[j] <= 0.0);
      if (a.values[j] == 0.0) CHECK(s.values[j] == 0.0);
    }
  }
}

TEST_CASE("scale_advantages: degenerate groups pass through untouched") {
  grpo::AdvantageVector adv;
  adv.values = {0.0, 0.0};
  adv.degenerate = true;
  auto out = scale_advantages(adv, std::vector<double>{3.0, 4.0});
  CHECK(out.degenerate);
  for (double v : out.values) CHECK(v == 0.0);
}

TEST_CASE("scale_advantages: length mismatch is structural") {
  grpo::AdvantageVector adv;
  adv.values = {1.0};
  CHECK_THROWS_AS(scale_advantages(adv, std::vector<double>{1.0, 2.0}), StructuralError);
}
