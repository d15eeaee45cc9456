#include "exitrl/reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "exitrl/error.hpp"

namespace exitrl::reports {

using nlohmann::json;

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ties share the mean rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double mean_of(std::span<const double> v, std::size_t begin, std::size_t count) {
  double sum = 0.0;
  for (std::size_t i = begin; i < begin + count; ++i) sum += v[i];
  return sum / static_cast<double>(count);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  constexpr double kEps = 1e-30;
  // Zero-norm convention: two empty points coincide, one empty point is
  // maximally far from a non-empty one.
  if (na < kEps && nb < kEps) return 0.0;
  if (na < kEps || nb < kEps) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

double spearman_vs_index(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) return 0.0;
  const auto ranks = average_ranks(series);
  // Index ranks are simply 1..n.
  const double mean_rank = 0.5 * static_cast<double>(n + 1);
  double cov = 0.0, var_s = 0.0, var_i = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = ranks[i] - mean_rank;
    const double di = static_cast<double>(i + 1) - mean_rank;
    cov += ds * di;
    var_s += ds * ds;
    var_i += di * di;
  }
  if (var_s <= 0.0) return 0.0;  // constant series: no trend
  return cov / std::sqrt(var_s * var_i);
}

SeriesTrend series_trend(std::span<const double> series) {
  if (series.size() < 4)
    throw StructuralError("series_trend: need at least 4 points");
  const std::size_t q = std::max<std::size_t>(1, series.size() / 4);
  SeriesTrend t;
  t.first_quartile_mean = mean_of(series, 0, q);
  t.last_quartile_mean = mean_of(series, series.size() - q, q);
  t.rank_correlation = spearman_vs_index(series);
  return t;
}

CurriculumReport curriculum_report(std::span<const metrics::MetricRecord> records) {
  if (records.size() < 4)
    throw StructuralError("curriculum_report: need at least 4 metric records");
  const std::size_t n = records.size();
  std::vector<double> depth(n), start_turn(n), recency(n), distinct(n);
  for (std::size_t i = 0; i < n; ++i) {
    depth[i] = records[i].sampled_depth;
    start_turn[i] = records[i].sampled_start_turn;
    recency[i] = records[i].sampled_recency;
    distinct[i] = static_cast<double>(records[i].distinct_instances);
  }
  CurriculumReport report;
  report.records = n;
  report.sampled_depth = series_trend(depth);
  report.sampled_start_turn = series_trend(start_turn);
  report.sampled_recency = series_trend(recency);
  report.distinct_instances = series_trend(distinct);
  return report;
}

CurriculumReport curriculum_report(const std::filesystem::path& metrics_csv) {
  const auto records = metrics::read_metrics_csv(metrics_csv);
  return curriculum_report(std::span<const metrics::MetricRecord>(records));
}

DiversityReport diversity_report(const std::filesystem::path& rollouts_jsonl,
                                 std::size_t base_task_count) {
  std::ifstream in(rollouts_jsonl);
  if (!in) throw StructuralError("diversity_report: cannot open " + rollouts_jsonl.string());

  DiversityReport report;
  report.base_task_count = base_task_count;

  std::unordered_map<std::uint64_t, std::size_t> seen;
  std::vector<std::vector<double>> embeddings;  // first-seen order, may hold empties
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw StructuralError("diversity_report: bad JSONL row: " + std::string(e.what()));
    }
    const auto hash = row.at("start_hash").get<std::uint64_t>();
    if (seen.contains(hash)) continue;
    seen.emplace(hash, embeddings.size());
    std::vector<double> emb;
    if (row.contains("embedding")) emb = row.at("embedding").get<std::vector<double>>();
    embeddings.push_back(std::move(emb));
  }

  report.distinct_count = seen.size();
  if (base_task_count > 0)
    report.relative_factor =
        static_cast<double>(report.distinct_count) / static_cast<double>(base_task_count);
  if (report.distinct_count == 0) return report;

  std::vector<const std::vector<double>*> points;
  for (const auto& e : embeddings)
    if (!e.empty()) points.push_back(&e);
  if (points.size() < 2) return report;

  constexpr std::size_t kMaxPoints = 2000;
  std::vector<const std::vector<double>*> sample;
  if (points.size() <= kMaxPoints) {
    sample = points;
  } else {
    const std::size_t stride = (points.size() + kMaxPoints - 1) / kMaxPoints;
    for (std::size_t i = 0; i < points.size(); i += stride) sample.push_back(points[i]);
  }
  report.embeddings_used = sample.size();

  double cos_sum = 0.0, l2_sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = i + 1; j < sample.size(); ++j) {
      cos_sum += cosine_distance(*sample[i], *sample[j]);
      l2_sum += l2_distance(*sample[i], *sample[j]);
      pairs += 1;
    }
  }
  if (pairs > 0) {
    report.mean_pairwise_cosine = cos_sum / static_cast<double>(pairs);
    report.mean_pairwise_l2 = l2_sum / static_cast<double>(pairs);
  }
  return report;
}

std::string to_json_string(const CurriculumReport& r) {
  auto trend = [](const SeriesTrend& t) {
    return json{{"first_quartile_mean", t.first_quartile_mean},
                {"last_quartile_mean", t.last_quartile_mean},
                {"rank_correlation", t.rank_correlation}};
  };
  json root{{"kind", "curriculum"},
            {"records", r.records},
            {"sampled_depth", trend(r.sampled_depth)},
            {"sampled_start_turn", trend(r.sampled_start_turn)},
            {"sampled_recency", trend(r.sampled_recency)},
            {"distinct_instances", trend(r.distinct_instances)}};
  return root.dump(2);
}

std::string to_json_string(const DiversityReport& r) {
  json root{{"kind", "diversity"},
            {"distinct_count", r.distinct_count},
            {"base_task_count", r.base_task_count},
            {"relative_factor", r.relative_factor},
            {"mean_pairwise_cosine", r.mean_pairwise_cosine},
            {"mean_pairwise_l2", r.mean_pairwise_l2},
            {"embeddings_used", r.embeddings_used}};
  return root.dump(2);
}

}  // namespace exitrl::reports
