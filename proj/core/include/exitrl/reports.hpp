#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exitrl/metrics.hpp"

namespace exitrl::reports {

// Trend summary of one telemetry series: quartile means at both ends and a
// Spearman rank correlation against the iteration index (0 for constant
// series, 1 for strictly increasing).
struct SeriesTrend {
  double first_quartile_mean = 0.0;
  double last_quartile_mean = 0.0;
  double rank_correlation = 0.0;
};

double spearman_vs_index(std::span<const double> series);
SeriesTrend series_trend(std::span<const double> series);

struct CurriculumReport {
  std::size_t records = 0;
  SeriesTrend sampled_depth;
  SeriesTrend sampled_start_turn;
  SeriesTrend sampled_recency;
  SeriesTrend distinct_instances;
};

// Requires at least 4 metric records.
CurriculumReport curriculum_report(std::span<const metrics::MetricRecord> records);
CurriculumReport curriculum_report(const std::filesystem::path& metrics_csv);

struct DiversityReport {
  std::size_t distinct_count = 0;
  std::size_t base_task_count = 0;
  double relative_factor = 0.0;  // distinct / base set size
  double mean_pairwise_cosine = 0.0;
  double mean_pairwise_l2 = 0.0;
  std::size_t embeddings_used = 0;  // after the <=2000 subsample
};

// Distinct starting iterates (by content hash) and mean pairwise distances
// over their embeddings, read from the rollout log. Pairwise passes are
// subsampled to at most 2000 points, stride-deterministic in first-seen
// order. An empty log yields an empty report.
DiversityReport diversity_report(const std::filesystem::path& rollouts_jsonl,
                                 std::size_t base_task_count);

std::string to_json_string(const CurriculumReport& report);
std::string to_json_string(const DiversityReport& report);

}  // namespace exitrl::reports
