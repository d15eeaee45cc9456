#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

namespace exitrl::metrics {

// One row per training iteration. Column order is part of the metric CSV
// contract; reports and external plotting read it back by header name.
struct MetricRecord {
  std::uint64_t iteration = 0;
  double objective = 0.0;
  double mean_reward = 0.0;
  std::uint64_t buffer_size = 0;
  double mean_score = 0.0;
  double min_score = 0.0;
  double max_score = 0.0;
  double sampled_depth = 0.0;
  double sampled_start_turn = 0.0;
  double sampled_recency = 0.0;
  std::uint32_t mode_base = 0;
  std::uint32_t mode_improve = 0;
  std::uint32_t mode_diverge = 0;
  std::uint64_t distinct_instances = 0;
  double clip_fraction = 0.0;
  double kl_mean = 0.0;
};

inline constexpr const char* kCsvHeader =
    "iteration,objective,mean_reward,buffer_size,mean_score,min_score,max_score,"
    "sampled_depth,sampled_start_turn,sampled_recency,mode_base,mode_improve,"
    "mode_diverge,distinct_instances,clip_fraction,kl_mean";

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const MetricRecord& record);

std::vector<MetricRecord> read_metrics_csv(const std::filesystem::path& path);

}  // namespace exitrl::metrics
