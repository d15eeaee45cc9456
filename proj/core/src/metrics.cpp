#include "exitrl/metrics.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "exitrl/error.hpp"

namespace exitrl::metrics {

namespace {

// Fixed shortest-ish formatting keeps rows byte-stable for identical values.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_csv_header(std::ostream& out) { out << kCsvHeader << "\n"; }

void write_csv_row(std::ostream& out, const MetricRecord& r) {
  out << r.iteration << ',' << fmt(r.objective) << ',' << fmt(r.mean_reward) << ','
      << r.buffer_size << ',' << fmt(r.mean_score) << ',' << fmt(r.min_score) << ','
      << fmt(r.max_score) << ',' << fmt(r.sampled_depth) << ',' << fmt(r.sampled_start_turn)
      << ',' << fmt(r.sampled_recency) << ',' << r.mode_base << ',' << r.mode_improve << ','
      << r.mode_diverge << ',' << r.distinct_instances << ',' << fmt(r.clip_fraction) << ','
      << fmt(r.kl_mean) << "\n";
}

std::vector<MetricRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("metrics: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw StructuralError("metrics: empty file " + path.string());
  if (line != kCsvHeader)
    throw StructuralError("metrics: unexpected CSV header in " + path.string());

  std::vector<MetricRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 16)
      throw StructuralError("metrics: malformed row in " + path.string());
    MetricRecord r;
    r.iteration = std::stoull(cells[0]);
    r.objective = std::stod(cells[1]);
    r.mean_reward = std::stod(cells[2]);
    r.buffer_size = std::stoull(cells[3]);
    r.mean_score = std::stod(cells[4]);
    r.min_score = std::stod(cells[5]);
    r.max_score = std::stod(cells[6]);
    r.sampled_depth = std::stod(cells[7]);
    r.sampled_start_turn = std::stod(cells[8]);
    r.sampled_recency = std::stod(cells[9]);
    r.mode_base = static_cast<std::uint32_t>(std::stoul(cells[10]));
    r.mode_improve = static_cast<std::uint32_t>(std::stoul(cells[11]));
    r.mode_diverge = static_cast<std::uint32_t>(std::stoul(cells[12]));
    r.distinct_instances = std::stoull(cells[13]);
    r.clip_fraction = std::stod(cells[14]);
    r.kl_mean = std::stod(cells[15]);
    records.push_back(r);
  }
  return records;
}

}  // namespace exitrl::metrics
