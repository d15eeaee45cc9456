#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "exitrl/config.hpp"
#include "exitrl/curriculum.hpp"
#include "exitrl/policy.hpp"

namespace exitrl::harness {

// Everything needed to resume a run bit-exactly: parameters, optimizer
// moments, the task buffer, RNG state, counters, and the distinct-instance
// ledger. Serialized as a single versioned JSON file; doubles round-trip
// exactly through the shortest-representation encoder.
struct TrainState {
  config::RunConfig config;
  std::uint64_t iteration = 0;  // completed iterations
  policy::ParamVector theta;
  policy::ParamVector theta_ref;
  policy::OptimizerState optimizer;
  curriculum::TaskBuffer buffer;
  curriculum::IdAllocator ids;
  std::uint64_t sample_rng_state = 0;
  std::vector<std::uint64_t> distinct_hashes;  // first-seen order
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace exitrl::harness
