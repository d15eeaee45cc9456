#pragma once

#include <filesystem>
#include <vector>

#include "exitrl/checkpoint.hpp"
#include "exitrl/config.hpp"
#include "exitrl/metrics.hpp"

namespace exitrl::harness {

struct TrainResult {
  std::filesystem::path output_dir;
  std::filesystem::path metrics_path;
  std::filesystem::path rollouts_path;
  std::filesystem::path checkpoint_path;
  std::vector<metrics::MetricRecord> records;  // rows written by this process
  TrainState final_state;
};

// Runs the full training loop: sample an instance per prompt, roll out a
// group under the sampling snapshot, grade and shape rewards, mask invalid
// responses, normalize advantages (diversity-scaled when enabled), take the
// surrogate ascent step(s), refresh the reference on schedule, then update
// the task buffer. Fully determined by (config, master seed).
TrainResult train(const config::RunConfig& config);

// Continues a checkpointed run up to config.harness.iterations. The env,
// grpo, and exit blocks and the master seed must match the checkpoint;
// remaining iterations reproduce the uninterrupted run exactly.
TrainResult resume_training(const config::RunConfig& config,
                            const std::filesystem::path& checkpoint_path);

}  // namespace exitrl::harness
