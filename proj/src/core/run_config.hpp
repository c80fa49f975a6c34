#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/detector.hpp"
#include "core/flow_io.hpp"

namespace stam {

enum class FlowSource { precomputed, estimate };

/// Every tunable of a pipeline run, read from one [section] key=value file.
/// Unknown keys or sections and out-of-bounds values are rejected.
struct RunConfig {
  // [descriptor]
  int patch_w = 3;
  int patch_h = 3;
  int frames_per_clip = 10;
  DescriptorParams descriptor;  // bins + r_max

  // [detector]
  DetectorConfig detector;

  // [flow]
  FlowSource flow_source = FlowSource::precomputed;
  FlowEstimatorConfig estimator;

  // [paths]
  std::string frames_dir;
  std::string flows_dir;
  std::string model_file;
  std::string output_dir;
  std::string gt_index;
  std::string gt_masks_dir;
  std::string gt_events;

  // [eval]
  double threshold_min = -600.0;
  double threshold_max = 0.0;
  int threshold_count = 61;
  int merge_gap = 10;

  // [sweep]
  std::vector<int> sweep_k = {15, 30, 50, 70};

  std::vector<double> threshold_grid() const;
};

RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text);

/// Bounds checks shared by the parser and programmatic construction.
void validate_run_config(const RunConfig& cfg);

/// Canonical text form: fixed section and key order, round-trip-exact value
/// formatting. parse(dump(cfg)) reproduces cfg exactly.
std::string dump_run_config(const RunConfig& cfg);

}  // namespace stam
