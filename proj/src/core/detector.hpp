#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/knn_stat.hpp"

namespace stam {

/// Where the spatial-context comparison pool comes from.
enum class SpatialSource {
  clip,      // surrounding patches of the same test clip
  training,  // training histograms of the surrounding locations
};

enum class CombineMode { any, all };  // how temporal/spatial tests fuse

struct DetectorConfig {
  int k = 20;
  double t_low_temporal = -300.0;
  double t_high_temporal = -150.0;
  double t_low_spatial = -300.0;
  double t_high_spatial = -150.0;
  int spatial_radius = 2;          // Chebyshev radius, in patches
  double activity_min = 0.1;       // activity rate below this marks a location non-active
  double nonactive_offset = 20.0;  // subtracted from both thresholds at non-active locations
  CombineMode combine = CombineMode::any;
  double motion_floor = 0.05;      // min off-origin mass fraction to score at all
  SpatialSource spatial_source = SpatialSource::clip;
  TailMode tail = TailMode::one_sided;
  double sigma2_min = 1e-6;
  double p_min = 1e-12;

  ScoreParams score_params() const { return {k, sigma2_min, p_min, tail}; }
};

/// Per-location training histograms plus activity statistics.
struct TemporalModel {
  PatchGrid grid;
  int frames_per_clip = 0;
  DescriptorParams descriptor;
  std::vector<std::vector<ShapeHistogram>> histograms;  // per location
  std::vector<double> activity_rate;                    // per location, in [0, 1]

  int location_count() const { return grid.patch_count(); }
  bool insufficient(int m, int k) const {
    return histograms[static_cast<std::size_t>(m)].size() < static_cast<std::size_t>(k);
  }
};

/// Incremental trainer: feed advected clips one at a time so a long history
/// never needs all trajectory sets in memory at once.
class ModelBuilder {
public:
  ModelBuilder(const PatchGrid& grid, int frames_per_clip, const DescriptorParams& params);
  void add_clip(const TrajectorySet& clip, int threads = 0);
  /// Finalize activity rates and hand the model over. Fails on zero clips.
  TemporalModel finish();

private:
  TemporalModel model_;
  std::vector<std::int64_t> active_clips_;
  int clips_ = 0;
};

/// Build the temporal model from the advected training clips: one histogram
/// per (clip, location), plus per-location activity rates (fraction of clips
/// with any off-origin mass at that location).
TemporalModel train(const std::vector<TrajectorySet>& training_clips, const PatchGrid& grid,
                    int frames_per_clip, const DescriptorParams& params, int threads = 0);

/// Binary model file, little-endian ("STAM", version, geometry, histograms,
/// activity rates). Unknown versions are rejected on load.
void save_model(const TemporalModel& model, const std::filesystem::path& path);
TemporalModel load_model(const std::filesystem::path& path);

/// Score one query against the location's training history. Queries whose
/// off-origin mass fraction is below the motion floor score 0 (normal).
AnomalyScore score_temporal(const ShapeHistogram& query, const TemporalModel& model, int m,
                            const DetectorConfig& cfg);

/// Score location m of a test clip against its surrounding patches. The pool
/// keeps only neighbors above the motion floor; pools smaller than 2 score 0.
AnomalyScore score_spatial(const std::vector<ShapeHistogram>& clip_histograms, int m,
                           const PatchGrid& grid, const TemporalModel& model,
                           const DetectorConfig& cfg);

enum class CellLabel : std::uint8_t { normal = 0, seed = 1, grown = 2 };

/// Per-location scores and labels for one clip.
struct DetectionGrid {
  int clip_index = 0;
  int cols = 0;
  int rows = 0;
  std::vector<double> temporal;  // L per location; 0 = normal
  std::vector<double> spatial;
  std::vector<CellLabel> labels;
  int degenerate_fits = 0;         // scored cells whose variance hit the floor
  int insufficient_locations = 0;  // cells skipped: history shorter than K

  bool any_detection() const {
    for (CellLabel l : labels)
      if (l != CellLabel::normal) return true;
    return false;
  }
  /// Combined per-location score matching the fusion mode: the value the
  /// threshold sweep re-decides against.
  double combined(int m, CombineMode mode) const {
    const std::size_t i = static_cast<std::size_t>(m);
    return mode == CombineMode::any ? std::min(temporal[i], spatial[i])
                                    : std::max(temporal[i], spatial[i]);
  }
};

/// Score every location of a test clip in both contexts, then label:
/// seeds are locations passing the combined test under the low (certain)
/// thresholds, and detections grow from seeds across 8-connected neighbors
/// passing the test under the high thresholds. Non-active locations get both
/// thresholds lowered by nonactive_offset.
DetectionGrid detect_clip(const TrajectorySet& test_clip, const TemporalModel& model,
                          const DetectorConfig& cfg, int clip_index = 0, int threads = 0);

/// detect_clip, split so callers that already computed the clip histograms
/// (e.g. a K sweep) can reuse them.
DetectionGrid detect_from_histograms(const std::vector<ShapeHistogram>& clip_histograms,
                                     const TemporalModel& model, const DetectorConfig& cfg,
                                     int clip_index = 0, int threads = 0);

}  // namespace stam
