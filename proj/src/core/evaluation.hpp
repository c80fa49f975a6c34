#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace stam {

/// Per-frame annotations: abnormal flags, optional pixel masks (non-zero =
/// abnormal region), and labeled event intervals (inclusive frame ranges).
struct GroundTruth {
  struct Event {
    int start = 0;
    int end = 0;
    std::string label;
  };

  std::vector<std::uint8_t> abnormal;  // per frame, 0/1
  std::vector<Frame> masks;            // per frame; width == 0 means "no mask"
  std::vector<Event> events;

  int frame_count() const { return static_cast<int>(abnormal.size()); }
  bool has_mask(int frame) const {
    return frame >= 0 && frame < static_cast<int>(masks.size()) && masks[frame].width > 0;
  }
};

/// Detection record of one sequence, at clip granularity. Each clip carries
/// the per-location combined anomaly score (lower = more anomalous) and the
/// binary decision at the run's operating point; a clip's record applies to
/// each of its frames. Frames beyond the last full clip count as undetected.
struct DetectionSeries {
  int cols = 0;
  int rows = 0;
  int patch_w = 0;
  int patch_h = 0;
  int frame_width = 0;
  int frame_height = 0;
  int frames_per_clip = 0;

  struct ClipRecord {
    int first_frame = 0;
    std::vector<double> score;          // per location
    std::vector<std::uint8_t> detected;  // per location, operating point
  };
  std::vector<ClipRecord> clips;

  const ClipRecord* clip_for_frame(int frame) const;
  bool frame_detected(int frame) const;
};

struct Rates {
  double tpr = 0.0;
  double fpr = 0.0;
};

/// Raw frame tallies behind a (TPR, FPR) pair; summable across sequences.
struct LevelCounts {
  std::int64_t true_detections = 0;
  std::int64_t false_detections = 0;
  std::int64_t abnormal_frames = 0;
  std::int64_t normal_frames = 0;

  LevelCounts& operator+=(const LevelCounts& other) {
    true_detections += other.true_detections;
    false_detections += other.false_detections;
    abnormal_frames += other.abnormal_frames;
    normal_frames += other.normal_frames;
    return *this;
  }
};

/// Frame-level rule: a frame counts as detected if any of its locations is
/// flagged. TPR over abnormal frames, FPR over normal frames.
Rates frame_level(const DetectionSeries& detections, const GroundTruth& gt);

/// Pixel-level rule: an abnormal frame is a true detection only if the
/// flagged locations cover at least `overlap_min` of its ground-truth mask.
/// FPR keeps the frame-level meaning on normal frames.
Rates pixel_level(const DetectionSeries& detections, const GroundTruth& gt,
                  double overlap_min = 0.4);

struct EventReport {
  struct PerEvent {
    int event_id = 0;
    bool hit = false;
    int first_detected_frame = -1;
  };
  std::vector<PerEvent> events;
  int hits = 0;
  int misses = 0;
  int false_alarms = 0;
  /// Start frames of the detected intervals counted as false alarms.
  std::vector<int> false_alarm_starts;
};

/// Merge detected frames into events (gaps up to merge_gap frames join) and
/// match them against ground-truth events; a ground-truth event is hit if a
/// detected event overlaps it in time, and in space too when masks exist.
EventReport event_level(const DetectionSeries& detections, const GroundTruth& gt,
                        int merge_gap = 10);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // sorted ascending by FPR
  double auc = 0.0;
  double eer = 0.0;
};

enum class EvalLevel { frame, pixel };

/// Frame tallies under the given rule. Absent threshold: the operating-point
/// decisions; with a threshold t: a location is flagged iff its score < t.
LevelCounts level_counts(const DetectionSeries& detections, const GroundTruth& gt,
                         EvalLevel level, double overlap_min,
                         std::optional<double> threshold);

/// Rates from tallies; zero denominators are reported as errors.
Rates rates_from_counts(const LevelCounts& counts);

/// Sort sweep points, then AUC by trapezoid rule over the points augmented
/// with (0,0) and (1,1), and EER where FPR crosses 1 - TPR (linearly
/// interpolated between bracketing points).
RocCurve finalize_roc(std::vector<RocPoint> points);

/// Sweep the detection threshold over the grid: at threshold t a location is
/// flagged iff its combined score < t.
RocCurve roc(const DetectionSeries& detections, const GroundTruth& gt,
             const std::vector<double>& thresholds, EvalLevel level,
             double overlap_min = 0.4);

/// True when at least two frames carry different minimum grid scores; an
/// all-equal score series cannot produce a curve.
bool has_score_variation(const DetectionSeries& detections, int frame_count);

}  // namespace stam
