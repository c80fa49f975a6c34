#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace stam {

const DetectionSeries::ClipRecord* DetectionSeries::clip_for_frame(int frame) const {
  if (frame < 0 || frames_per_clip < 1 || clips.empty()) return nullptr;
  const std::size_t index = static_cast<std::size_t>(frame) / frames_per_clip;
  if (index >= clips.size()) return nullptr;
  return &clips[index];
}

bool DetectionSeries::frame_detected(int frame) const {
  const ClipRecord* clip = clip_for_frame(frame);
  if (!clip) return false;
  return std::any_of(clip->detected.begin(), clip->detected.end(),
                     [](std::uint8_t d) { return d != 0; });
}

namespace {

/// Fraction of the mask's abnormal pixels covered by the flagged locations.
double mask_coverage(const DetectionSeries& det, const std::vector<std::uint8_t>& flags,
                     const Frame& mask) {
  std::int64_t gt_pixels = 0;
  std::int64_t covered = 0;
  for (int y = 0; y < mask.height; ++y) {
    const int row = y / det.patch_h;
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) == 0) continue;
      ++gt_pixels;
      const int col = x / det.patch_w;
      if (row >= det.rows || col >= det.cols) continue;  // outside the grid
      if (flags[static_cast<std::size_t>(row) * det.cols + col]) ++covered;
    }
  }
  if (gt_pixels == 0) return 0.0;
  return static_cast<double>(covered) / static_cast<double>(gt_pixels);
}

}  // namespace

LevelCounts level_counts(const DetectionSeries& det, const GroundTruth& gt, EvalLevel level,
                         double overlap_min, std::optional<double> threshold) {
  LevelCounts counts;
  std::vector<std::uint8_t> flags;
  for (int f = 0; f < gt.frame_count(); ++f) {
    const bool abnormal = gt.abnormal[static_cast<std::size_t>(f)] != 0;
    abnormal ? ++counts.abnormal_frames : ++counts.normal_frames;

    const DetectionSeries::ClipRecord* clip = det.clip_for_frame(f);
    if (!clip) continue;  // frames beyond clip coverage are undetected
    flags.resize(clip->score.size());
    bool any = false;
    for (std::size_t m = 0; m < flags.size(); ++m) {
      flags[m] = threshold ? (clip->score[m] < *threshold ? 1 : 0) : clip->detected[m];
      any = any || flags[m];
    }
    if (!any) continue;
    if (!abnormal) {
      // Any detection on a normal frame is a false detection at both levels.
      ++counts.false_detections;
      continue;
    }
    if (level == EvalLevel::frame) {
      ++counts.true_detections;
      continue;
    }
    if (!gt.has_mask(f))
      fail(Err::missing_mask,
           "pixel-level evaluation: abnormal frame " + std::to_string(f) + " has no mask");
    if (mask_coverage(det, flags, gt.masks[static_cast<std::size_t>(f)]) >= overlap_min)
      ++counts.true_detections;
  }
  return counts;
}

Rates rates_from_counts(const LevelCounts& counts) {
  if (counts.abnormal_frames == 0)
    fail(Err::no_abnormal_frames, "TPR undefined: no abnormal frames");
  if (counts.normal_frames == 0) fail(Err::no_normal_frames, "FPR undefined: no normal frames");
  return {static_cast<double>(counts.true_detections) / counts.abnormal_frames,
          static_cast<double>(counts.false_detections) / counts.normal_frames};
}

Rates frame_level(const DetectionSeries& detections, const GroundTruth& gt) {
  return rates_from_counts(
      level_counts(detections, gt, EvalLevel::frame, 0.0, std::nullopt));
}

Rates pixel_level(const DetectionSeries& detections, const GroundTruth& gt,
                  double overlap_min) {
  return rates_from_counts(
      level_counts(detections, gt, EvalLevel::pixel, overlap_min, std::nullopt));
}

namespace {

struct Interval {
  int start = 0;
  int end = 0;  // inclusive
};

std::vector<Interval> merge_detected_frames(const DetectionSeries& det, int frame_count,
                                            int merge_gap) {
  std::vector<Interval> intervals;
  int run_start = -1;
  int run_end = -1;
  for (int f = 0; f < frame_count; ++f) {
    if (!det.frame_detected(f)) continue;
    if (run_start < 0) {
      run_start = run_end = f;
    } else if (f - run_end <= merge_gap) {
      run_end = f;
    } else {
      intervals.push_back({run_start, run_end});
      run_start = run_end = f;
    }
  }
  if (run_start >= 0) intervals.push_back({run_start, run_end});
  return intervals;
}

/// Spatial overlap between a detected interval and a ground-truth event:
/// some common frame where a flagged location touches the frame's mask.
/// Frames without masks fall back to temporal-only overlap.
bool overlaps_event(const DetectionSeries& det, const GroundTruth& gt,
                    const Interval& interval, const GroundTruth::Event& event) {
  const int lo = std::max(interval.start, event.start);
  const int hi = std::min(interval.end, event.end);
  if (lo > hi) return false;
  bool any_mask = false;
  for (int f = lo; f <= hi; ++f) {
    if (!gt.has_mask(f)) continue;
    any_mask = true;
    const DetectionSeries::ClipRecord* clip = det.clip_for_frame(f);
    if (!clip) continue;
    const Frame& mask = gt.masks[static_cast<std::size_t>(f)];
    if (mask_coverage(det, clip->detected, mask) > 0.0) return true;
  }
  return !any_mask;  // temporal overlap only, no masks to check against
}

}  // namespace

EventReport event_level(const DetectionSeries& detections, const GroundTruth& gt,
                        int merge_gap) {
  const std::vector<Interval> detected =
      merge_detected_frames(detections, gt.frame_count(), merge_gap);

  EventReport report;
  std::vector<std::uint8_t> interval_used(detected.size(), 0);
  for (std::size_t e = 0; e < gt.events.size(); ++e) {
    EventReport::PerEvent per;
    per.event_id = static_cast<int>(e);
    for (std::size_t i = 0; i < detected.size(); ++i) {
      if (!overlaps_event(detections, gt, detected[i], gt.events[e])) continue;
      interval_used[i] = 1;
      per.hit = true;
    }
    if (per.hit) {
      for (int f = gt.events[e].start; f <= gt.events[e].end && f < gt.frame_count(); ++f)
        if (detections.frame_detected(f)) {
          per.first_detected_frame = f;
          break;
        }
      ++report.hits;
    } else {
      ++report.misses;
    }
    report.events.push_back(per);
  }
  for (std::size_t i = 0; i < detected.size(); ++i)
    if (!interval_used[i]) {
      ++report.false_alarms;
      report.false_alarm_starts.push_back(detected[i].start);
    }
  return report;
}

bool has_score_variation(const DetectionSeries& detections, int frame_count) {
  bool any = false;
  double first = 0.0;
  for (int f = 0; f < frame_count; ++f) {
    const DetectionSeries::ClipRecord* clip = detections.clip_for_frame(f);
    if (!clip || clip->score.empty()) continue;
    const double s = *std::min_element(clip->score.begin(), clip->score.end());
    if (!any) {
      first = s;
      any = true;
    } else if (s != first) {
      return true;
    }
  }
  return false;
}

RocCurve finalize_roc(std::vector<RocPoint> points) {
  std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
    if (a.fpr != b.fpr) return a.fpr < b.fpr;
    return a.tpr < b.tpr;
  });

  RocCurve curve;
  curve.points = std::move(points);

  std::vector<std::pair<double, double>> pts;
  pts.reserve(curve.points.size() + 2);
  pts.emplace_back(0.0, 0.0);
  for (const RocPoint& p : curve.points) pts.emplace_back(p.fpr, p.tpr);
  pts.emplace_back(1.0, 1.0);

  double auc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    auc += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) * 0.5;
  curve.auc = std::clamp(auc, 0.0, 1.0);

  // EER: crossing of FPR and the miss rate (1 - TPR) along the curve.
  double eer = 0.5;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double f0 = pts[i - 1].first - (1.0 - pts[i - 1].second);
    const double f1 = pts[i].first - (1.0 - pts[i].second);
    if (f0 > 0.0 || f1 < 0.0) continue;
    const double denom = f1 - f0;
    const double t = denom == 0.0 ? 0.0 : -f0 / denom;
    eer = pts[i - 1].first + t * (pts[i].first - pts[i - 1].first);
    break;
  }
  curve.eer = std::clamp(eer, 0.0, 1.0);
  return curve;
}

RocCurve roc(const DetectionSeries& detections, const GroundTruth& gt,
             const std::vector<double>& thresholds, EvalLevel level, double overlap_min) {
  if (thresholds.size() < 2) fail(Err::degenerate_scores, "roc: need at least 2 thresholds");
  rates_from_counts(level_counts(detections, gt, EvalLevel::frame, 0.0, std::nullopt));
  if (!has_score_variation(detections, gt.frame_count()))
    fail(Err::degenerate_scores, "roc: all frame scores are equal");

  std::vector<RocPoint> points;
  points.reserve(thresholds.size());
  for (double t : thresholds) {
    const Rates r = rates_from_counts(level_counts(detections, gt, level, overlap_min, t));
    points.push_back({t, r.fpr, r.tpr});
  }
  return finalize_roc(std::move(points));
}

}  // namespace stam
