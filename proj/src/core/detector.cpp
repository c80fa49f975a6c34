#include "core/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>

#include "core/parallel.hpp"

namespace stam {

ModelBuilder::ModelBuilder(const PatchGrid& grid, int frames_per_clip,
                           const DescriptorParams& params) {
  model_.grid = grid;
  model_.frames_per_clip = frames_per_clip;
  model_.descriptor = params;
  const std::size_t locations = static_cast<std::size_t>(grid.patch_count());
  model_.histograms.resize(locations);
  active_clips_.assign(locations, 0);
}

void ModelBuilder::add_clip(const TrajectorySet& clip, int threads) {
  if (clip.steps != model_.frames_per_clip)
    fail(Err::dimension_mismatch, "train: clip step count differs from frames_per_clip");
  std::vector<ShapeHistogram> hists =
      describe_all_patches(clip, model_.grid, model_.descriptor, threads);
  for (std::size_t m = 0; m < hists.size(); ++m) {
    if (hists[m].off_origin_mass() > 0) ++active_clips_[m];
    model_.histograms[m].push_back(std::move(hists[m]));
  }
  ++clips_;
}

TemporalModel ModelBuilder::finish() {
  if (clips_ == 0) fail(Err::empty_training, "train: no training clips");
  model_.activity_rate.resize(active_clips_.size());
  for (std::size_t m = 0; m < active_clips_.size(); ++m)
    model_.activity_rate[m] = static_cast<double>(active_clips_[m]) / clips_;
  return std::move(model_);
}

TemporalModel train(const std::vector<TrajectorySet>& training_clips, const PatchGrid& grid,
                    int frames_per_clip, const DescriptorParams& params, int threads) {
  if (training_clips.empty()) fail(Err::empty_training, "train: no training clips");
  ModelBuilder builder(grid, frames_per_clip, params);
  for (const TrajectorySet& clip : training_clips) builder.add_clip(clip, threads);
  return builder.finish();
}

namespace {

constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

struct ModelReader {
  std::ifstream in;
  std::filesystem::path path;

  void read(void* dst, std::size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in) fail(Err::truncated, path.string() + ": model file truncated");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  double f64() {
    unsigned char b[8];
    read(b, 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

}  // namespace

void save_model(const TemporalModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::io_failure, "cannot open " + path.string() + " for writing");
  out.write("STAM", 4);
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(model.grid.cols));
  put_u32(out, static_cast<std::uint32_t>(model.grid.rows));
  put_u32(out, static_cast<std::uint32_t>(model.grid.patch_w));
  put_u32(out, static_cast<std::uint32_t>(model.grid.patch_h));
  put_u32(out, static_cast<std::uint32_t>(model.frames_per_clip));
  put_u32(out, static_cast<std::uint32_t>(model.descriptor.bins_magnitude));
  put_u32(out, static_cast<std::uint32_t>(model.descriptor.bins_angle));
  put_f64(out, model.descriptor.r_max);
  for (const auto& location : model.histograms) {
    put_u32(out, static_cast<std::uint32_t>(location.size()));
    for (const ShapeHistogram& h : location)
      for (std::uint32_t c : h.counts) put_u32(out, c);
  }
  for (double rate : model.activity_rate) put_f64(out, rate);
  out.flush();
  if (!out) fail(Err::io_failure, "cannot write " + path.string());
}

TemporalModel load_model(const std::filesystem::path& path) {
  ModelReader r;
  r.path = path;
  r.in.open(path, std::ios::binary);
  if (!r.in) fail(Err::io_failure, "cannot open " + path.string());

  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, "STAM", 4) != 0)
    fail(Err::bad_magic, path.string() + ": not a model file");
  const std::uint32_t version = r.u32();
  if (version != kModelVersion)
    fail(Err::bad_version,
         path.string() + ": unsupported model version " + std::to_string(version));

  TemporalModel model;
  model.grid.cols = static_cast<int>(r.u32());
  model.grid.rows = static_cast<int>(r.u32());
  model.grid.patch_w = static_cast<int>(r.u32());
  model.grid.patch_h = static_cast<int>(r.u32());
  model.frames_per_clip = static_cast<int>(r.u32());
  model.descriptor.bins_magnitude = static_cast<int>(r.u32());
  model.descriptor.bins_angle = static_cast<int>(r.u32());
  model.descriptor.r_max = r.f64();
  if (model.grid.cols < 1 || model.grid.rows < 1 || model.grid.patch_w < 1 ||
      model.grid.patch_h < 1 || model.frames_per_clip < 2 ||
      model.descriptor.bins_magnitude < 1 || model.descriptor.bins_angle < 1 ||
      !(model.descriptor.r_max > 0.0))
    fail(Err::bad_header, path.string() + ": invalid model geometry");

  const std::size_t locations = static_cast<std::size_t>(model.grid.patch_count());
  const std::size_t bins = static_cast<std::size_t>(model.descriptor.bins_magnitude) *
                           model.descriptor.bins_angle;
  model.histograms.resize(locations);
  for (std::size_t m = 0; m < locations; ++m) {
    const std::uint32_t count = r.u32();
    model.histograms[m].resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      ShapeHistogram& h = model.histograms[m][i];
      h.bins_magnitude = model.descriptor.bins_magnitude;
      h.bins_angle = model.descriptor.bins_angle;
      h.r_max = model.descriptor.r_max;
      h.counts.resize(bins);
      for (std::size_t n = 0; n < bins; ++n) h.counts[n] = r.u32();
    }
  }
  model.activity_rate.resize(locations);
  for (std::size_t m = 0; m < locations; ++m) model.activity_rate[m] = r.f64();
  return model;
}

namespace {

bool below_motion_floor(const ShapeHistogram& h, double floor_fraction) {
  const std::uint64_t total = h.total_mass();
  if (total == 0) return true;
  // Single-division fraction: exactly invariant under count scaling.
  const double fraction =
      static_cast<double>(h.off_origin_mass()) / static_cast<double>(total);
  return fraction < floor_fraction;
}

}  // namespace

namespace {

struct ScoredCell {
  double log_probability = 0.0;
  bool variance_floored = false;
};

ScoredCell temporal_cell(const ShapeHistogram& query, const TemporalModel& model, int m,
                         const DetectorConfig& cfg) {
  const auto& pool = model.histograms[static_cast<std::size_t>(m)];
  if (pool.size() < static_cast<std::size_t>(cfg.k))
    fail(Err::insufficient_history, "score_temporal: fewer than K training histograms");
  if (below_motion_floor(query, cfg.motion_floor)) return {};
  const InstanceScore score =
      score_instance(query, std::span<const ShapeHistogram>(pool), cfg.score_params());
  return {score.log_probability, score.gaussian.sigma2 <= cfg.sigma2_min};
}

}  // namespace

AnomalyScore score_temporal(const ShapeHistogram& query, const TemporalModel& model, int m,
                            const DetectorConfig& cfg) {
  return AnomalyScore{temporal_cell(query, model, m, cfg).log_probability};
}

namespace {

std::vector<ShapeHistogram> spatial_pool(const std::vector<ShapeHistogram>& clip_histograms,
                                         int m, const PatchGrid& grid,
                                         const TemporalModel& model,
                                         const DetectorConfig& cfg) {
  std::vector<ShapeHistogram> pool;
  const int col = grid.col_of(m);
  const int row = grid.row_of(m);
  for (int dr = -cfg.spatial_radius; dr <= cfg.spatial_radius; ++dr) {
    for (int dc = -cfg.spatial_radius; dc <= cfg.spatial_radius; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const int r = row + dr;
      const int c = col + dc;
      if (r < 0 || r >= grid.rows || c < 0 || c >= grid.cols) continue;
      const int n = r * grid.cols + c;
      if (cfg.spatial_source == SpatialSource::clip) {
        const ShapeHistogram& h = clip_histograms[static_cast<std::size_t>(n)];
        if (!below_motion_floor(h, cfg.motion_floor)) pool.push_back(h);
      } else {
        for (const ShapeHistogram& h : model.histograms[static_cast<std::size_t>(n)])
          if (!below_motion_floor(h, cfg.motion_floor)) pool.push_back(h);
      }
    }
  }
  return pool;
}

}  // namespace

namespace {

ScoredCell spatial_cell(const std::vector<ShapeHistogram>& clip_histograms, int m,
                        const PatchGrid& grid, const TemporalModel& model,
                        const DetectorConfig& cfg) {
  const std::vector<ShapeHistogram> pool =
      spatial_pool(clip_histograms, m, grid, model, cfg);
  if (pool.size() < 2) return {};  // degenerate pools degrade to normal
  ScoreParams params = cfg.score_params();
  params.k = std::min<int>(cfg.k, static_cast<int>(pool.size()));
  const InstanceScore score =
      score_instance(clip_histograms[static_cast<std::size_t>(m)],
                     std::span<const ShapeHistogram>(pool), params);
  return {score.log_probability, score.gaussian.sigma2 <= cfg.sigma2_min};
}

}  // namespace

AnomalyScore score_spatial(const std::vector<ShapeHistogram>& clip_histograms, int m,
                           const PatchGrid& grid, const TemporalModel& model,
                           const DetectorConfig& cfg) {
  return AnomalyScore{spatial_cell(clip_histograms, m, grid, model, cfg).log_probability};
}

namespace {

struct EffectiveThresholds {
  double low_t, high_t, low_s, high_s;
};

EffectiveThresholds thresholds_at(const TemporalModel& model, int m,
                                  const DetectorConfig& cfg) {
  EffectiveThresholds t{cfg.t_low_temporal, cfg.t_high_temporal, cfg.t_low_spatial,
                        cfg.t_high_spatial};
  if (model.activity_rate[static_cast<std::size_t>(m)] < cfg.activity_min) {
    t.low_t -= cfg.nonactive_offset;
    t.high_t -= cfg.nonactive_offset;
    t.low_s -= cfg.nonactive_offset;
    t.high_s -= cfg.nonactive_offset;
  }
  return t;
}

bool combined_test(double l_temporal, double l_spatial, double threshold_t,
                   double threshold_s, CombineMode combine) {
  const bool temporal_hit = l_temporal < threshold_t;
  const bool spatial_hit = l_spatial < threshold_s;
  return combine == CombineMode::any ? (temporal_hit || spatial_hit)
                                     : (temporal_hit && spatial_hit);
}

}  // namespace

DetectionGrid detect_from_histograms(const std::vector<ShapeHistogram>& clip_histograms,
                                     const TemporalModel& model, const DetectorConfig& cfg,
                                     int clip_index, int threads) {
  const PatchGrid& grid = model.grid;
  if (clip_histograms.size() != static_cast<std::size_t>(grid.patch_count()))
    fail(Err::geometry_mismatch, "detect: histogram count differs from model grid");

  DetectionGrid out;
  out.clip_index = clip_index;
  out.cols = grid.cols;
  out.rows = grid.rows;
  const std::size_t locations = clip_histograms.size();
  out.temporal.assign(locations, 0.0);
  out.spatial.assign(locations, 0.0);
  out.labels.assign(locations, CellLabel::normal);

  std::atomic<int> degenerate{0};
  std::atomic<int> insufficient{0};
  parallel_for(locations, threads, [&](std::size_t m) {
    const int mi = static_cast<int>(m);
    if (model.insufficient(mi, cfg.k)) {
      insufficient.fetch_add(1, std::memory_order_relaxed);
    } else {
      const ScoredCell t = temporal_cell(clip_histograms[m], model, mi, cfg);
      out.temporal[m] = t.log_probability;
      if (t.variance_floored) degenerate.fetch_add(1, std::memory_order_relaxed);
    }
    const ScoredCell s = spatial_cell(clip_histograms, mi, grid, model, cfg);
    out.spatial[m] = s.log_probability;
    if (s.variance_floored) degenerate.fetch_add(1, std::memory_order_relaxed);
  });
  out.degenerate_fits = degenerate.load();
  out.insufficient_locations = insufficient.load();

  // Seeds under the low (high-certainty) thresholds.
  std::deque<int> frontier;
  for (std::size_t m = 0; m < locations; ++m) {
    const EffectiveThresholds t = thresholds_at(model, static_cast<int>(m), cfg);
    if (combined_test(out.temporal[m], out.spatial[m], t.low_t, t.low_s, cfg.combine)) {
      out.labels[m] = CellLabel::seed;
      frontier.push_back(static_cast<int>(m));
    }
  }

  // Grow across 8-connected neighbors passing the high-threshold test.
  while (!frontier.empty()) {
    const int m = frontier.front();
    frontier.pop_front();
    const int col = grid.col_of(m);
    const int row = grid.row_of(m);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int r = row + dr;
        const int c = col + dc;
        if (r < 0 || r >= grid.rows || c < 0 || c >= grid.cols) continue;
        const std::size_t n = static_cast<std::size_t>(r) * grid.cols + c;
        if (out.labels[n] != CellLabel::normal) continue;
        const EffectiveThresholds t = thresholds_at(model, static_cast<int>(n), cfg);
        if (combined_test(out.temporal[n], out.spatial[n], t.high_t, t.high_s, cfg.combine)) {
          out.labels[n] = CellLabel::grown;
          frontier.push_back(static_cast<int>(n));
        }
      }
    }
  }
  return out;
}

DetectionGrid detect_clip(const TrajectorySet& test_clip, const TemporalModel& model,
                          const DetectorConfig& cfg, int clip_index, int threads) {
  if (test_clip.steps != model.frames_per_clip)
    fail(Err::geometry_mismatch, "detect_clip: clip length differs from the model's");
  const PatchGrid& grid = model.grid;
  if (test_clip.width / grid.patch_w != grid.cols ||
      test_clip.height / grid.patch_h != grid.rows)
    fail(Err::geometry_mismatch, "detect_clip: test frame grid differs from the model grid");
  const std::vector<ShapeHistogram> hists =
      describe_all_patches(test_clip, grid, model.descriptor, threads);
  return detect_from_histograms(hists, model, cfg, clip_index, threads);
}

}  // namespace stam
