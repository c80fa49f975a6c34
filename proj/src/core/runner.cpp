#include "core/runner.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "core/detector.hpp"
#include "core/flow_io.hpp"
#include "core/parallel.hpp"
#include "core/trajectory.hpp"

namespace stam {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string frame_name(int index, const char* extension) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return std::string(buf) + extension;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& extension) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == extension)
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Err::io_failure, "cannot create directory " + dir.string() + ": " + ec.message());
}

const char* label_name(CellLabel label) {
  switch (label) {
    case CellLabel::seed: return "seed";
    case CellLabel::grown: return "grown";
    case CellLabel::normal: break;
  }
  return "normal";
}

/// Load, clamp and advect the flows of one clip.
TrajectorySet advect_range(const std::vector<fs::path>& flow_files, const ClipRange& range,
                           const RunConfig& cfg, int threads) {
  std::vector<FlowField> flows;
  flows.reserve(static_cast<std::size_t>(cfg.frames_per_clip) - 1);
  for (int f = range.first; f < range.last; ++f) {
    flows.push_back(read_flo(flow_files[static_cast<std::size_t>(f)]));
    clamp_flow(flows.back(), static_cast<float>(cfg.estimator.clamp));
  }
  Clip clip;
  clip.start_frame = range.first;
  clip.frames_per_clip = cfg.frames_per_clip;
  clip.flows.reserve(flows.size());
  for (const FlowField& f : flows) clip.flows.push_back(&f);
  return advect(clip, threads);
}

Frame rasterize_labels(const std::vector<CellLabel>& labels, const PatchGrid& grid, int width,
                       int height) {
  Frame mask;
  mask.width = width;
  mask.height = height;
  mask.intensity.assign(static_cast<std::size_t>(width) * height, 0);
  for (int m = 0; m < grid.patch_count(); ++m) {
    if (labels[static_cast<std::size_t>(m)] == CellLabel::normal) continue;
    const int x0 = grid.x0_of(m);
    const int y0 = grid.y0_of(m);
    for (int y = y0; y < y0 + grid.patch_h; ++y)
      for (int x = x0; x < x0 + grid.patch_w; ++x)
        mask.intensity[static_cast<std::size_t>(y) * width + x] = 255;
  }
  return mask;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Err::io_failure, "cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      fields.push_back(comma == std::string::npos ? line.substr(pos)
                                                  : line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

bool numeric_field(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

long long csv_int(const std::string& field, const fs::path& path) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail(Err::config_error, path.string() + ": expected integer, got '" + field + "'");
  return out;
}

double csv_double(const std::string& field, const fs::path& path) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail(Err::config_error, path.string() + ": expected number, got '" + field + "'");
  return out;
}

fs::path require_path(const std::string& value, const char* key) {
  if (value.empty())
    fail(Err::config_error, std::string("config key '") + key + "' is required for this command");
  return fs::path(value);
}

/// Fixed-size model header peek, so eval does not need the full histogram
/// payload just to recover the grid geometry.
struct ModelGeometry {
  PatchGrid grid;
  int frames_per_clip = 0;
};

ModelGeometry load_model_geometry(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::io_failure, "cannot open " + path.string());
  unsigned char header[4 + 4 * 7 + 8];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) fail(Err::truncated, path.string() + ": model file truncated");
  if (std::memcmp(header, "STAM", 4) != 0)
    fail(Err::bad_magic, path.string() + ": not a model file");
  auto u32_at = [&](int index) {
    const unsigned char* p = header + 4 + 4 * index;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  };
  if (u32_at(0) != 1)
    fail(Err::bad_version, path.string() + ": unsupported model version");
  ModelGeometry geometry;
  geometry.grid.cols = static_cast<int>(u32_at(1));
  geometry.grid.rows = static_cast<int>(u32_at(2));
  geometry.grid.patch_w = static_cast<int>(u32_at(3));
  geometry.grid.patch_h = static_cast<int>(u32_at(4));
  geometry.frames_per_clip = static_cast<int>(u32_at(5));
  return geometry;
}

}  // namespace

SequenceSet discover_sequences(const fs::path& root, const std::string& extension) {
  if (!fs::exists(root)) fail(Err::io_failure, root.string() + " does not exist");
  if (!fs::is_directory(root)) fail(Err::io_failure, root.string() + " is not a directory");

  SequenceSet set;
  if (!sorted_files(root, extension).empty()) {
    set.sequences.push_back({"", root});
    return set;
  }
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& dir : subdirs)
    if (!sorted_files(dir, extension).empty())
      set.sequences.push_back({dir.filename().string(), dir});
  if (set.sequences.empty())
    fail(Err::io_failure, "no " + extension + " files under " + root.string());
  return set;
}

std::vector<fs::path> list_flow_files(const fs::path& dir) { return sorted_files(dir, ".flo"); }

void run_flow(const RunConfig& cfg, int threads, std::ostream* log) {
  const fs::path frames_root = require_path(cfg.frames_dir, "frames_dir");
  const fs::path flows_root = require_path(cfg.flows_dir, "flows_dir");
  const SequenceSet sequences = discover_sequences(frames_root, ".pgm");

  FlowEstimatorConfig estimator = cfg.estimator;
  estimator.threads = threads;
  for (const auto& seq : sequences.sequences) {
    const std::vector<fs::path> frames = sorted_files(seq.dir, ".pgm");
    if (frames.size() < 2)
      fail(Err::invalid_spec, seq.dir.string() + ": need at least 2 frames");
    const fs::path out_dir = seq.name.empty() ? flows_root : flows_root / seq.name;
    ensure_dir(out_dir);
    Frame prev = read_pgm(frames[0]);
    for (std::size_t i = 1; i < frames.size(); ++i) {
      Frame next = read_pgm(frames[i]);
      const FlowField field = estimate_flow(prev, next, estimator);
      write_flo(field, out_dir / frame_name(static_cast<int>(i) - 1, ".flo"));
      prev = std::move(next);
    }
    if (log)
      *log << (seq.name.empty() ? "sequence" : seq.name) << ": wrote " << frames.size() - 1
           << " flow fields\n";
  }
}

namespace {

struct SequenceFlows {
  std::string name;
  std::vector<fs::path> files;
  int width = 0;
  int height = 0;

  int frame_count() const { return static_cast<int>(files.size()) + 1; }
};

std::vector<SequenceFlows> load_flow_layout(const fs::path& root) {
  std::vector<SequenceFlows> out;
  for (const auto& seq : discover_sequences(root, ".flo").sequences) {
    SequenceFlows flows;
    flows.name = seq.name;
    flows.files = sorted_files(seq.dir, ".flo");
    const FlowField first = read_flo(flows.files.front());
    flows.width = first.width;
    flows.height = first.height;
    out.push_back(std::move(flows));
  }
  const int w = out.front().width;
  const int h = out.front().height;
  for (const auto& seq : out)
    if (seq.width != w || seq.height != h)
      fail(Err::dimension_mismatch, "sequences disagree on frame dimensions");
  return out;
}

}  // namespace

TemporalModel run_train(const RunConfig& cfg, int threads, std::ostream* log) {
  const fs::path flows_root = require_path(cfg.flows_dir, "flows_dir");
  const fs::path model_file = require_path(cfg.model_file, "model_file");
  const std::vector<SequenceFlows> sequences = load_flow_layout(flows_root);

  const PatchGrid grid =
      build_grid(sequences.front().width, sequences.front().height, cfg.patch_w, cfg.patch_h);
  ModelBuilder builder(grid, cfg.frames_per_clip, cfg.descriptor);
  int clip_total = 0;
  for (const SequenceFlows& seq : sequences) {
    for (const ClipRange& range : segment_clips(seq.frame_count(), cfg.frames_per_clip)) {
      builder.add_clip(advect_range(seq.files, range, cfg, threads), threads);
      ++clip_total;
    }
  }
  TemporalModel model = builder.finish();
  if (const fs::path parent = model_file.parent_path(); !parent.empty()) ensure_dir(parent);
  save_model(model, model_file);

  if (log) {
    int insufficient = 0;
    int active = 0;
    for (int m = 0; m < model.location_count(); ++m) {
      if (model.insufficient(m, cfg.detector.k)) ++insufficient;
      if (model.activity_rate[static_cast<std::size_t>(m)] >= cfg.detector.activity_min)
        ++active;
    }
    *log << "trained on " << clip_total << " clips from " << sequences.size()
         << " sequence(s)\n"
         << "locations: " << model.location_count() << " (" << grid.cols << "x" << grid.rows
         << "), histograms per location: " << clip_total << "\n"
         << "active locations: " << active << ", insufficient history (< K=" << cfg.detector.k
         << "): " << insufficient << "\n"
         << "model written to " << model_file.string() << "\n";
  }
  return model;
}

namespace {

void check_model_matches_config(const TemporalModel& model, const RunConfig& cfg) {
  if (model.grid.patch_w != cfg.patch_w || model.grid.patch_h != cfg.patch_h)
    fail(Err::geometry_mismatch, "model patch size differs from config");
  if (model.frames_per_clip != cfg.frames_per_clip)
    fail(Err::geometry_mismatch, "model frames_per_clip differs from config");
  if (model.descriptor.bins_magnitude != cfg.descriptor.bins_magnitude ||
      model.descriptor.bins_angle != cfg.descriptor.bins_angle ||
      model.descriptor.r_max != cfg.descriptor.r_max)
    fail(Err::geometry_mismatch, "model descriptor parameters differ from config");
}

}  // namespace

void run_detect(const RunConfig& cfg, int threads, std::ostream* log) {
  const fs::path flows_root = require_path(cfg.flows_dir, "flows_dir");
  const fs::path model_file = require_path(cfg.model_file, "model_file");
  const fs::path output_root = require_path(cfg.output_dir, "output_dir");

  const TemporalModel model = load_model(model_file);
  check_model_matches_config(model, cfg);

  for (const SequenceFlows& seq : load_flow_layout(flows_root)) {
    if (seq.width / cfg.patch_w != model.grid.cols ||
        seq.height / cfg.patch_h != model.grid.rows)
      fail(Err::geometry_mismatch,
           (seq.name.empty() ? std::string("sequence") : seq.name) +
               ": frame grid differs from the model grid");

    const fs::path out_dir = seq.name.empty() ? output_root : output_root / seq.name;
    ensure_dir(out_dir / "masks");

    std::ofstream scores(out_dir / "scores.csv", std::ios::trunc);
    if (!scores) fail(Err::io_failure, "cannot write " + (out_dir / "scores.csv").string());
    scores << "frame,location,L_temporal,L_spatial,label\n";

    int flagged_frames = 0;
    const std::vector<ClipRange> ranges = segment_clips(seq.frame_count(), cfg.frames_per_clip);
    for (std::size_t c = 0; c < ranges.size(); ++c) {
      const TrajectorySet traj = advect_range(seq.files, ranges[c], cfg, threads);
      const DetectionGrid det =
          detect_clip(traj, model, cfg.detector, static_cast<int>(c), threads);

      const Frame mask = rasterize_labels(det.labels, model.grid, seq.width, seq.height);
      const bool any = det.any_detection();
      std::string block;
      block.reserve(static_cast<std::size_t>(model.grid.patch_count()) * 32);
      for (int f = ranges[c].first; f <= ranges[c].last; ++f) {
        write_pgm(mask, out_dir / "masks" / frame_name(f, ".pgm"));
        if (any) ++flagged_frames;
        const std::string frame_prefix = std::to_string(f) + ",";
        for (int m = 0; m < model.grid.patch_count(); ++m) {
          const std::size_t mi = static_cast<std::size_t>(m);
          block += frame_prefix;
          block += std::to_string(m);
          block += ',';
          block += fmt(det.temporal[mi]);
          block += ',';
          block += fmt(det.spatial[mi]);
          block += ',';
          block += label_name(det.labels[mi]);
          block += '\n';
        }
      }
      scores << block;
    }
    scores.flush();
    if (!scores) fail(Err::io_failure, "failed writing scores CSV");
    if (log)
      *log << (seq.name.empty() ? "sequence" : seq.name) << ": " << flagged_frames << "/"
           << ranges.size() * static_cast<std::size_t>(cfg.frames_per_clip)
           << " frames flagged\n";
  }
}

GroundTruth load_ground_truth(const std::optional<fs::path>& index_file,
                              const std::optional<fs::path>& masks_dir,
                              const std::optional<fs::path>& events_file,
                              int frame_count_hint) {
  GroundTruth gt;
  if (events_file) {
    for (const auto& row : read_csv(*events_file)) {
      if (!numeric_field(row[0])) continue;  // header
      if (row.size() != 3)
        fail(Err::config_error, events_file->string() + ": expected start,end,label rows");
      GroundTruth::Event event;
      event.start = static_cast<int>(csv_int(row[0], *events_file));
      event.end = static_cast<int>(csv_int(row[1], *events_file));
      event.label = row[2];
      gt.events.push_back(std::move(event));
    }
  }
  if (index_file) {
    std::vector<std::pair<int, int>> entries;
    int max_frame = -1;
    for (const auto& row : read_csv(*index_file)) {
      if (!numeric_field(row[0])) continue;  // header
      if (row.size() != 2)
        fail(Err::config_error, index_file->string() + ": expected frame,label rows");
      const int frame = static_cast<int>(csv_int(row[0], *index_file));
      const int label = static_cast<int>(csv_int(row[1], *index_file));
      entries.emplace_back(frame, label);
      max_frame = std::max(max_frame, frame);
    }
    gt.abnormal.assign(static_cast<std::size_t>(std::max(max_frame + 1, frame_count_hint)), 0);
    for (const auto& [frame, label] : entries)
      gt.abnormal[static_cast<std::size_t>(frame)] = label != 0 ? 1 : 0;
  } else if (!gt.events.empty() || frame_count_hint > 0) {
    int frames = frame_count_hint;
    for (const auto& event : gt.events) frames = std::max(frames, event.end + 1);
    gt.abnormal.assign(static_cast<std::size_t>(frames), 0);
    for (const auto& event : gt.events)
      for (int f = event.start; f <= event.end; ++f)
        gt.abnormal[static_cast<std::size_t>(f)] = 1;
  } else {
    fail(Err::config_error, "ground truth needs gt_index or gt_events");
  }

  if (masks_dir) {
    gt.masks.resize(gt.abnormal.size());
    for (std::size_t f = 0; f < gt.abnormal.size(); ++f) {
      const fs::path mask_path = *masks_dir / frame_name(static_cast<int>(f), ".pgm");
      if (fs::exists(mask_path)) gt.masks[f] = read_pgm(mask_path);
    }
  }
  return gt;
}

DetectionSeries load_detection_series(const fs::path& scores_csv, const RunConfig& cfg) {
  const ModelGeometry geometry = load_model_geometry(require_path(cfg.model_file, "model_file"));
  DetectionSeries series;
  series.cols = geometry.grid.cols;
  series.rows = geometry.grid.rows;
  series.patch_w = geometry.grid.patch_w;
  series.patch_h = geometry.grid.patch_h;
  series.frames_per_clip = geometry.frames_per_clip;
  const int locations = geometry.grid.patch_count();

  int max_frame = -1;
  struct Cell {
    double temporal, spatial;
    bool detected;
  };
  std::map<int, std::vector<Cell>> clips;
  for (const auto& row : read_csv(scores_csv)) {
    if (!numeric_field(row[0])) continue;  // header
    if (row.size() != 5)
      fail(Err::config_error,
           scores_csv.string() + ": expected frame,location,L_temporal,L_spatial,label rows");
    const int frame = static_cast<int>(csv_int(row[0], scores_csv));
    const int location = static_cast<int>(csv_int(row[1], scores_csv));
    if (location < 0 || location >= locations)
      fail(Err::geometry_mismatch, scores_csv.string() + ": location index outside model grid");
    max_frame = std::max(max_frame, frame);
    const int clip = frame / series.frames_per_clip;
    auto& cells = clips[clip];
    if (cells.empty()) cells.resize(static_cast<std::size_t>(locations), {0.0, 0.0, false});
    // All frames of a clip repeat the clip's row block; last write wins.
    cells[static_cast<std::size_t>(location)] = {csv_double(row[2], scores_csv),
                                                 csv_double(row[3], scores_csv),
                                                 row[4] != "normal"};
  }
  if (clips.empty()) fail(Err::config_error, scores_csv.string() + ": no detection rows");

  const int clip_count = clips.rbegin()->first + 1;
  series.clips.resize(static_cast<std::size_t>(clip_count));
  for (int c = 0; c < clip_count; ++c) {
    auto& record = series.clips[static_cast<std::size_t>(c)];
    record.first_frame = c * series.frames_per_clip;
    record.score.assign(static_cast<std::size_t>(locations), 0.0);
    record.detected.assign(static_cast<std::size_t>(locations), 0);
    const auto it = clips.find(c);
    if (it == clips.end()) continue;
    for (int m = 0; m < locations; ++m) {
      const Cell& cell = it->second[static_cast<std::size_t>(m)];
      record.score[static_cast<std::size_t>(m)] =
          cfg.detector.combine == CombineMode::any ? std::min(cell.temporal, cell.spatial)
                                                   : std::max(cell.temporal, cell.spatial);
      record.detected[static_cast<std::size_t>(m)] = cell.detected ? 1 : 0;
    }
  }
  return series;
}

namespace {

struct EvalUnit {
  std::string name;
  fs::path scores_csv;
};

std::vector<EvalUnit> discover_eval_units(const fs::path& output_root) {
  std::vector<EvalUnit> units;
  if (fs::exists(output_root / "scores.csv")) {
    units.push_back({"", output_root / "scores.csv"});
    return units;
  }
  std::vector<fs::path> subdirs;
  if (fs::exists(output_root))
    for (const auto& entry : fs::directory_iterator(output_root))
      if (entry.is_directory() && fs::exists(entry.path() / "scores.csv"))
        subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& dir : subdirs) units.push_back({dir.filename().string(), dir / "scores.csv"});
  if (units.empty())
    fail(Err::io_failure, "no scores.csv under " + output_root.string());
  return units;
}

/// Resolve the per-sequence ground-truth paths: single-sequence runs point
/// at files/dirs directly; multi-sequence runs use <base>/<seq>.csv for the
/// CSVs and <base>/<seq>/ for the mask directory.
struct GtPaths {
  std::optional<fs::path> index;
  std::optional<fs::path> masks;
  std::optional<fs::path> events;
};

GtPaths resolve_gt_paths(const RunConfig& cfg, const std::string& seq_name) {
  GtPaths paths;
  if (!cfg.gt_index.empty())
    paths.index = seq_name.empty() ? fs::path(cfg.gt_index)
                                   : fs::path(cfg.gt_index) / (seq_name + ".csv");
  if (!cfg.gt_masks_dir.empty())
    paths.masks = seq_name.empty() ? fs::path(cfg.gt_masks_dir)
                                   : fs::path(cfg.gt_masks_dir) / seq_name;
  if (!cfg.gt_events.empty())
    paths.events = seq_name.empty() ? fs::path(cfg.gt_events)
                                    : fs::path(cfg.gt_events) / (seq_name + ".csv");
  return paths;
}

struct LoadedUnit {
  std::string name;
  DetectionSeries series;
  GroundTruth gt;
};

std::vector<LoadedUnit> load_eval_units(const RunConfig& cfg, const fs::path& output_root) {
  std::vector<LoadedUnit> loaded;
  for (const EvalUnit& unit : discover_eval_units(output_root)) {
    LoadedUnit l;
    l.name = unit.name;
    l.series = load_detection_series(unit.scores_csv, cfg);
    const int covered =
        static_cast<int>(l.series.clips.size()) * l.series.frames_per_clip;
    const GtPaths gt = resolve_gt_paths(cfg, unit.name);
    l.gt = load_ground_truth(gt.index, gt.masks, gt.events, covered);
    loaded.push_back(std::move(l));
  }
  return loaded;
}

}  // namespace

void run_eval(const RunConfig& cfg, int threads, std::ostream* log) {
  const fs::path output_root = require_path(cfg.output_dir, "output_dir");
  const std::vector<LoadedUnit> units = load_eval_units(cfg, output_root);
  const bool with_masks = !cfg.gt_masks_dir.empty();
  const std::vector<double> thresholds = cfg.threshold_grid();

  // Degenerate sweeps cannot tell thresholds apart.
  bool varied = false;
  for (const LoadedUnit& unit : units)
    varied = varied || has_score_variation(unit.series, unit.gt.frame_count());
  if (!varied) fail(Err::degenerate_scores, "eval: all frame scores are equal");

  std::ofstream metrics(output_root / "metrics.csv", std::ios::trunc);
  if (!metrics) fail(Err::io_failure, "cannot write metrics.csv");
  metrics << "threshold,level,TPR,FPR\n";

  const auto sum_counts = [&](EvalLevel level, std::optional<double> threshold) {
    LevelCounts total;
    for (const LoadedUnit& unit : units)
      total += level_counts(unit.series, unit.gt, level, 0.4, threshold);
    return total;
  };

  struct LevelRun {
    EvalLevel level;
    const char* name;
  };
  std::vector<LevelRun> levels{{EvalLevel::frame, "frame"}};
  if (with_masks) levels.push_back({EvalLevel::pixel, "pixel"});

  std::vector<std::string> summary;
  for (const LevelRun& run : levels) {
    // Parallel over thresholds; each slot writes its own point.
    std::vector<RocPoint> points(thresholds.size());
    parallel_for(thresholds.size(), threads, [&](std::size_t i) {
      const Rates r = rates_from_counts(sum_counts(run.level, thresholds[i]));
      points[i] = {thresholds[i], r.fpr, r.tpr};
    });
    for (const RocPoint& p : points)
      metrics << fmt(p.threshold) << "," << run.name << "," << fmt(p.tpr) << "," << fmt(p.fpr)
              << "\n";
    const Rates operating = rates_from_counts(sum_counts(run.level, std::nullopt));
    metrics << "operating," << run.name << "," << fmt(operating.tpr) << ","
            << fmt(operating.fpr) << "\n";
    const RocCurve curve = finalize_roc(std::move(points));
    summary.push_back(std::string("AUC,") + run.name + "," + fmt(curve.auc));
    summary.push_back(std::string("EER,") + run.name + "," + fmt(curve.eer));
    if (log)
      *log << run.name << " level: AUC " << fmt(curve.auc) << ", EER " << fmt(curve.eer)
           << "\n";
  }
  for (const std::string& line : summary) metrics << line << "\n";
  metrics.flush();
  if (!metrics) fail(Err::io_failure, "failed writing metrics.csv");

  // Event report across all sequences, ids namespaced by sequence.
  std::ofstream events_csv(output_root / "events.csv", std::ios::trunc);
  if (!events_csv) fail(Err::io_failure, "cannot write events.csv");
  events_csv << "event_id,hit,first_detected_frame\n";
  int total_hits = 0;
  int total_misses = 0;
  int total_false_alarms = 0;
  for (const LoadedUnit& l : units) {
    const EventReport report = event_level(l.series, l.gt, cfg.merge_gap);
    const std::string prefix = l.name.empty() ? "" : l.name + ":";
    for (const auto& per : report.events)
      events_csv << prefix << per.event_id << "," << (per.hit ? 1 : 0) << ","
                 << per.first_detected_frame << "\n";
    for (std::size_t i = 0; i < report.false_alarm_starts.size(); ++i)
      events_csv << prefix << "fa" << i << ",0," << report.false_alarm_starts[i] << "\n";
    total_hits += report.hits;
    total_misses += report.misses;
    total_false_alarms += report.false_alarms;
  }
  events_csv.flush();
  if (!events_csv) fail(Err::io_failure, "failed writing events.csv");
  if (log)
    *log << "events: " << total_hits << " hit, " << total_misses << " missed, "
         << total_false_alarms << " false alarm(s)\n";
}

void run_sweep(const RunConfig& cfg, const std::vector<int>& k_values, int threads,
               std::ostream* log) {
  if (k_values.empty()) fail(Err::config_error, "sweep: empty K list");
  const fs::path flows_root = require_path(cfg.flows_dir, "flows_dir");
  const fs::path model_file = require_path(cfg.model_file, "model_file");
  const fs::path output_root = require_path(cfg.output_dir, "output_dir");

  const TemporalModel model = load_model(model_file);
  check_model_matches_config(model, cfg);
  const std::vector<SequenceFlows> sequences = load_flow_layout(flows_root);
  const bool with_masks = !cfg.gt_masks_dir.empty();
  const std::vector<double> thresholds = cfg.threshold_grid();

  // Clip histograms are K-independent: compute once, reuse across the sweep.
  struct SequenceHists {
    std::string name;
    std::vector<std::vector<ShapeHistogram>> clips;
  };
  std::vector<SequenceHists> hists;
  for (const SequenceFlows& seq : sequences) {
    if (seq.width / cfg.patch_w != model.grid.cols ||
        seq.height / cfg.patch_h != model.grid.rows)
      fail(Err::geometry_mismatch, "sweep: frame grid differs from the model grid");
    SequenceHists sh;
    sh.name = seq.name;
    for (const ClipRange& range : segment_clips(seq.frame_count(), cfg.frames_per_clip)) {
      const TrajectorySet traj = advect_range(seq.files, range, cfg, threads);
      sh.clips.push_back(describe_all_patches(traj, model.grid, model.descriptor, threads));
    }
    hists.push_back(std::move(sh));
  }

  ensure_dir(output_root);
  std::ofstream sweep(output_root / "sweep.csv", std::ios::trunc);
  if (!sweep) fail(Err::io_failure, "cannot write sweep.csv");
  sweep << "K,EER_frame,EER_pixel\n";

  for (int k : k_values) {
    DetectorConfig det_cfg = cfg.detector;
    det_cfg.k = k;

    std::int64_t degenerate = 0;
    std::int64_t insufficient = 0;
    std::vector<LoadedUnit> units;
    for (const SequenceHists& seq : hists) {
      LoadedUnit unit;
      unit.series.cols = model.grid.cols;
      unit.series.rows = model.grid.rows;
      unit.series.patch_w = model.grid.patch_w;
      unit.series.patch_h = model.grid.patch_h;
      unit.series.frames_per_clip = cfg.frames_per_clip;
      for (std::size_t c = 0; c < seq.clips.size(); ++c) {
        const DetectionGrid det =
            detect_from_histograms(seq.clips[c], model, det_cfg, static_cast<int>(c), threads);
        degenerate += det.degenerate_fits;
        insufficient += det.insufficient_locations;
        DetectionSeries::ClipRecord record;
        record.first_frame = static_cast<int>(c) * cfg.frames_per_clip;
        record.score.reserve(det.temporal.size());
        record.detected.reserve(det.temporal.size());
        for (int m = 0; m < model.grid.patch_count(); ++m) {
          record.score.push_back(det.combined(m, det_cfg.combine));
          record.detected.push_back(det.labels[static_cast<std::size_t>(m)] != CellLabel::normal
                                        ? 1
                                        : 0);
        }
        unit.series.clips.push_back(std::move(record));
      }
      const int covered = static_cast<int>(unit.series.clips.size()) * cfg.frames_per_clip;
      const GtPaths gt = resolve_gt_paths(cfg, seq.name);
      unit.gt = load_ground_truth(gt.index, gt.masks, gt.events, covered);
      units.push_back(std::move(unit));
    }

    const auto eer_for = [&](EvalLevel level) {
      std::vector<RocPoint> points(thresholds.size());
      parallel_for(thresholds.size(), threads, [&](std::size_t i) {
        LevelCounts total;
        for (const LoadedUnit& unit : units)
          total += level_counts(unit.series, unit.gt, level, 0.4, thresholds[i]);
        const Rates r = rates_from_counts(total);
        points[i] = {thresholds[i], r.fpr, r.tpr};
      });
      return finalize_roc(std::move(points)).eer;
    };

    const double eer_frame = eer_for(EvalLevel::frame);
    const double eer_pixel = with_masks ? eer_for(EvalLevel::pixel) : -1.0;
    sweep << k << "," << fmt(eer_frame) << "," << (with_masks ? fmt(eer_pixel) : "") << "\n";
    if (log) {
      *log << "K=" << k << ": frame EER " << fmt(eer_frame);
      if (with_masks) *log << ", pixel EER " << fmt(eer_pixel);
      if (insufficient > 0) *log << "; " << insufficient << " cells below K history (normal)";
      if (degenerate > 0) *log << "; " << degenerate << " degenerate variance fits";
      *log << "\n";
    }
  }
  sweep.flush();
  if (!sweep) fail(Err::io_failure, "failed writing sweep.csv");
}

void run_synth(const fs::path& scene_file, const fs::path& out_dir, int threads,
               std::ostream* log) {
  const SceneSpec spec = parse_scene(scene_file);
  const GeneratedScene scene = generate(spec, threads);

  ensure_dir(out_dir / "flows");
  ensure_dir(out_dir / "masks");
  for (std::size_t t = 0; t < scene.flows.size(); ++t)
    write_flo(scene.flows[t], out_dir / "flows" / frame_name(static_cast<int>(t), ".flo"));
  for (std::size_t f = 0; f < scene.truth.masks.size(); ++f)
    write_pgm(scene.truth.masks[f], out_dir / "masks" / frame_name(static_cast<int>(f), ".pgm"));

  std::ofstream index(out_dir / "index.csv", std::ios::trunc);
  if (!index) fail(Err::io_failure, "cannot write index.csv");
  index << "frame_index,label\n";
  for (std::size_t f = 0; f < scene.truth.abnormal.size(); ++f)
    index << f << "," << static_cast<int>(scene.truth.abnormal[f]) << "\n";
  index.flush();
  if (!index) fail(Err::io_failure, "failed writing index.csv");

  std::ofstream events(out_dir / "events.csv", std::ios::trunc);
  if (!events) fail(Err::io_failure, "cannot write events.csv");
  events << "start,end,label\n";
  for (const auto& event : scene.truth.events)
    events << event.start << "," << event.end << "," << event.label << "\n";
  events.flush();
  if (!events) fail(Err::io_failure, "failed writing events.csv");

  if (log)
    *log << "scene: " << spec.width << "x" << spec.height << ", " << spec.frame_count
         << " frames, " << spec.anomalies.size() << " anomalies -> " << out_dir.string()
         << "\n";
}

}  // namespace stam
