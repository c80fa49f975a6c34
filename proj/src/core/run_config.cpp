#include "core/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/kv_config.hpp"

namespace stam {

std::vector<double> RunConfig::threshold_grid() const {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(threshold_count));
  const double step = (threshold_max - threshold_min) / (threshold_count - 1);
  for (int i = 0; i < threshold_count; ++i) grid.push_back(threshold_min + step * i);
  return grid;
}

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) fail(Err::config_error, message);
}

int to_int(const std::string& value, const std::string& key) {
  return static_cast<int>(kv_int(value, key, Err::config_error));
}

double to_double(const std::string& value, const std::string& key) {
  return kv_double(value, key, Err::config_error);
}

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const std::size_t comma = value.find(',', pos);
    const std::string part = comma == std::string::npos ? value.substr(pos)
                                                        : value.substr(pos, comma - pos);
    out.push_back(to_int(part, key));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) fail(Err::config_error, "key '" + key + "': empty list");
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void validate_run_config(const RunConfig& cfg) {
  check(cfg.patch_w >= 1 && cfg.patch_h >= 1, "patch size must be >= 1");
  check(cfg.frames_per_clip >= 2, "frames_per_clip must be >= 2");
  check(cfg.descriptor.bins_magnitude >= 1, "bins_magnitude must be >= 1");
  check(cfg.descriptor.bins_angle >= 1, "bins_angle must be >= 1");
  check(cfg.descriptor.r_max > 0.0, "r_max must be > 0");
  check(cfg.detector.k >= 2, "k must be >= 2");
  check(cfg.detector.t_low_temporal <= cfg.detector.t_high_temporal,
        "t_low_temporal must be <= t_high_temporal");
  check(cfg.detector.t_low_spatial <= cfg.detector.t_high_spatial,
        "t_low_spatial must be <= t_high_spatial");
  check(cfg.detector.t_high_temporal <= 0.0 && cfg.detector.t_high_spatial <= 0.0,
        "thresholds are log-probabilities and must be <= 0");
  check(cfg.detector.spatial_radius >= 1, "spatial_radius must be >= 1");
  check(cfg.detector.activity_min >= 0.0 && cfg.detector.activity_min <= 1.0,
        "activity_min must be in [0, 1]");
  check(cfg.detector.nonactive_offset >= 0.0, "nonactive_offset must be >= 0");
  check(cfg.detector.motion_floor >= 0.0 && cfg.detector.motion_floor <= 1.0,
        "motion_floor must be in [0, 1]");
  check(cfg.detector.sigma2_min > 0.0, "sigma2_min must be > 0");
  check(cfg.detector.p_min > 0.0 && cfg.detector.p_min <= 1.0, "p_min must be in (0, 1]");
  check(cfg.estimator.iterations >= 1, "hs_iterations must be >= 1");
  check(cfg.estimator.alpha > 0.0, "hs_alpha must be > 0");
  check(cfg.estimator.clamp > 0.0, "clamp must be > 0");
  check(cfg.threshold_count >= 2, "threshold_count must be >= 2");
  check(cfg.threshold_min < cfg.threshold_max, "threshold_min must be < threshold_max");
  check(cfg.merge_gap >= 0, "merge_gap must be >= 0");
  check(!cfg.sweep_k.empty(), "k_values must not be empty");
  for (int k : cfg.sweep_k) check(k >= 2, "k_values entries must be >= 2");
}

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig cfg;
  for (const KvSection& section : parse_kv_text(text, Err::config_error)) {
    auto unknown_key = [&](const KvSection::Entry& entry) {
      fail(Err::config_error, "unknown key '" + entry.key + "' in [" + section.name +
                                  "] (line " + std::to_string(entry.line) + ")");
    };
    if (section.name == "descriptor") {
      for (const auto& e : section.entries) {
        if (e.key == "patch_w") cfg.patch_w = to_int(e.value, e.key);
        else if (e.key == "patch_h") cfg.patch_h = to_int(e.value, e.key);
        else if (e.key == "frames_per_clip") cfg.frames_per_clip = to_int(e.value, e.key);
        else if (e.key == "bins_magnitude") cfg.descriptor.bins_magnitude = to_int(e.value, e.key);
        else if (e.key == "bins_angle") cfg.descriptor.bins_angle = to_int(e.value, e.key);
        else if (e.key == "r_max") cfg.descriptor.r_max = to_double(e.value, e.key);
        else unknown_key(e);
      }
    } else if (section.name == "detector") {
      for (const auto& e : section.entries) {
        if (e.key == "k") cfg.detector.k = to_int(e.value, e.key);
        else if (e.key == "t_low_temporal") cfg.detector.t_low_temporal = to_double(e.value, e.key);
        else if (e.key == "t_high_temporal") cfg.detector.t_high_temporal = to_double(e.value, e.key);
        else if (e.key == "t_low_spatial") cfg.detector.t_low_spatial = to_double(e.value, e.key);
        else if (e.key == "t_high_spatial") cfg.detector.t_high_spatial = to_double(e.value, e.key);
        else if (e.key == "spatial_radius") cfg.detector.spatial_radius = to_int(e.value, e.key);
        else if (e.key == "activity_min") cfg.detector.activity_min = to_double(e.value, e.key);
        else if (e.key == "nonactive_offset") cfg.detector.nonactive_offset = to_double(e.value, e.key);
        else if (e.key == "motion_floor") cfg.detector.motion_floor = to_double(e.value, e.key);
        else if (e.key == "sigma2_min") cfg.detector.sigma2_min = to_double(e.value, e.key);
        else if (e.key == "p_min") cfg.detector.p_min = to_double(e.value, e.key);
        else if (e.key == "combine") {
          if (e.value == "or") cfg.detector.combine = CombineMode::any;
          else if (e.value == "and") cfg.detector.combine = CombineMode::all;
          else fail(Err::config_error, "combine must be 'or' or 'and'");
        } else if (e.key == "spatial_source") {
          if (e.value == "clip") cfg.detector.spatial_source = SpatialSource::clip;
          else if (e.value == "training") cfg.detector.spatial_source = SpatialSource::training;
          else fail(Err::config_error, "spatial_source must be 'clip' or 'training'");
        } else if (e.key == "tail") {
          if (e.value == "one_sided") cfg.detector.tail = TailMode::one_sided;
          else if (e.value == "two_sided") cfg.detector.tail = TailMode::two_sided;
          else fail(Err::config_error, "tail must be 'one_sided' or 'two_sided'");
        } else unknown_key(e);
      }
    } else if (section.name == "flow") {
      for (const auto& e : section.entries) {
        if (e.key == "source") {
          if (e.value == "precomputed") cfg.flow_source = FlowSource::precomputed;
          else if (e.value == "estimate") cfg.flow_source = FlowSource::estimate;
          else fail(Err::config_error, "flow source must be 'precomputed' or 'estimate'");
        } else if (e.key == "hs_iterations") cfg.estimator.iterations = to_int(e.value, e.key);
        else if (e.key == "hs_alpha") cfg.estimator.alpha = to_double(e.value, e.key);
        else if (e.key == "clamp") cfg.estimator.clamp = to_double(e.value, e.key);
        else unknown_key(e);
      }
    } else if (section.name == "paths") {
      for (const auto& e : section.entries) {
        if (e.key == "frames_dir") cfg.frames_dir = e.value;
        else if (e.key == "flows_dir") cfg.flows_dir = e.value;
        else if (e.key == "model_file") cfg.model_file = e.value;
        else if (e.key == "output_dir") cfg.output_dir = e.value;
        else if (e.key == "gt_index") cfg.gt_index = e.value;
        else if (e.key == "gt_masks_dir") cfg.gt_masks_dir = e.value;
        else if (e.key == "gt_events") cfg.gt_events = e.value;
        else unknown_key(e);
      }
    } else if (section.name == "eval") {
      for (const auto& e : section.entries) {
        if (e.key == "threshold_min") cfg.threshold_min = to_double(e.value, e.key);
        else if (e.key == "threshold_max") cfg.threshold_max = to_double(e.value, e.key);
        else if (e.key == "threshold_count") cfg.threshold_count = to_int(e.value, e.key);
        else if (e.key == "merge_gap") cfg.merge_gap = to_int(e.value, e.key);
        else unknown_key(e);
      }
    } else if (section.name == "sweep") {
      for (const auto& e : section.entries) {
        if (e.key == "k_values") cfg.sweep_k = parse_int_list(e.value, e.key);
        else unknown_key(e);
      }
    } else {
      fail(Err::config_error, "unknown section [" + section.name + "]");
    }
  }
  validate_run_config(cfg);
  return cfg;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Err::io_failure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_run_config_text(buffer.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[descriptor]\n";
  out << "patch_w = " << cfg.patch_w << "\n";
  out << "patch_h = " << cfg.patch_h << "\n";
  out << "frames_per_clip = " << cfg.frames_per_clip << "\n";
  out << "bins_magnitude = " << cfg.descriptor.bins_magnitude << "\n";
  out << "bins_angle = " << cfg.descriptor.bins_angle << "\n";
  out << "r_max = " << format_double(cfg.descriptor.r_max) << "\n";
  out << "\n[detector]\n";
  out << "k = " << cfg.detector.k << "\n";
  out << "t_low_temporal = " << format_double(cfg.detector.t_low_temporal) << "\n";
  out << "t_high_temporal = " << format_double(cfg.detector.t_high_temporal) << "\n";
  out << "t_low_spatial = " << format_double(cfg.detector.t_low_spatial) << "\n";
  out << "t_high_spatial = " << format_double(cfg.detector.t_high_spatial) << "\n";
  out << "spatial_radius = " << cfg.detector.spatial_radius << "\n";
  out << "activity_min = " << format_double(cfg.detector.activity_min) << "\n";
  out << "nonactive_offset = " << format_double(cfg.detector.nonactive_offset) << "\n";
  out << "combine = " << (cfg.detector.combine == CombineMode::any ? "or" : "and") << "\n";
  out << "motion_floor = " << format_double(cfg.detector.motion_floor) << "\n";
  out << "spatial_source = "
      << (cfg.detector.spatial_source == SpatialSource::clip ? "clip" : "training") << "\n";
  out << "tail = " << (cfg.detector.tail == TailMode::one_sided ? "one_sided" : "two_sided")
      << "\n";
  out << "sigma2_min = " << format_double(cfg.detector.sigma2_min) << "\n";
  out << "p_min = " << format_double(cfg.detector.p_min) << "\n";
  out << "\n[flow]\n";
  out << "source = " << (cfg.flow_source == FlowSource::precomputed ? "precomputed" : "estimate")
      << "\n";
  out << "hs_iterations = " << cfg.estimator.iterations << "\n";
  out << "hs_alpha = " << format_double(cfg.estimator.alpha) << "\n";
  out << "clamp = " << format_double(cfg.estimator.clamp) << "\n";
  out << "\n[paths]\n";
  out << "frames_dir = " << cfg.frames_dir << "\n";
  out << "flows_dir = " << cfg.flows_dir << "\n";
  out << "model_file = " << cfg.model_file << "\n";
  out << "output_dir = " << cfg.output_dir << "\n";
  out << "gt_index = " << cfg.gt_index << "\n";
  out << "gt_masks_dir = " << cfg.gt_masks_dir << "\n";
  out << "gt_events = " << cfg.gt_events << "\n";
  out << "\n[eval]\n";
  out << "threshold_min = " << format_double(cfg.threshold_min) << "\n";
  out << "threshold_max = " << format_double(cfg.threshold_max) << "\n";
  out << "threshold_count = " << cfg.threshold_count << "\n";
  out << "merge_gap = " << cfg.merge_gap << "\n";
  out << "\n[sweep]\n";
  out << "k_values = ";
  for (std::size_t i = 0; i < cfg.sweep_k.size(); ++i)
    out << (i ? "," : "") << cfg.sweep_k[i];
  out << "\n";
  return out.str();
}

}  // namespace stam
