#include "stam/stam.h"

#include <cstring>
#include <iostream>
#include <string>

#include "core/detector.hpp"
#include "core/flow_io.hpp"
#include "core/run_config.hpp"
#include "core/runner.hpp"

namespace {

thread_local std::string g_last_error;

stam_status status_of(stam::Err code) {
  using stam::Err;
  switch (code) {
    case Err::io_failure:
      return STAM_ERR_IO;
    case Err::bad_magic:
    case Err::truncated:
    case Err::non_finite:
    case Err::bad_header:
    case Err::bad_version:
      return STAM_ERR_FORMAT;
    case Err::dimension_mismatch:
      return STAM_ERR_DIMENSION_MISMATCH;
    case Err::geometry_mismatch:
      return STAM_ERR_GEOMETRY_MISMATCH;
    case Err::invalid_patch_size:
    case Err::bin_count_mismatch:
    case Err::pool_too_small:
    case Err::degenerate_k:
    case Err::invalid_spec:
    case Err::config_error:
      return STAM_ERR_INVALID_ARGUMENT;
    case Err::empty_training:
    case Err::insufficient_history:
    case Err::missing_mask:
    case Err::no_abnormal_frames:
    case Err::no_normal_frames:
    case Err::degenerate_scores:
      return STAM_ERR_INSUFFICIENT_DATA;
    case Err::internal:
      return STAM_ERR_INTERNAL;
  }
  return STAM_ERR_INTERNAL;
}

template <typename Fn>
stam_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return STAM_OK;
  } catch (const stam::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return STAM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return STAM_ERR_INTERNAL;
  }
}

stam_status null_argument(const char* what) {
  g_last_error = std::string(what) + " must not be null";
  return STAM_ERR_NULL_ARGUMENT;
}

}  // namespace

struct stam_config {
  stam::RunConfig cfg;
};
struct stam_flow {
  stam::FlowField field;
};
struct stam_frame {
  stam::Frame frame;
};
struct stam_model {
  stam::TemporalModel model;
};

extern "C" {

const char* stam_status_name(stam_status status) {
  switch (status) {
    case STAM_OK: return "ok";
    case STAM_ERR_NULL_ARGUMENT: return "null_argument";
    case STAM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case STAM_ERR_IO: return "io";
    case STAM_ERR_FORMAT: return "format";
    case STAM_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case STAM_ERR_GEOMETRY_MISMATCH: return "geometry_mismatch";
    case STAM_ERR_INSUFFICIENT_DATA: return "insufficient_data";
    case STAM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* stam_last_error_message(void) { return g_last_error.c_str(); }

void stam_version(int* major, int* minor, int* patch) {
  if (major) *major = 1;
  if (minor) *minor = 0;
  if (patch) *patch = 0;
}

/* ------------------------------------------------------------------ */

stam_status stam_config_create(stam_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = new stam_config{}; });
}

stam_status stam_config_load(const char* path, stam_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new stam_config{stam::parse_run_config(path)}; });
}

stam_status stam_config_set(stam_config* config, const char* section_dot_key,
                            const char* value) {
  if (!config) return null_argument("config");
  if (!section_dot_key) return null_argument("section_dot_key");
  if (!value) return null_argument("value");
  return guarded([&] {
    const std::string key(section_dot_key);
    const std::size_t dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= key.size())
      stam::fail(stam::Err::config_error, "expected 'section.key', got '" + key + "'");
    // Rebuild through the canonical text path so overrides share the
    // parser's validation and unknown-key rejection.
    std::string text = dump_run_config(config->cfg);
    const std::string section = "[" + key.substr(0, dot) + "]";
    const std::string key_name = key.substr(dot + 1);
    const std::size_t section_pos = text.find(section + "\n");
    if (section_pos == std::string::npos)
      stam::fail(stam::Err::config_error, "unknown section in '" + key + "'");
    const std::size_t section_end = text.find("\n[", section_pos);
    std::size_t line_pos = text.find("\n" + key_name + " = ", section_pos);
    if (line_pos == std::string::npos ||
        (section_end != std::string::npos && line_pos > section_end))
      stam::fail(stam::Err::config_error, "unknown key '" + key + "'");
    ++line_pos;  // past the newline
    const std::size_t line_end = text.find('\n', line_pos);
    text.replace(line_pos, line_end - line_pos, key_name + " = " + value);
    config->cfg = stam::parse_run_config_text(text);
  });
}

stam_status stam_config_dump(const stam_config* config, char* buffer, size_t* length) {
  if (!config) return null_argument("config");
  if (!length) return null_argument("length");
  return guarded([&] {
    const std::string text = dump_run_config(config->cfg);
    const std::size_t needed = text.size() + 1;
    if (buffer && *length >= needed) {
      std::memcpy(buffer, text.c_str(), needed);
    } else if (buffer) {
      *length = needed;
      stam::fail(stam::Err::config_error, "buffer too small for config dump");
    }
    *length = needed;
  });
}

void stam_config_free(stam_config* config) { delete config; }

/* ------------------------------------------------------------------ */

stam_status stam_flow_read(const char* path, stam_flow** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new stam_flow{stam::read_flo(path)}; });
}

stam_status stam_flow_write(const stam_flow* flow, const char* path) {
  if (!flow) return null_argument("flow");
  if (!path) return null_argument("path");
  return guarded([&] { stam::write_flo(flow->field, path); });
}

stam_status stam_flow_create(int32_t width, int32_t height, const float* u, const float* v,
                             stam_flow** out) {
  if (!u) return null_argument("u");
  if (!v) return null_argument("v");
  if (!out) return null_argument("out");
  return guarded([&] {
    if (width < 1 || height < 1)
      stam::fail(stam::Err::invalid_spec, "flow dimensions must be positive");
    stam::FlowField field;
    field.width = width;
    field.height = height;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    field.u.assign(u, u + n);
    field.v.assign(v, v + n);
    *out = new stam_flow{std::move(field)};
  });
}

stam_status stam_flow_dims(const stam_flow* flow, int32_t* width, int32_t* height) {
  if (!flow) return null_argument("flow");
  if (width) *width = flow->field.width;
  if (height) *height = flow->field.height;
  return STAM_OK;
}

stam_status stam_flow_data(const stam_flow* flow, const float** u, const float** v) {
  if (!flow) return null_argument("flow");
  if (u) *u = flow->field.u.data();
  if (v) *v = flow->field.v.data();
  return STAM_OK;
}

void stam_flow_free(stam_flow* flow) { delete flow; }

stam_status stam_frame_read(const char* path, stam_frame** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new stam_frame{stam::read_pgm(path)}; });
}

stam_status stam_frame_dims(const stam_frame* frame, int32_t* width, int32_t* height) {
  if (!frame) return null_argument("frame");
  if (width) *width = frame->frame.width;
  if (height) *height = frame->frame.height;
  return STAM_OK;
}

stam_status stam_frame_data(const stam_frame* frame, const uint8_t** intensity) {
  if (!frame) return null_argument("frame");
  if (intensity) *intensity = frame->frame.intensity.data();
  return STAM_OK;
}

void stam_frame_free(stam_frame* frame) { delete frame; }

stam_status stam_flow_estimate(const stam_frame* prev, const stam_frame* next,
                               int32_t iterations, double alpha, double clamp,
                               stam_flow** out) {
  if (!prev) return null_argument("prev");
  if (!next) return null_argument("next");
  if (!out) return null_argument("out");
  return guarded([&] {
    if (iterations < 1 || !(alpha > 0.0) || !(clamp > 0.0))
      stam::fail(stam::Err::invalid_spec, "estimator parameters out of range");
    stam::FlowEstimatorConfig cfg;
    cfg.iterations = iterations;
    cfg.alpha = alpha;
    cfg.clamp = clamp;
    *out = new stam_flow{stam::estimate_flow(prev->frame, next->frame, cfg)};
  });
}

/* ------------------------------------------------------------------ */

stam_status stam_model_load(const char* path, stam_model** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new stam_model{stam::load_model(path)}; });
}

stam_status stam_model_save(const stam_model* model, const char* path) {
  if (!model) return null_argument("model");
  if (!path) return null_argument("path");
  return guarded([&] { stam::save_model(model->model, path); });
}

stam_status stam_model_get_info(const stam_model* model, stam_model_info* out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  const stam::TemporalModel& m = model->model;
  out->cols = m.grid.cols;
  out->rows = m.grid.rows;
  out->patch_w = m.grid.patch_w;
  out->patch_h = m.grid.patch_h;
  out->frames_per_clip = m.frames_per_clip;
  out->bins_magnitude = m.descriptor.bins_magnitude;
  out->bins_angle = m.descriptor.bins_angle;
  out->r_max = m.descriptor.r_max;
  out->locations = m.location_count();
  std::size_t min_hist = m.histograms.empty() ? 0 : m.histograms.front().size();
  for (const auto& h : m.histograms) min_hist = std::min(min_hist, h.size());
  out->min_histograms = static_cast<int32_t>(min_hist);
  return STAM_OK;
}

void stam_model_free(stam_model* model) { delete model; }

/* ------------------------------------------------------------------ */

stam_status stam_run_flow(const stam_config* config, int32_t threads) {
  if (!config) return null_argument("config");
  return guarded([&] { stam::run_flow(config->cfg, threads, &std::cout); });
}

stam_status stam_run_train(const stam_config* config, int32_t threads,
                           stam_model** out_model) {
  if (!config) return null_argument("config");
  return guarded([&] {
    stam::TemporalModel model = stam::run_train(config->cfg, threads, &std::cout);
    if (out_model) *out_model = new stam_model{std::move(model)};
  });
}

stam_status stam_run_detect(const stam_config* config, int32_t threads) {
  if (!config) return null_argument("config");
  return guarded([&] { stam::run_detect(config->cfg, threads, &std::cout); });
}

stam_status stam_run_eval(const stam_config* config, int32_t threads) {
  if (!config) return null_argument("config");
  return guarded([&] { stam::run_eval(config->cfg, threads, &std::cout); });
}

stam_status stam_run_sweep(const stam_config* config, const int32_t* k_values, size_t k_count,
                           int32_t threads) {
  if (!config) return null_argument("config");
  if (!k_values && k_count > 0) return null_argument("k_values");
  return guarded([&] {
    std::vector<int> ks;
    if (k_values && k_count > 0)
      ks.assign(k_values, k_values + k_count);
    else
      ks = config->cfg.sweep_k;
    stam::run_sweep(config->cfg, ks, threads, &std::cout);
  });
}

stam_status stam_run_synth(const char* scene_path, const char* out_dir, int32_t threads) {
  if (!scene_path) return null_argument("scene_path");
  if (!out_dir) return null_argument("out_dir");
  return guarded([&] { stam::run_synth(scene_path, out_dir, threads, &std::cout); });
}

} /* extern "C" */
