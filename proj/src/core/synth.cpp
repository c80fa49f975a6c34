#include "core/synth.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "core/kv_config.hpp"
#include "core/parallel.hpp"

namespace stam {

std::uint64_t xorshift64star(std::uint64_t& state) {
  state ^= state >> 12;
  state ^= state << 25;
  state ^= state >> 27;
  return state * 0x2545F4914F6CDD1DULL;
}

std::uint64_t splitmix64(std::uint64_t value) {
  std::uint64_t z = value + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

double unit_draw(std::uint64_t& state) {
  return static_cast<double>(xorshift64star(state) >> 11) * 0x1.0p-53;
}

std::uint64_t frame_stream_state(std::uint64_t seed, int flow_index) {
  std::uint64_t state =
      splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(flow_index + 1)));
  if (state == 0) state = 0x9E3779B97F4A7C15ULL;  // xorshift64* fixpoint guard
  return state;
}

void validate_rect(const Rect& r, int width, int height, const char* what) {
  if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > width || r.y + r.h > height)
    fail(Err::invalid_spec, std::string(what) + " rectangle out of frame bounds");
}

void validate(const SceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1)
    fail(Err::invalid_spec, "scene dimensions must be positive");
  if (spec.frame_count < 2) fail(Err::invalid_spec, "scene needs at least 2 frames");
  if (spec.noise < 0.0) fail(Err::invalid_spec, "noise amplitude must be >= 0");
  for (const auto& region : spec.background)
    validate_rect(region.rect, spec.width, spec.height, "background");
  for (const auto& anomaly : spec.anomalies) {
    validate_rect(anomaly.rect, spec.width, spec.height, "anomaly");
    if (anomaly.start_frame < 0 || anomaly.end_frame < anomaly.start_frame ||
        anomaly.end_frame >= spec.frame_count)
      fail(Err::invalid_spec, "anomaly frame range outside the sequence");
  }
}

}  // namespace

GeneratedScene generate(const SceneSpec& spec, int threads) {
  validate(spec);
  const int w = spec.width;
  const int h = spec.height;
  const std::size_t pixels = static_cast<std::size_t>(w) * h;

  // Background painted once, in declaration order (later regions win).
  std::vector<float> base_u(pixels, 0.0f), base_v(pixels, 0.0f);
  for (const auto& region : spec.background)
    for (int y = region.rect.y; y < region.rect.y + region.rect.h; ++y)
      for (int x = region.rect.x; x < region.rect.x + region.rect.w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        base_u[i] = static_cast<float>(region.u);
        base_v[i] = static_cast<float>(region.v);
      }

  GeneratedScene scene;
  const int flow_count = spec.frame_count - 1;
  scene.flows.resize(static_cast<std::size_t>(flow_count));

  parallel_for(static_cast<std::size_t>(flow_count), threads, [&](std::size_t t) {
    FlowField& field = scene.flows[t];
    field.width = w;
    field.height = h;
    field.u.resize(pixels);
    field.v.resize(pixels);

    std::vector<float> u(base_u), v(base_v);
    for (const auto& anomaly : spec.anomalies) {
      // Flow t moves frame t to t+1; the anomaly drives it while both
      // endpoints are inside the anomaly's active frame range.
      if (static_cast<int>(t) < anomaly.start_frame ||
          static_cast<int>(t) >= anomaly.end_frame)
        continue;
      for (int y = anomaly.rect.y; y < anomaly.rect.y + anomaly.rect.h; ++y)
        for (int x = anomaly.rect.x; x < anomaly.rect.x + anomaly.rect.w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          u[i] = static_cast<float>(anomaly.u);
          v[i] = static_cast<float>(anomaly.v);
        }
    }

    std::uint64_t state = frame_stream_state(spec.seed, static_cast<int>(t));
    for (std::size_t i = 0; i < pixels; ++i) {
      const double ju = spec.noise * (2.0 * unit_draw(state) - 1.0);
      const double jv = spec.noise * (2.0 * unit_draw(state) - 1.0);
      field.u[i] = static_cast<float>(u[i] + ju);
      field.v[i] = static_cast<float>(v[i] + jv);
    }
  });

  // Ground truth mirrors the spec exactly.
  scene.truth.abnormal.assign(static_cast<std::size_t>(spec.frame_count), 0);
  scene.truth.masks.resize(static_cast<std::size_t>(spec.frame_count));
  for (int f = 0; f < spec.frame_count; ++f) {
    Frame& mask = scene.truth.masks[static_cast<std::size_t>(f)];
    mask.width = w;
    mask.height = h;
    mask.intensity.assign(pixels, 0);
    for (const auto& anomaly : spec.anomalies) {
      if (f < anomaly.start_frame || f > anomaly.end_frame) continue;
      scene.truth.abnormal[static_cast<std::size_t>(f)] = 1;
      for (int y = anomaly.rect.y; y < anomaly.rect.y + anomaly.rect.h; ++y)
        for (int x = anomaly.rect.x; x < anomaly.rect.x + anomaly.rect.w; ++x)
          mask.intensity[static_cast<std::size_t>(y) * w + x] = 255;
    }
  }
  for (const auto& anomaly : spec.anomalies)
    scene.truth.events.push_back({anomaly.start_frame, anomaly.end_frame, anomaly.label});
  return scene;
}

namespace {

Rect parse_rect(const std::string& value) {
  Rect r;
  int fields[4];
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t comma = value.find(',', pos);
    const std::string part = comma == std::string::npos ? value.substr(pos)
                                                        : value.substr(pos, comma - pos);
    if ((i < 3) != (comma != std::string::npos))
      fail(Err::invalid_spec, "rect must be 'x,y,w,h', got '" + value + "'");
    fields[i] = static_cast<int>(kv_int(part, "rect", Err::invalid_spec));
    pos = comma + 1;
  }
  r.x = fields[0];
  r.y = fields[1];
  r.w = fields[2];
  r.h = fields[3];
  return r;
}

const std::string& require_key(const KvSection& section, const std::string& key) {
  const std::string* value = section.find(key);
  if (!value)
    fail(Err::invalid_spec, "[" + section.name + "] section is missing key '" + key + "'");
  return *value;
}

void reject_unknown_keys(const KvSection& section,
                         std::initializer_list<const char*> known) {
  for (const auto& entry : section.entries) {
    bool ok = false;
    for (const char* k : known) ok = ok || entry.key == k;
    if (!ok)
      fail(Err::invalid_spec,
           "unknown key '" + entry.key + "' in [" + section.name + "] (line " +
               std::to_string(entry.line) + ")");
  }
}

}  // namespace

SceneSpec parse_scene_text(const std::string& text) {
  SceneSpec spec;
  bool saw_scene = false;
  bool saw_seed = false;
  for (const KvSection& section : parse_kv_text(text, Err::invalid_spec)) {
    if (section.name == "scene") {
      if (saw_scene) fail(Err::invalid_spec, "duplicate [scene] section");
      saw_scene = true;
      reject_unknown_keys(section, {"width", "height", "frames", "seed", "noise"});
      spec.width = static_cast<int>(kv_int(require_key(section, "width"), "width", Err::invalid_spec));
      spec.height =
          static_cast<int>(kv_int(require_key(section, "height"), "height", Err::invalid_spec));
      spec.frame_count =
          static_cast<int>(kv_int(require_key(section, "frames"), "frames", Err::invalid_spec));
      spec.seed = static_cast<std::uint64_t>(
          kv_int(require_key(section, "seed"), "seed", Err::invalid_spec));
      saw_seed = true;
      if (const std::string* noise = section.find("noise"))
        spec.noise = kv_double(*noise, "noise", Err::invalid_spec);
    } else if (section.name == "background") {
      if (!saw_scene) fail(Err::invalid_spec, "[background] before [scene]");
      reject_unknown_keys(section, {"rect", "u", "v"});
      SceneSpec::BackgroundRegion region;
      region.rect = section.find("rect") ? parse_rect(*section.find("rect"))
                                         : Rect{0, 0, spec.width, spec.height};
      if (const std::string* u = section.find("u")) region.u = kv_double(*u, "u", Err::invalid_spec);
      if (const std::string* v = section.find("v")) region.v = kv_double(*v, "v", Err::invalid_spec);
      spec.background.push_back(region);
    } else if (section.name == "anomaly") {
      if (!saw_scene) fail(Err::invalid_spec, "[anomaly] before [scene]");
      reject_unknown_keys(section, {"rect", "u", "v", "start", "end", "label"});
      SceneSpec::Anomaly anomaly;
      anomaly.rect = parse_rect(require_key(section, "rect"));
      if (const std::string* u = section.find("u")) anomaly.u = kv_double(*u, "u", Err::invalid_spec);
      if (const std::string* v = section.find("v")) anomaly.v = kv_double(*v, "v", Err::invalid_spec);
      anomaly.start_frame =
          static_cast<int>(kv_int(require_key(section, "start"), "start", Err::invalid_spec));
      anomaly.end_frame =
          static_cast<int>(kv_int(require_key(section, "end"), "end", Err::invalid_spec));
      if (const std::string* label = section.find("label")) anomaly.label = *label;
      spec.anomalies.push_back(std::move(anomaly));
    } else {
      fail(Err::invalid_spec, "unknown section [" + section.name + "]");
    }
  }
  if (!saw_scene) fail(Err::invalid_spec, "missing [scene] section");
  if (!saw_seed) fail(Err::invalid_spec, "missing seed");
  validate(spec);
  return spec;
}

SceneSpec parse_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Err::io_failure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scene_text(buffer.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace stam
