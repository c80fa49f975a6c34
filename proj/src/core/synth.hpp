#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/evaluation.hpp"
#include "core/types.hpp"

namespace stam {

/// Axis-aligned pixel rectangle, [x, x+w) x [y, y+h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
};

/// Declarative synthetic crowd scene: piecewise-constant background drift
/// regions (later regions win where they overlap), per-pixel uniform jitter,
/// and rectangular anomaly intrusions with their own flow over an inclusive
/// frame range.
struct SceneSpec {
  int width = 0;
  int height = 0;
  int frame_count = 0;
  std::uint64_t seed = 0;
  double noise = 0.0;  // jitter amplitude: uniform in [-noise, noise]

  struct BackgroundRegion {
    Rect rect;
    double u = 0.0;
    double v = 0.0;
  };
  struct Anomaly {
    Rect rect;
    double u = 0.0;
    double v = 0.0;
    int start_frame = 0;
    int end_frame = 0;  // inclusive
    std::string label = "anomaly";
  };

  std::vector<BackgroundRegion> background;
  std::vector<Anomaly> anomalies;
};

/// Parse and validate a scene spec file ([scene] / [background] / [anomaly]
/// sections). Unknown keys or sections, missing mandatory keys, rectangles
/// out of bounds and frame ranges outside the sequence all reject the spec.
SceneSpec parse_scene(const std::filesystem::path& path);
SceneSpec parse_scene_text(const std::string& text);

struct GeneratedScene {
  std::vector<FlowField> flows;  // frame_count - 1 fields
  GroundTruth truth;             // flags + masks + events, exactly from the spec
};

/// Deterministic generation: base flow per pixel (anomaly rectangles override
/// background during their active pair range) plus seeded jitter. Identical
/// spec => bitwise identical output, independent of thread count.
///
/// The jitter stream is pinned for reproducibility across implementations:
/// per flow field t, a generator state is derived as
/// splitmix64(seed XOR (0x9E3779B97F4A7C15 * (t + 1))), then xorshift64*
/// yields two draws per pixel in row-major order (u first, then v), each
/// mapped to [0, 1) via the top 53 bits and stretched to [-noise, noise].
GeneratedScene generate(const SceneSpec& spec, int threads = 0);

/// xorshift64* step, the pinned jitter source.
std::uint64_t xorshift64star(std::uint64_t& state);
/// splitmix64 mix, the pinned per-frame seed derivation.
std::uint64_t splitmix64(std::uint64_t value);

}  // namespace stam
