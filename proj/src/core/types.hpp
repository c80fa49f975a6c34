#pragma once

#include <cstdint>
#include <vector>

#include "core/error.hpp"

namespace stam {

/// Single grayscale frame, row-major, 8-bit intensities.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> intensity;  // height*width entries

  std::uint8_t at(int x, int y) const {
    return intensity[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
};

/// Dense per-pixel motion vectors for one frame pair. Values are stored
/// as float32 so that .flo files round-trip exactly.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;  // horizontal velocity, pixels/frame
  std::vector<float> v;  // vertical velocity, pixels/frame

  float u_at(int x, int y) const {
    return u[static_cast<std::size_t>(y) * width + x];
  }
  float v_at(int x, int y) const {
    return v[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
};

/// Clamp both velocity components to [-limit, limit] in place. Applied on
/// ingest by the pipeline so advection cannot jump across the whole frame;
/// raw file IO never clamps (byte-exact round-trips).
void clamp_flow(FlowField& field, float limit);

}  // namespace stam
