#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/types.hpp"

namespace stam {

/// Inclusive frame index range of one clip.
struct ClipRange {
  int first = 0;
  int last = 0;
};

/// Split frame_count frames into consecutive non-overlapping clips of
/// frames_per_clip frames each; a trailing remainder is dropped.
std::vector<ClipRange> segment_clips(int frame_count, int frames_per_clip);

/// One clip's flow fields: frames_per_clip - 1 consecutive pair flows,
/// all with identical dimensions.
struct Clip {
  int start_frame = 0;
  int frames_per_clip = 0;
  std::vector<const FlowField*> flows;  // frames_per_clip - 1 entries
};

/// One particle per start pixel traced through a clip. Positions are stored
/// as per-step planes: xs[t*W*H + y*W + x] is the column of the particle
/// started at (x, y) after t steps (t = 0 is the start position itself).
/// All positions stay inside [0, W) x [0, H).
struct TrajectorySet {
  int width = 0;
  int height = 0;
  int steps = 0;  // frames_per_clip: positions per particle
  std::vector<std::int32_t> xs;
  std::vector<std::int32_t> ys;

  std::size_t plane() const { return static_cast<std::size_t>(width) * height; }
  std::int32_t x_at(int t, std::size_t start_pixel) const {
    return xs[static_cast<std::size_t>(t) * plane() + start_pixel];
  }
  std::int32_t y_at(int t, std::size_t start_pixel) const {
    return ys[static_cast<std::size_t>(t) * plane() + start_pixel];
  }
};

/// Advect one particle per pixel through the clip's flows.
///
/// Each step moves a particle by the rounded flow sampled at its current
/// integer position, then clamps to the frame bounds. Rounding is
/// half-away-from-zero, symmetric for negative velocities.
TrajectorySet advect(const Clip& clip, int threads = 0);

}  // namespace stam
