#include "core/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "core/parallel.hpp"

namespace stam {

std::vector<ClipRange> segment_clips(int frame_count, int frames_per_clip) {
  if (frames_per_clip < 2)
    fail(Err::invalid_spec, "segment_clips: frames_per_clip must be >= 2");
  std::vector<ClipRange> ranges;
  if (frame_count < frames_per_clip) return ranges;
  const int count = frame_count / frames_per_clip;
  ranges.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    ranges.push_back({i * frames_per_clip, (i + 1) * frames_per_clip - 1});
  return ranges;
}

TrajectorySet advect(const Clip& clip, int threads) {
  if (clip.frames_per_clip < 2)
    fail(Err::invalid_spec, "advect: clip must span at least 2 frames");
  if (clip.flows.size() != static_cast<std::size_t>(clip.frames_per_clip) - 1)
    fail(Err::dimension_mismatch, "advect: clip needs frames_per_clip - 1 flow fields");
  const FlowField& first = *clip.flows.front();
  const int w = first.width;
  const int h = first.height;
  for (const FlowField* f : clip.flows)
    if (f->width != w || f->height != h)
      fail(Err::dimension_mismatch, "advect: flow field dimensions differ within clip");

  TrajectorySet set;
  set.width = w;
  set.height = h;
  set.steps = clip.frames_per_clip;
  const std::size_t plane = set.plane();
  set.xs.resize(plane * set.steps);
  set.ys.resize(plane * set.steps);

  // t = 0: particles sit on their start pixels (re-initialized every clip).
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      set.xs[i] = x;
      set.ys[i] = y;
    }

  // Each particle's path depends only on its own start pixel, so rows can be
  // advected independently in any order.
  parallel_for(static_cast<std::size_t>(h), threads, [&](std::size_t row) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = row * w + x;
      std::int32_t px = set.xs[start];
      std::int32_t py = set.ys[start];
      for (int t = 1; t < set.steps; ++t) {
        const FlowField& flow = *clip.flows[static_cast<std::size_t>(t) - 1];
        // Flow is sampled at the particle's current position, not its start.
        const double du = flow.u_at(px, py);
        const double dv = flow.v_at(px, py);
        px = std::clamp<std::int32_t>(px + static_cast<std::int32_t>(std::round(du)), 0, w - 1);
        py = std::clamp<std::int32_t>(py + static_cast<std::int32_t>(std::round(dv)), 0, h - 1);
        set.xs[static_cast<std::size_t>(t) * plane + start] = px;
        set.ys[static_cast<std::size_t>(t) * plane + start] = py;
      }
    }
  });
  return set;
}

}  // namespace stam
