#include "core/descriptor.hpp"

#include <cmath>
#include <numbers>

#include "core/parallel.hpp"

namespace stam {

PatchGrid build_grid(int width, int height, int patch_w, int patch_h) {
  if (patch_w < 1 || patch_h < 1 || patch_w > width || patch_h > height)
    fail(Err::invalid_patch_size, "build_grid: patch size must be within [1, frame size]");
  PatchGrid grid;
  grid.patch_w = patch_w;
  grid.patch_h = patch_h;
  grid.cols = width / patch_w;
  grid.rows = height / patch_h;
  return grid;
}

std::uint64_t ShapeHistogram::total_mass() const {
  std::uint64_t sum = 0;
  for (std::uint32_t c : counts) sum += c;
  return sum;
}

std::uint64_t ShapeHistogram::off_origin_mass() const {
  return total_mass() - (counts.empty() ? 0 : counts[0]);
}

int bin_of(double dx, double dy, const DescriptorParams& params) {
  const double r = std::sqrt(dx * dx + dy * dy);
  int mag_bin = static_cast<int>(r * params.bins_magnitude / params.r_max);
  if (mag_bin >= params.bins_magnitude) mag_bin = params.bins_magnitude - 1;

  int ang_bin = 0;
  if (r > 0.0) {
    double theta = std::atan2(dy, dx);
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    ang_bin = static_cast<int>(theta * params.bins_angle / (2.0 * std::numbers::pi));
    if (ang_bin >= params.bins_angle) ang_bin = params.bins_angle - 1;
  }
  return mag_bin * params.bins_angle + ang_bin;
}

ShapeHistogram describe_patch(const TrajectorySet& traj, const PatchGrid& grid, int m,
                              const DescriptorParams& params) {
  ShapeHistogram hist;
  hist.bins_magnitude = params.bins_magnitude;
  hist.bins_angle = params.bins_angle;
  hist.r_max = params.r_max;
  hist.counts.assign(static_cast<std::size_t>(hist.bin_count()), 0);

  const int x0 = grid.x0_of(m);
  const int y0 = grid.y0_of(m);
  const std::size_t plane = traj.plane();
  for (int y = y0; y < y0 + grid.patch_h; ++y) {
    for (int x = x0; x < x0 + grid.patch_w; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * traj.width + x;
      // The t = 0 point is the origin by construction and is excluded.
      for (int t = 1; t < traj.steps; ++t) {
        const double dx = traj.xs[static_cast<std::size_t>(t) * plane + start] - x;
        const double dy = traj.ys[static_cast<std::size_t>(t) * plane + start] - y;
        ++hist.counts[static_cast<std::size_t>(bin_of(dx, dy, params))];
      }
    }
  }
  return hist;
}

std::vector<ShapeHistogram> describe_all_patches(const TrajectorySet& traj,
                                                 const PatchGrid& grid,
                                                 const DescriptorParams& params,
                                                 int threads) {
  std::vector<ShapeHistogram> hists(static_cast<std::size_t>(grid.patch_count()));
  parallel_for(hists.size(), threads, [&](std::size_t m) {
    hists[m] = describe_patch(traj, grid, static_cast<int>(m), params);
  });
  return hists;
}

SplitHistograms split(const ShapeHistogram& hist) {
  SplitHistograms out;
  out.magnitude.assign(static_cast<std::size_t>(hist.bins_magnitude), 0);
  out.angle.assign(static_cast<std::size_t>(hist.bins_angle), 0);
  for (int m = 0; m < hist.bins_magnitude; ++m)
    for (int a = 0; a < hist.bins_angle; ++a) {
      const std::uint32_t c = hist.counts[static_cast<std::size_t>(m) * hist.bins_angle + a];
      out.magnitude[static_cast<std::size_t>(m)] += c;
      out.angle[static_cast<std::size_t>(a)] += c;
    }
  return out;
}

}  // namespace stam
