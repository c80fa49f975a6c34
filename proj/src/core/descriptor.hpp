#pragma once

#include <cstdint>
#include <vector>

#include "core/trajectory.hpp"

namespace stam {

/// Non-overlapping axis-aligned patch partition of a frame. Pixels beyond
/// the last full patch column/row are ignored so every patch holds the same
/// number of trajectories.
struct PatchGrid {
  int patch_w = 0;
  int patch_h = 0;
  int cols = 0;
  int rows = 0;

  int patch_count() const { return cols * rows; }
  int col_of(int m) const { return m % cols; }
  int row_of(int m) const { return m / cols; }
  int x0_of(int m) const { return col_of(m) * patch_w; }
  int y0_of(int m) const { return row_of(m) * patch_h; }
};

PatchGrid build_grid(int width, int height, int patch_w, int patch_h);

struct DescriptorParams {
  int bins_magnitude = 8;  // uniform radial intervals
  int bins_angle = 8;      // uniform angular intervals
  double r_max = 9.0;      // outer radius; the outer ring absorbs r >= r_max
};

/// Polar bin counts of one patch's translated trajectory points.
struct ShapeHistogram {
  int bins_magnitude = 0;
  int bins_angle = 0;
  double r_max = 0.0;
  std::vector<std::uint32_t> counts;  // bins_magnitude * bins_angle entries

  int bin_count() const { return bins_magnitude * bins_angle; }
  std::uint64_t total_mass() const;
  /// Mass outside bin 0, the bin holding zero displacements. Stationary
  /// patches keep all their mass in bin 0, so this is the activity measure.
  std::uint64_t off_origin_mass() const;
};

/// Flat polar bin index of a translated displacement (dx, dy).
///
/// r is binned uniformly in [0, r_max) with the last ring absorbing
/// r >= r_max; the angle from atan2 is mapped to [0, 2*pi) and binned
/// uniformly; zero displacement lands in angle bin 0. The flat index is
/// magnitude_bin * bins_angle + angle_bin.
int bin_of(double dx, double dy, const DescriptorParams& params);

/// Histogram all trajectory points (steps t >= 1) of the trajectories that
/// start inside patch m, each translated so its start point is the origin.
/// Total mass is exactly (steps - 1) * patch pixel count.
ShapeHistogram describe_patch(const TrajectorySet& traj, const PatchGrid& grid, int m,
                              const DescriptorParams& params);

/// All patches of the grid, in patch index order.
std::vector<ShapeHistogram> describe_all_patches(const TrajectorySet& traj,
                                                 const PatchGrid& grid,
                                                 const DescriptorParams& params,
                                                 int threads = 0);

struct SplitHistograms {
  std::vector<std::uint64_t> magnitude;  // bins_magnitude entries
  std::vector<std::uint64_t> angle;      // bins_angle entries
};

/// Marginal histograms along the magnitude and angle dimensions; each sums
/// to the parent's total mass.
SplitHistograms split(const ShapeHistogram& hist);

}  // namespace stam
