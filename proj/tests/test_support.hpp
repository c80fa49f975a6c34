#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "core/descriptor.hpp"
#include "core/types.hpp"

namespace test_support {

/// Self-deleting scratch directory under the system temp root.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("stam_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline stam::ShapeHistogram make_histogram(std::vector<std::uint32_t> counts,
                                           int bins_magnitude = 0, int bins_angle = 0,
                                           double r_max = 9.0) {
  stam::ShapeHistogram h;
  if (bins_magnitude == 0) {
    bins_magnitude = 1;
    bins_angle = static_cast<int>(counts.size());
  }
  h.bins_magnitude = bins_magnitude;
  h.bins_angle = bins_angle;
  h.r_max = r_max;
  h.counts = std::move(counts);
  return h;
}

inline stam::ShapeHistogram random_histogram(std::mt19937_64& rng, int bins,
                                             std::uint32_t max_count = 40) {
  std::uniform_int_distribution<std::uint32_t> dist(0, max_count);
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(bins));
  for (auto& c : counts) c = dist(rng);
  return make_histogram(std::move(counts), 1, bins);
}

inline stam::FlowField constant_flow(int width, int height, float u, float v) {
  stam::FlowField f;
  f.width = width;
  f.height = height;
  f.u.assign(static_cast<std::size_t>(width) * height, u);
  f.v.assign(static_cast<std::size_t>(width) * height, v);
  return f;
}

/// Standard normal upper-tail probability by adaptive Simpson quadrature of
/// the density; independent of the library's erfc-based path.
double normal_survival_oracle(double z);

/// Brute-force chi-square distance, written independently of the library
/// (index loop over both arrays, long double accumulation).
long double chi2_oracle(const std::vector<std::uint32_t>& p,
                        const std::vector<std::uint32_t>& q);

}  // namespace test_support
