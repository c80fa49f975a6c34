#pragma once

#include <filesystem>
#include <string>

#include "core/types.hpp"

namespace stam {

/// Middlebury .flo layout: float32 magic 202021.25, int32 width, int32
/// height, then height*width interleaved (u,v) float32 pairs, row-major,
/// all little-endian.
inline constexpr float kFloMagic = 202021.25f;

FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& field, const std::filesystem::path& path);

/// Binary PGM ("P5"), maxval 255. Comments (# ...) in the header are accepted.
Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const Frame& frame, const std::filesystem::path& path);

struct FlowEstimatorConfig {
  int iterations = 100;
  double alpha = 15.0;   // smoothness weight
  double clamp = 32.0;   // output magnitude bound per component
  int threads = 0;       // <=0: hardware concurrency
};

/// Dense optical flow between two frames via Horn-Schunck with a fixed
/// Jacobi iteration count. Deterministic for a fixed config, independent
/// of the thread count.
FlowField estimate_flow(const Frame& prev, const Frame& next,
                        const FlowEstimatorConfig& cfg = {});

}  // namespace stam
