#pragma once

#include <stdexcept>
#include <string>

namespace stam {

/// Fine-grained failure kinds surfaced by the core. The C API collapses
/// these onto its public status codes; the CLI maps them onto exit codes.
enum class Err {
  io_failure,
  bad_magic,
  truncated,
  non_finite,
  bad_header,
  bad_version,
  dimension_mismatch,
  invalid_patch_size,
  bin_count_mismatch,
  pool_too_small,
  degenerate_k,
  empty_training,
  insufficient_history,
  geometry_mismatch,
  invalid_spec,
  config_error,
  missing_mask,
  no_abnormal_frames,
  no_normal_frames,
  degenerate_scores,
  internal,
};

class Error : public std::runtime_error {
public:
  Error(Err code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Err code() const noexcept { return code_; }

  /// True for failures caused by the caller's inputs (bad files, bad
  /// config, missing data) as opposed to broken internal invariants.
  bool is_input_error() const noexcept { return code_ != Err::internal; }

private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, std::string message) {
  throw Error(code, std::move(message));
}

inline const char* err_name(Err code) {
  switch (code) {
    case Err::io_failure: return "io_failure";
    case Err::bad_magic: return "bad_magic";
    case Err::truncated: return "truncated";
    case Err::non_finite: return "non_finite";
    case Err::bad_header: return "bad_header";
    case Err::bad_version: return "bad_version";
    case Err::dimension_mismatch: return "dimension_mismatch";
    case Err::invalid_patch_size: return "invalid_patch_size";
    case Err::bin_count_mismatch: return "bin_count_mismatch";
    case Err::pool_too_small: return "pool_too_small";
    case Err::degenerate_k: return "degenerate_k";
    case Err::empty_training: return "empty_training";
    case Err::insufficient_history: return "insufficient_history";
    case Err::geometry_mismatch: return "geometry_mismatch";
    case Err::invalid_spec: return "invalid_spec";
    case Err::config_error: return "config_error";
    case Err::missing_mask: return "missing_mask";
    case Err::no_abnormal_frames: return "no_abnormal_frames";
    case Err::no_normal_frames: return "no_normal_frames";
    case Err::degenerate_scores: return "degenerate_scores";
    case Err::internal: return "internal";
  }
  return "unknown";
}

}  // namespace stam
