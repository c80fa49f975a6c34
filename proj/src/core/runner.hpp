#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "core/evaluation.hpp"
#include "core/run_config.hpp"
#include "core/synth.hpp"

namespace stam {

/// Pipeline commands backing the CLI verbs. Every command is deterministic
/// given its config and inputs, independent of the thread count; reruns
/// produce byte-identical outputs. `log` may be null to silence progress
/// and summary output.

/// Estimate flows for every consecutive frame pair under frames_dir and
/// write them as .flo files under flows_dir (mirroring per-sequence
/// subdirectories when present).
void run_flow(const RunConfig& cfg, int threads = 0, std::ostream* log = nullptr);

/// Build the temporal model from all training sequences under flows_dir and
/// save it to model_file. Returns the trained model.
TemporalModel run_train(const RunConfig& cfg, int threads = 0, std::ostream* log = nullptr);

/// Detect over all test sequences under flows_dir using model_file; write
/// per-frame detection masks and a scores CSV per sequence into output_dir.
void run_detect(const RunConfig& cfg, int threads = 0, std::ostream* log = nullptr);

/// Score the detections in output_dir against the ground truth; write
/// metrics.csv (threshold sweep + AUC/EER summary) and events.csv.
void run_eval(const RunConfig& cfg, int threads = 0, std::ostream* log = nullptr);

/// Re-run detection for each K and report frame/pixel EER per K into
/// sweep.csv under output_dir.
void run_sweep(const RunConfig& cfg, const std::vector<int>& k_values, int threads = 0,
               std::ostream* log = nullptr);

/// Generate a synthetic scene dataset (flows/, masks/, index.csv,
/// events.csv) under out_dir.
void run_synth(const std::filesystem::path& scene_file, const std::filesystem::path& out_dir,
               int threads = 0, std::ostream* log = nullptr);

/// Sorted .flo paths of one sequence directory.
std::vector<std::filesystem::path> list_flow_files(const std::filesystem::path& dir);

/// Sequence layout under a root: either loose files (one unnamed sequence)
/// or one subdirectory per sequence.
struct SequenceSet {
  struct Entry {
    std::string name;  // empty for the single unnamed sequence
    std::filesystem::path dir;
  };
  std::vector<Entry> sequences;
};
SequenceSet discover_sequences(const std::filesystem::path& root, const std::string& extension);

/// Ground truth loaded from the interchange files (index CSV, events CSV,
/// per-frame mask PGMs).
GroundTruth load_ground_truth(const std::optional<std::filesystem::path>& index_file,
                              const std::optional<std::filesystem::path>& masks_dir,
                              const std::optional<std::filesystem::path>& events_file,
                              int frame_count_hint = 0);

/// Detection series reconstructed from one sequence's scores.csv.
DetectionSeries load_detection_series(const std::filesystem::path& scores_csv,
                                      const RunConfig& cfg);

}  // namespace stam
