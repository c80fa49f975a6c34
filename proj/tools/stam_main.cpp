// Command-line front end for the stam shared library. All work happens
// behind the C API; this file only parses arguments and maps statuses to
// exit codes (0 success, 1 input error, 2 internal error).

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stam/stam.h"

namespace {

int exit_code(stam_status status) {
  if (status == STAM_OK) return 0;
  return status == STAM_ERR_INTERNAL ? 2 : 1;
}

int finish(stam_status status, const char* verb) {
  if (status != STAM_OK)
    std::fprintf(stderr, "stam %s: %s: %s\n", verb, stam_status_name(status),
                 stam_last_error_message());
  return exit_code(status);
}

struct ConfigHandle {
  stam_config* ptr = nullptr;
  ~ConfigHandle() { stam_config_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stam - crowd-scene video anomaly detection toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<int> k_values;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    if (needs_config)
      cmd->add_option("--config", config_path, "run configuration file")->required();
    cmd->add_option("--threads", threads, "worker thread cap (default: hardware)");
  };

  CLI::App* flow = app.add_subcommand("flow", "estimate optical flow for frame sequences");
  add_common(flow);
  CLI::App* train = app.add_subcommand("train", "build the temporal model from training flows");
  add_common(train);
  CLI::App* detect = app.add_subcommand("detect", "detect anomalies in test sequences");
  add_common(detect);
  CLI::App* eval = app.add_subcommand("eval", "score detections against ground truth");
  add_common(eval);
  CLI::App* sweep = app.add_subcommand("sweep", "re-run detection across K values");
  add_common(sweep);
  sweep->add_option("--k", k_values, "K values (overrides [sweep] k_values)");
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene dataset");
  synth->add_option("--config", config_path, "scene spec file")->required();
  synth->add_option("--out", out_dir, "output dataset directory")->required();
  synth->add_option("--threads", threads, "worker thread cap (default: hardware)");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed())
    return finish(stam_run_synth(config_path.c_str(), out_dir.c_str(), threads), "synth");

  ConfigHandle config;
  if (const stam_status status = stam_config_load(config_path.c_str(), &config.ptr);
      status != STAM_OK)
    return finish(status, "config");

  if (flow->parsed()) return finish(stam_run_flow(config.ptr, threads), "flow");
  if (train->parsed()) return finish(stam_run_train(config.ptr, threads, nullptr), "train");
  if (detect->parsed()) return finish(stam_run_detect(config.ptr, threads), "detect");
  if (eval->parsed()) return finish(stam_run_eval(config.ptr, threads), "eval");
  if (sweep->parsed()) {
    std::vector<int32_t> ks(k_values.begin(), k_values.end());
    return finish(stam_run_sweep(config.ptr, ks.empty() ? nullptr : ks.data(), ks.size(),
                                 threads),
                  "sweep");
  }
  return 1;
}
