#pragma once

#include <string>
#include <vector>

namespace greensec {

// Entry point for the greensec tool (subcommands: fit, synth, run, grid,
// eval).  Returns the process exit code: 0 success, 2 bad arguments or
// config, 3 numerical failure, 1 anything else.
int cli_main(int argc, char** argv);
int cli_main(const std::vector<std::string>& args);  // convenience for tests

// Pieces shared between cmd_run and cmd_eval.
struct RunArtifacts {
  static constexpr const char* kManifest = "manifest.json";
  static constexpr const char* kEpochLog = "epoch_log.csv";
  static constexpr const char* kMixture = "mixture.csv";
  static constexpr const char* kNatureMixture = "nature_mixture.csv";
  static constexpr const char* kThetas = "thetas.csv";
  static constexpr const char* kRTable = "rtable.csv";
  static constexpr const char* kEval = "eval.csv";
  static constexpr const char* kCheckpointDir = "checkpoints";
};

}  // namespace greensec
