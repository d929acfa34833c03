#pragma once

#include <string>

#include "greensec/baselines.hpp"
#include "json.hpp"

namespace greensec {

// Versioned JSON run configuration.  Unknown keys are errors; every numeric
// invariant is checked before any compute, and messages name the offending
// field.  Randomized pieces (wildlife draws, experiment boxes) resolve to
// explicit values against the run seed so the stored manifest replays
// bit-for-bit.

struct RunConfig {
  ParkInstance park;
  NatureDomain domain;
  MirrorConfig mirror;
  int audit_points = 20;
  nlohmann::json resolved;  // fully-resolved snapshot for the manifest
};

RunConfig parse_run_config(const nlohmann::json& j, std::uint64_t seed);
RunConfig load_run_config(const std::string& path, std::uint64_t seed);

struct GridConfig {
  ExperimentConfig defaults;
  std::vector<ExperimentConfig> settings;
};

GridConfig load_grid_config(const std::string& path, std::uint64_t seed);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 1;
  nlohmann::json config;

  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);
};

// Shared with the CLI: strict key checking helpers.
void check_keys(const nlohmann::json& j, const std::string& path,
                std::initializer_list<const char*> allowed);

}  // namespace greensec
