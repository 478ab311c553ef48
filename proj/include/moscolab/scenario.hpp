#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace moscolab {

inline constexpr const char* kArtifactVersion = "mosco-lab 0.1.0";

struct RunOptions {
  std::string out_dir;                 // overrides the config's "out"
  std::optional<std::uint64_t> seed;   // overrides the config's "seed"
  int threads = 1;                     // 0 = hardware concurrency
  std::string experiment;              // overrides the config's "experiment"
};

struct RunManifest {
  std::string artifact = kArtifactVersion;
  std::string experiment;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir;
  std::vector<std::string> outputs;             // file names relative to out_dir
  std::map<std::string, std::int64_t> timings_ms;
  nlohmann::json config_echo;

  nlohmann::json to_json() const;
};

/// Loads a scenario config, runs the selected experiment, writes its outputs
/// plus manifest.json into the output directory and returns the manifest.
RunManifest run_scenario(const std::string& config_path, const RunOptions& options);

/// Runs the Cartesian product of the config's "sweep" grid (axes in
/// alphabetical key order, row-major), one experiment per combination under
/// combo_NNN/ subdirectories, and writes a combined sweep.csv plus a shared
/// manifest.
RunManifest run_sweep(const std::string& config_path, const RunOptions& options);

}  // namespace moscolab
