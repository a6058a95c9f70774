#pragma once

#include <optional>
#include <string>

#include "ipcae/data.hpp"
#include "ipcae/training.hpp"

namespace ipcae {

/// Where a run's data comes from: a CSV file or a synthetic spec.
struct DataSource {
  std::optional<std::string> path;
  std::optional<std::string> label_name;
  std::optional<std::size_t> label_index;
  std::optional<SyntheticSpec> synthetic;
};

/// Parsed run configuration file (config schema documented in the README).
/// Unknown keys anywhere in the document are rejected.
struct RunConfig {
  TrainConfig train;
  DataSource source;
  std::string out_dir = "out";
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

/// Full echo with every default materialized; parsing the echo reproduces
/// the config exactly.
std::string run_config_json(const RunConfig& cfg);

/// Loads the CSV or generates the synthetic dataset (raw: no splits yet).
Dataset load_source(const DataSource& src);

/// Standalone synthetic spec file for gen-synth: a flat JSON object with
/// task, n, d, k_true and the optional classes/planted/sigma/separation/seed.
SyntheticSpec load_synth_spec(const std::string& path);

}  // namespace ipcae
