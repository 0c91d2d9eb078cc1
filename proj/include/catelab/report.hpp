#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "catelab/config.hpp"
#include "catelab/harness.hpp"

namespace catelab {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct RunOptions {
  std::filesystem::path out_dir;
  unsigned threads = 1;
};

struct ScenarioRecord {
  std::string name;
  std::uint64_t master_seed = 0;
  std::vector<std::string> files;  // relative to out_dir
  double duration_seconds = 0.0;
  std::string config_echo;  // re-parseable text form of the resolved config
  std::string error;        // non-empty when the scenario failed
};

struct RunManifest {
  std::string tool_version;
  std::vector<ScenarioRecord> scenarios;

  bool all_succeeded() const;
};

/// Runs every scenario and writes its artifacts under out_dir:
///
///   Linear:        <name>_scatter.csv, <name>_grid.csv (when a grid is
///                  configured), <name>_summary.json
///   Rct:           <name>_bins_x1.csv, <name>_bins_x2.csv, <name>_summary.json
///   AppendixSweep: <name>_appendix.csv, <name>_summary.json
///
/// plus manifest.json for the whole run. CSV numbers are written with 17
/// significant digits (exact double round-trip), so equal-seed runs produce
/// byte-identical CSVs at any thread count. Harness errors are recorded per
/// scenario; I/O failures clean up the partial file and abort with io_error.
RunManifest run_and_report(const std::vector<ScenarioConfig>& configs,
                           const RunOptions& options);

/// Formats one double exactly as the CSV writers do.
std::string format_csv_double(double value);

}  // namespace catelab
