#ifndef EVOLAB_RUNNER_HPP
#define EVOLAB_RUNNER_HPP

#include "evolab/config.hpp"
#include "evolab/report.hpp"

#include <string>
#include <vector>

namespace evolab {

/// Everything that determines the numbers of a run. The output directory
/// is <out>/<hash>, where the hash covers every field except out and timestamp.
struct RunManifest {
  std::string config_path;
  std::uint64_t config_hash = 0;
  std::vector<std::string> checks = {"gradient", "harnack", "kernel_lsi", "invariance"};
  std::int64_t samples = 20000;
  std::uint64_t seed = 1;
  double step = 1e-2;
  /// 0 means 10/|r0|.
  double burn_in = 0.0;
  std::string family = "standard";
  std::vector<double> delta_grid = {0.25, 1.0};
  bool oracle = false;
  std::string out = "evolab-out";
  std::string timestamp;

  /// Canonical JSON without out and timestamp.
  std::string canonical_json() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

struct CheckInfo {
  std::string name;
  std::string needs;
  std::string description;
};
std::vector<CheckInfo> available_checks();

struct RunResult {
  int exit_code = 0;
  std::string directory;
  std::vector<InequalityReport> reports;
  std::string diagnostic;
};

inline constexpr int kExitClean = 0;
inline constexpr int kExitFail = 2;
inline constexpr int kExitInconclusive = 3;
inline constexpr int kExitConfig = 64;
inline constexpr int kExitRuntime = 70;

/// Loads the config, runs the checks and writes the artifact set.
/// Never throws for library errors; they map to exit codes 64 and 70.
RunResult run(RunManifest manifest, bool force = false);

struct PlotData {
  std::string file;
  std::string header;
  std::vector<double> x;
  std::vector<double> y;
};

/// Everything a run writes, before it is written.
struct Artifacts {
  std::vector<InequalityReport> reports;
  std::vector<std::pair<std::string, McEstimate>> estimates;
  std::vector<PlotData> plots;
  std::vector<std::pair<std::string, EmpiricalMeasure>> measures;
};

/// Runs the checks without touching the filesystem. Library errors propagate.
Artifacts run_checks(const RunManifest& manifest, const LoadedConfig& config);

/// Throws RegimeMismatch or ConfigError when a selected check cannot run on this config.
void check_compatibility(const RunManifest& manifest, const LoadedConfig& config);

}  // namespace evolab

#endif  // EVOLAB_RUNNER_HPP
