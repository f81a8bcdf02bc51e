#pragma once

#include <map>
#include <string>
#include <vector>

#include "twinpipe/jsonio.hpp"

namespace twinpipe {

/// Synthetic scenario generator: three experiment shapes (pig respiration
/// chamber, salmon swim tunnel, mussel exposure) with planted, recorded
/// ground-truth relationships. Seed-deterministic down to the bytes of every
/// emitted file.
struct ScenarioConfig {
  enum class Kind { pig, salmon, mussel } kind = Kind::pig;
  std::int64_t duration_s = 0;  // 0 = per-kind default
  std::uint64_t seed = 1;
  double target_noise_sd = -1.0;  // <0 = per-kind default
  std::map<std::string, double> channel_noise_sd;  // missing keys = defaults
  double thermo_scale = 1.0;  // pig: scale of the nonlinear temperature effect
  int missing_cells = -1;     // <0 = per-kind default
  int outlier_spikes = -1;
  double volume_liters = 100.0;  // salmon respirometry
  double mass_kg = 2.0;
  std::string out_dir = ".";

  static ScenarioConfig defaults(Kind kind);
  static ScenarioConfig from_json(const json& doc);
  static ScenarioConfig load(const std::string& path);
  json to_json() const;

  static Kind kind_from_name(const std::string& name);
  const char* kind_name() const;
};

struct GeneratedScenario {
  std::vector<std::string> files;  // relative to out_dir, generation order
  json ground_truth;
};

/// Relative paths generate() will write for this config, in order.
std::vector<std::string> scenario_files(const ScenarioConfig& config);

GeneratedScenario generate(const ScenarioConfig& config);

}  // namespace twinpipe
