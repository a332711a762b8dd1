#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "multistab/attractors.hpp"
#include "multistab/integrate.hpp"
#include "multistab/model.hpp"

namespace multistab {

inline constexpr int kSchemaVersion = 1;

struct CensusConfig {
  int n_ics = 1000;
  std::uint64_t seed = 1;
  IcBox box;
  double threshold = 0.05;
};

/// Everything a command needs besides its flags.
///
/// JSON keys: schema_version (required, must equal kSchemaVersion), model,
/// coupling (required; an object, or a path to a JSON file relative to the
/// config file), integration, census, outputs. Unknown keys anywhere are errors.
struct RunConfig {
  int schema_version = kSchemaVersion;
  ModelParams model;
  CouplingConfig coupling = CouplingConfig::pair(0.15);
  IntegrationSettings integration;
  CensusConfig census;
  std::string outputs = "out";

  void validate() const;
  /// Census options with this config's sampling and integration settings.
  CensusOptions census_options() const;
};

void to_json(nlohmann::json& j, const CensusConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);

/// Throws ConfigError with the offending key in the message.
RunConfig parse_run_config(const nlohmann::json& j,
                           const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

/// "a:b:step", inclusive of b up to rounding.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace multistab
