#include "multistab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "multistab/error.hpp"

namespace multistab {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

double number(const nlohmann::json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
  return j.at(key).get<double>();
}

// nlohmann's own type errors carry no field names; rethrow them as ConfigError.
template <typename T>
T convert(const nlohmann::json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (schema_version != kSchemaVersion)
    throw ConfigError("schema_version: expected " + std::to_string(kSchemaVersion) + ", got " +
                      std::to_string(schema_version));
  model.validate();
  coupling.validate();
  integration.validate();
  if (census.n_ics < 1) throw ConfigError("census.n_ics must be >= 1");
  if (!(census.threshold > 0.0)) throw ConfigError("census.threshold must be > 0");
  census.box.validate();
  if (outputs.empty()) throw ConfigError("outputs must be a non-empty path");
}

CensusOptions RunConfig::census_options() const {
  CensusOptions o;
  o.n_ics = census.n_ics;
  o.seed = census.seed;
  o.box = census.box;
  o.threshold = census.threshold;
  o.integration = integration;
  return o;
}

void to_json(nlohmann::json& j, const CensusConfig& c) {
  j = {{"n_ics", c.n_ics},
       {"seed", c.seed},
       {"box", {{"x_min", c.box.x_min}, {"x_max", c.box.x_max}, {"y_min", c.box.y_min},
                {"y_max", c.box.y_max}}},
       {"threshold", c.threshold}};
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"schema_version", c.schema_version},
       {"model", c.model},
       {"coupling", c.coupling},
       {"integration", c.integration},
       {"census", c.census},
       {"outputs", c.outputs}};
}

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"schema_version", "model", "coupling", "integration", "census", "outputs"},
                 "config");
  RunConfig c;
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer())
    throw ConfigError("schema_version: required integer field");
  c.schema_version = j.at("schema_version").get<int>();
  if (j.contains("model")) c.model = convert<ModelParams>(j.at("model"), "model");
  if (!j.contains("coupling")) throw ConfigError("coupling: required field");
  const auto& cj = j.at("coupling");
  c.coupling = cj.is_string()
                   ? convert<CouplingConfig>(read_json(base_dir / cj.get<std::string>()), "coupling")
                   : convert<CouplingConfig>(cj, "coupling");
  if (j.contains("integration"))
    c.integration = convert<IntegrationSettings>(j.at("integration"), "integration");
  if (j.contains("census")) {
    const auto& s = j.at("census");
    reject_unknown(s, {"n_ics", "seed", "box", "threshold"}, "census");
    if (s.contains("n_ics")) {
      if (!s.at("n_ics").is_number_integer()) throw ConfigError("census.n_ics must be an integer");
      c.census.n_ics = s.at("n_ics").get<int>();
    }
    if (s.contains("seed")) {
      const auto& v = s.at("seed");
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("census.seed must be a non-negative integer");
      c.census.seed = s.at("seed").get<std::uint64_t>();
    }
    c.census.threshold = number(s, "threshold", c.census.threshold, "census");
    if (s.contains("box")) {
      const auto& b = s.at("box");
      reject_unknown(b, {"x_min", "x_max", "y_min", "y_max"}, "census.box");
      auto& box = c.census.box;
      box.x_min = number(b, "x_min", box.x_min, "census.box");
      box.x_max = number(b, "x_max", box.x_max, "census.box");
      box.y_min = number(b, "y_min", box.y_min, "census.box");
      box.y_max = number(b, "y_max", box.y_max, "census.box");
    }
  }
  if (j.contains("outputs")) {
    if (!j.at("outputs").is_string()) throw ConfigError("outputs must be a string");
    c.outputs = j.at("outputs").get<std::string>();
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json(path), path.parent_path().empty() ? "." : path.parent_path());
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("grid '" + spec + "': '" + item + "' is not a number");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw ConfigError("grid '" + spec + "': expected a:b:step");
  const double a = parts[0], b = parts[1], h = parts[2];
  if (!(h > 0.0) || !(b >= a)) throw ConfigError("grid '" + spec + "': need step > 0 and b >= a");
  const long n = std::lround(std::floor((b - a) / h + 1e-9));
  std::vector<double> grid;
  for (long k = 0; k <= n; ++k) grid.push_back(std::round((a + k * h) * 1e12) / 1e12);
  return grid;
}

}  // namespace multistab
