#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "multistab/config.hpp"
#include "multistab/error.hpp"

using namespace multistab;
using nlohmann::json;

namespace {

json minimal() {
  return {{"schema_version", 1},
          {"coupling", {{"n_units", 2}, {"adjacency", {{1, 2}}}, {"eps_x", 0.1}, {"eps_y", 0.1}}}};
}

std::string error_of(const json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const auto c = parse_run_config(minimal());
  CHECK(c.coupling.n_units() == 2);
  CHECK(c.model.tau == 0.16);
  CHECK(c.integration.t_transient == 7000.0);
  CHECK(c.census.n_ics == 1000);
  const auto o = c.census_options();
  CHECK(o.seed == 1);
}

TEST_CASE("round trip through JSON") {
  auto j = minimal();
  j["census"] = {{"n_ics", 17}, {"seed", 99}, {"box", {{"x_min", -80}}}};
  j["integration"] = {{"t_total", 9000}};
  const auto c = parse_run_config(j);
  const json echo = c;
  const auto back = parse_run_config(echo);
  CHECK(back.census.n_ics == 17);
  CHECK(back.census.seed == 99);
  CHECK(back.census.box.x_min == -80);
  CHECK(back.integration.t_total == 9000);
  CHECK(json(back) == echo);
}

TEST_CASE("errors name the offending field") {
  auto j = minimal();
  j["extra"] = true;
  CHECK(error_of(j).find("extra") != std::string::npos);

  j = minimal();
  j["census"] = {{"n_icz", 3}};
  CHECK(error_of(j).find("n_icz") != std::string::npos);

  j = minimal();
  j["coupling"]["eps_x"] = -0.2;
  CHECK(error_of(j).find("eps_x") != std::string::npos);

  j = minimal();
  j["schema_version"] = 7;
  CHECK(error_of(j).find("schema_version") != std::string::npos);

  j = minimal();
  j.erase("schema_version");
  CHECK(error_of(j).find("schema_version") != std::string::npos);

  j = minimal();
  j["model"] = {{"g_na", "twenty"}};
  CHECK(error_of(j).find("g_na") != std::string::npos);
}

TEST_CASE("coupling may live in a separate file") {
  const auto dir = std::filesystem::temp_directory_path() / "multistab_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "topo.json") << minimal()["coupling"].dump();
    auto j = minimal();
    j["coupling"] = "topo.json";
    std::ofstream(dir / "run.json") << j.dump();
  }
  const auto c = load_run_config(dir / "run.json");
  CHECK(c.coupling.edges().size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("grid parsing") {
  const auto g = parse_grid("0.05:0.35:0.01");
  REQUIRE(g.size() == 31);
  CHECK(g[1] == 0.06);
  CHECK(g.back() == doctest::Approx(0.35));
  CHECK(parse_grid("0.2") == std::vector<double>{0.2});
  CHECK_THROWS_AS(parse_grid("0.1:0.2"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0.3:0.2:0.1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("a:b:c"), ConfigError);
}
