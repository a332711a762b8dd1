#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "multistab/attractors.hpp"
#include "multistab/error.hpp"

using namespace multistab;

namespace {

FeatureVector make_features(double amp0, double amp1, double jitter = 0.0) {
  FeatureVector f;
  f.mean_pairwise_distance = std::abs(amp0 - amp1) + jitter;
  f.per_unit_amplitude = {amp0 + jitter, amp1};
  f.per_unit_frequency = {amp0 > 1 ? 0.8 : 0.0, amp1 > 1 ? 0.8 : 0.0};
  f.per_unit_mean = {-64.6 + jitter, 0.0004, -64.6, 0.0004};
  return f;
}

CensusOptions quick_census() {
  CensusOptions o;
  o.n_ics = 24;
  o.seed = 11;
  o.integration.t_transient = 800;
  o.integration.t_total = 1300;
  o.compute_lyapunov = false;
  return o;
}

}  // namespace

TEST_CASE("sampled ICs are reproducible and fill the box") {
  const auto a = sample_ics(2, 4000, 42);
  const auto b = sample_ics(2, 4000, 42);
  const auto c = sample_ics(2, 4000, 43);
  REQUIRE(a.size() == 4000);
  CHECK(a[17] == b[17]);
  CHECK(a[17] != c[17]);
  double mx = 0, my = 0;
  for (const auto& s : a) {
    CHECK(s[0] >= -90);
    CHECK(s[0] <= 20);
    CHECK(s[3] >= 0);
    CHECK(s[3] <= 1);
    mx += s[0] + s[2];
    my += s[1] + s[3];
  }
  CHECK(mx / 8000 == doctest::Approx(-35).epsilon(0.03));
  CHECK(my / 8000 == doctest::Approx(0.5).epsilon(0.03));
  IcBox bad;
  bad.x_max = bad.x_min;
  CHECK_THROWS_AS(sample_ics(2, 5, 1, bad), ConfigError);
}

TEST_CASE("grouping merges jittered copies and separates distinct features") {
  std::vector<FeatureVector> same;
  for (int k = 0; k < 5; ++k) same.push_back(make_features(0.0, 0.0, 1e-12 * k));
  const auto g = group(same);
  CHECK(std::set<int>(g.begin(), g.end()).size() == 1);

  std::vector<FeatureVector> mixed = {make_features(0, 0), make_features(40, 1.4),
                                      make_features(1.4, 40), make_features(0, 0, 1e-9),
                                      make_features(38.8, 38.8)};
  const auto h = group(mixed);
  CHECK(h == std::vector<int>{0, 1, 2, 0, 3});
}

TEST_CASE("featurize reports amplitude, frequency and labels") {
  Trajectory tr;
  const int n = 2000;
  tr.states.resize(4, n);
  for (int k = 0; k < n; ++k) {
    const double t = 0.01 * k;
    tr.times.push_back(t);
    tr.states.col(k) << -40 + 30 * std::sin(2 * M_PI * t), 0.3, -64.0, 0.0;
  }
  const auto f = featurize(tr);
  CHECK(f.per_unit_amplitude[0] == doctest::Approx(60).epsilon(1e-3));
  CHECK(f.per_unit_amplitude[1] == 0.0);
  CHECK(f.per_unit_frequency[0] == doctest::Approx(1.0).epsilon(0.06));
  CHECK(f.per_unit_frequency[1] == 0.0);
  CHECK(amplitude_label(f) == "LA-SS");
  CHECK(f.flatten().size() == 9);

  Trajectory tiny = tr;
  tiny.times.resize(50);
  tiny.states.conservativeResize(4, 50);
  CHECK_THROWS_AS(featurize(tiny), ConfigError);
}

TEST_CASE("census finds the four coexisting attractors at eps = 0.15") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  // seeded ICs plus states already on known attractors
  auto ics = sample_ics(2, 24, 11);
  ics.push_back(fixtures::la_la_ic());
  ics.push_back(fixtures::la_sa_ic());
  NetworkState as_ic(4);
  as_ic << -64.0, 0.0, -27.0, 0.39;
  ics.push_back(as_ic);
  const auto r = census_at(p, c, ics, quick_census());
  std::multiset<std::string> labels;
  for (const auto& a : r.attractors) labels.insert(a.label);
  CHECK(labels == std::multiset<std::string>{"SS-SS", "LA-LA", "LA-SA", "SA-LA"});
  int total = 0;
  for (const auto& a : r.attractors) total += a.basin_count;
  CHECK(total == r.n_ics - r.n_diverged);
}

TEST_CASE("census is deterministic, worker-independent and permutation invariant") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  auto opt = quick_census();
  const auto ics = sample_ics(2, opt.n_ics, opt.seed);
  const auto a = census_at(p, c, ics, opt);
  opt.workers = 4;
  const auto b = census_at(p, c, ics, opt);
  CHECK(a.ic_group == b.ic_group);
  std::ostringstream sa, sb;
  write_census_csv(sa, a);
  write_census_csv(sb, b);
  CHECK(sa.str() == sb.str());

  // swapping unit indices in every IC maps each attractor onto its mirror image
  std::vector<NetworkState> swapped;
  for (const auto& s : ics) {
    NetworkState t(4);
    t << s[2], s[3], s[0], s[1];
    swapped.push_back(t);
  }
  const auto m = census_at(p, c, swapped, opt);
  REQUIRE(m.n_attractors() == a.n_attractors());
  std::multiset<std::string> la, lm;
  for (const auto& r : a.attractors) {
    std::string l = r.label;
    la.insert(l.substr(3) + "-" + l.substr(0, 2));
  }
  for (const auto& r : m.attractors) lm.insert(r.label);
  CHECK(la == lm);
}

TEST_CASE("Spearman correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 1, 2}, {3, 3, 1}) == doctest::Approx(-1.0));
  CHECK(std::isnan(spearman({1}, {2})));
  CHECK(std::isnan(spearman({1, 1, 1}, {1, 2, 3})));
}

TEST_CASE("degree-amplitude rows cover solitary states only") {
  CouplingConfig c(3, {{0, 1}, {1, 2}}, 0.1, 0.1);
  AttractorRecord solo, both;
  solo.group_id = 0;
  solo.features.per_unit_amplitude = {40.0, 2.0, 0.1};
  both.group_id = 1;
  both.features.per_unit_amplitude = {40.0, 35.0, 0.1};
  AttractorRecord mid;
  mid.group_id = 2;
  mid.features.per_unit_amplitude = {0.0, 30.0, 0.1};
  const auto r = degree_amplitude_report({solo, both, mid}, c);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].unit == 0);
  CHECK(r.rows[0].degree == 1);
  CHECK(r.rows[1].degree == 2);
  CHECK(r.rank_correlation == doctest::Approx(-1.0));
}
