#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "multistab/continuation.hpp"
#include "multistab/error.hpp"
#include "multistab/lyapunov.hpp"

using namespace multistab;

namespace {

PeriodicOrbit la_la_orbit(const CouplingConfig& c, const ModelParams& p = {}) {
  return find_orbit(fixtures::settle(fixtures::la_la_ic(), c), 0.0, p, c);
}

}  // namespace

TEST_CASE("shooting converges on the LA-LA orbit with a unit trivial multiplier") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  const auto orb = la_la_orbit(c);
  CHECK(orb.residual < 1e-8);
  CHECK(orb.period == doctest::Approx(1.203).epsilon(1e-3));
  CHECK(std::abs(orb.trivial_multiplier - 1.0) < 1e-6);
  CHECK(orb.multipliers.size() == 3);
  CHECK(orb.stable());
  CHECK(orb.amplitude_max == doctest::Approx(38.77).epsilon(1e-3));
}

TEST_CASE("Floquet exponents agree with Lyapunov exponents") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  const auto orb = la_la_orbit(c);
  LyapunovSettings cfg;
  cfg.t_average = 3000;
  const auto sp = spectrum(orb.anchor, 4, p, c, cfg);
  // Lyapunov exponents of a cycle: 0 and log|mu_k| / T
  std::vector<double> floquet = {0.0};
  for (const auto& m : orb.multipliers) floquet.push_back(std::log(std::abs(m)) / orb.period);
  std::sort(floquet.rbegin(), floquet.rend());
  for (int i = 0; i < 4; ++i) CHECK(std::abs(sp.exponents[i] - floquet[i]) < 5e-3);
}

TEST_CASE("stability agrees with forward integration for the LA-SA orbit") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  const auto orb = find_orbit(fixtures::settle(fixtures::la_sa_ic(), c), 0.0, p, c);
  CHECK(orb.stable());
  // a stable orbit attracts a perturbed anchor back onto itself
  NetworkState s = orb.anchor;
  s[1] += 1e-3;
  const auto after = fixtures::settle(s, c, 200);
  const auto samples = orbit_samples(orb, p, c, 0.001);
  double best = 1e9;
  for (Eigen::Index k = 0; k < samples.cols(); ++k)
    best = std::min(best, (samples.col(k) - after).cwiseAbs().maxCoeff());
  CHECK(best < 0.05);
}

TEST_CASE("continuation in eps detects the torus bifurcation of LA-LA") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  OrbitContinuationOptions opt;
  opt.stop_after_event = true;
  const auto br = continue_orbit(la_la_orbit(c), Parameter::Eps, 0.0, 0.35, 1e-3, p, c, opt);
  REQUIRE_FALSE(br.events.empty());
  CHECK(br.events[0].kind == BifurcationKind::Torus);
  CHECK(br.events[0].param_value == doctest::Approx(0.270070).epsilon(2e-5));
  // the event diagnostic is the modulus of the critical pair
  CHECK(std::abs(br.events[0].diagnostic - 1.0) < 1e-2);
  std::ostringstream os;
  write_events_csv(os, br.events);
  CHECK(os.str().rfind("kind,param,branch_id,diagnostic\n", 0) == 0);
}

TEST_CASE("shooting from an equilibrium collapses with an error") {
  ModelParams p;
  NetworkState node(2);
  node << -64.651979, 0.00036;
  CHECK_THROWS_AS(find_orbit(node, 0.0, p, CouplingConfig::single()), NumericalError);
}
