#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "multistab/error.hpp"
#include "multistab/integrate.hpp"

using namespace multistab;

namespace {

VectorField decay() {
  return [](std::span<const double> s, std::span<double> ds) { ds[0] = -s[0]; };
}

VectorField harmonic() {
  return [](std::span<const double> s, std::span<double> ds) {
    ds[0] = s[1];
    ds[1] = -s[0];
  };
}

// Fixed-step DOPRI5 via an unbounded-tolerance stepper capped at h.
double fixed_step_error(double h) {
  Dopri5 st(harmonic(), 2, 1e3, 1e3);
  st.set_max_step(h);
  const double y0[2] = {1.0, 0.0};
  st.reset(0.0, y0, h);
  while (st.t() < 1.0 - 1e-14) st.step(1.0);
  return std::hypot(st.y()[0] - std::cos(1.0), st.y()[1] + std::sin(1.0));
}

}  // namespace

TEST_CASE("exponential decay to tolerance") {
  Eigen::VectorXd s0(1);
  s0 << 1.0;
  const auto s = advance(decay(), s0, 1.0, 1e-12, 1e-12);
  CHECK(std::abs(s[0] - std::exp(-1.0)) < 1e-10);
}

TEST_CASE("harmonic oscillator energy drift stays small") {
  Eigen::VectorXd s0(2);
  s0 << 1.0, 0.0;
  const auto s = advance(harmonic(), s0, 1000.0, 1e-10, 1e-10);
  CHECK(std::abs(s.squaredNorm() - 1.0) < 1e-6);
}

TEST_CASE("observed order of convergence is five") {
  const double e1 = fixed_step_error(0.1);
  const double e2 = fixed_step_error(0.05);
  const double order = std::log2(e1 / e2);
  CHECK(order == doctest::Approx(5.0).epsilon(0.3 / 5.0));
}

TEST_CASE("dense output reproduces the analytic solution inside a step") {
  Dopri5 st(harmonic(), 2, 1e-10, 1e-10);
  const double y0[2] = {1.0, 0.0};
  st.reset(0.0, y0);
  st.step(10.0);
  st.step(10.0);
  double out[2];
  const double tm = 0.5 * (st.t_prev() + st.t());
  st.dense(tm, out);
  CHECK(std::abs(out[0] - std::cos(tm)) < 1e-8);
  CHECK(std::abs(out[1] + std::sin(tm)) < 1e-8);
}

TEST_CASE("crossings of sin(t) land on multiples of pi") {
  Eigen::VectorXd s0(2);
  s0 << 0.0, 1.0;  // (sin, cos)
  auto section = [](std::span<const double> s) { return s[0]; };
  const auto up = locate_crossings(harmonic(), s0, 20.0, section, +1, 1e-11, 1e-11);
  REQUIRE(up.size() == 3);
  for (std::size_t k = 0; k < up.size(); ++k) {
    CHECK(std::abs(up[k].time - 2 * std::numbers::pi * (k + 1)) < 1e-8);
    CHECK(up[k].direction == 1);
  }
  const auto both = locate_crossings(harmonic(), s0, 20.0, section, 0, 1e-11, 1e-11);
  CHECK(both.size() == 6);
}

TEST_CASE("sampled integration is deterministic and on a uniform grid") {
  ModelParams p;
  NetworkSystem sys(p, CouplingConfig::pair(0.15));
  NetworkState s0(4);
  s0 << -20, 0.1, -70, 0.5;
  IntegrationSettings cfg;
  cfg.t_transient = 10;
  cfg.t_total = 60;
  cfg.sample_dt = 0.1;
  const auto a = integrate(sys, s0, cfg);
  const auto b = integrate(sys, s0, cfg);
  REQUIRE(a.size() == 501);
  CHECK(a.times.front() == doctest::Approx(10.0));
  CHECK(a.times.back() == doctest::Approx(60.0));
  CHECK(a.states == b.states);
  std::ostringstream oa, ob;
  write_trajectory_csv(oa, a);
  write_trajectory_csv(ob, b);
  CHECK(oa.str() == ob.str());
  CHECK(oa.str().rfind("t,x1,y1,x2,y2\n", 0) == 0);
}

TEST_CASE("settings validation and blow-up") {
  IntegrationSettings cfg;
  cfg.t_total = cfg.t_transient;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  VectorField blow = [](std::span<const double> s, std::span<double> ds) { ds[0] = s[0] * s[0]; };
  Eigen::VectorXd s0(1);
  s0 << 1.0;
  CHECK_THROWS_AS(advance(blow, s0, 2.0), NumericalError);
}
