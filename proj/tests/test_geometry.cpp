#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "multistab/continuation.hpp"
#include "multistab/geometry.hpp"

using namespace multistab;

namespace {

const std::array<ManifoldPolyline, 4>& manifolds() {
  static const auto m = saddle_manifolds(ModelParams{});
  return m;
}

double distance_to(const ManifoldPolyline& m, const Eigen::Vector2d& q) {
  double best = 1e9;
  for (std::size_t k = 1; k < m.points.size(); ++k) {
    const Eigen::Vector2d a = m.points[k - 1], b = m.points[k];
    const double t = std::clamp((q - a).dot(b - a) / std::max((b - a).squaredNorm(), 1e-300), 0.0, 1.0);
    best = std::min(best, (a + t * (b - a) - q).norm());
  }
  return best;
}

Trajectory unit_trajectory(const NetworkState& s0, const CouplingConfig& c, double t_total,
                           double dt = 0.005) {
  IntegrationSettings is;
  is.t_transient = 0;
  is.t_total = t_total;
  is.sample_dt = dt;
  return integrate(NetworkSystem(ModelParams{}, c), s0, is);
}

}  // namespace

TEST_CASE("branches start along the saddle eigenvectors") {
  ModelParams p;
  const auto& m = manifolds();
  const Eigen::Matrix2d j = Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>>(
      local_jacobian(m[0].saddle.x(), m[0].saddle.y(), p).data());
  Eigen::EigenSolver<Eigen::Matrix2d> es(j);
  for (const auto& b : m) {
    REQUIRE(b.points.size() > 2);
    const int idx = (es.eigenvalues()[0].real() < 0) == b.stable() ? 0 : 1;
    const Eigen::Vector2d v = es.eigenvectors().col(idx).real().normalized();
    const Eigen::Vector2d d = (b.points[1] - b.saddle).normalized();
    CHECK(std::abs(std::abs(v.dot(d)) - 1.0) < 1e-6);
    CHECK(b.cumulative.back() == doctest::Approx(b.arclength));
  }
  CHECK(m[0].points[1].x() > m[0].saddle.x());
  CHECK(m[1].points[1].x() < m[1].saddle.x());
}

TEST_CASE("polyline spacing respects the near/far limits") {
  ManifoldOptions opt;
  for (const auto& b : manifolds()) {
    for (std::size_t k = 1; k < b.points.size(); ++k) {
      const double ds = (b.points[k] - b.points[k - 1]).norm();
      const bool near = (b.points[k - 1] - b.saddle).norm() < opt.near_radius;
      CHECK(ds <= (near ? opt.ds_near : opt.ds_far) * 1.001);
    }
  }
}

TEST_CASE("manifolds are invariant under the flow") {
  ModelParams p;
  const auto& m = manifolds();
  NetworkSystem sys(p, CouplingConfig::single());
  // unstable branches forward, stable branches backward
  for (const auto& b : m) {
    const double sign = b.stable() ? -1.0 : 1.0;
    VectorField f = [&](std::span<const double> s, std::span<double> ds) {
      sys.rhs(s, ds);
      ds[0] *= sign;
      ds[1] *= sign;
    };
    for (std::size_t k : {b.points.size() / 4, b.points.size() / 2}) {
      Eigen::VectorXd s0(2);
      s0 << b.points[k].x(), b.points[k].y();
      const auto s = advance(f, s0, 0.05, 1e-11, 1e-11);
      CHECK(distance_to(b, s) < 1e-3);
    }
  }
}

TEST_CASE("unstable branches both end on the node") {
  for (int k : {2, 3}) {
    const auto& q = manifolds()[k].points.back();
    CHECK(q.x() == doctest::Approx(-64.652).epsilon(1e-4));
  }
}

TEST_CASE("no crossings without coupling") {
  const auto c = CouplingConfig::pair(0.0);
  NetworkState s0(4);
  s0 << -56.0, 0.0, -58.0, 0.003;
  const auto tr = unit_trajectory(s0, c, 50);
  for (int u = 0; u < 2; ++u)
    for (const auto& b : manifolds())
      if (b.stable()) CHECK(reinjection_events(tr, b, u, ModelParams{}, c).empty());
}

TEST_CASE("LA-LA crossings: once per period, reversible, half a period apart") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  const auto orb = find_orbit(fixtures::settle(fixtures::la_la_ic(), c), 0.0, p, c);
  const auto tr = unit_trajectory(orb.anchor, c, 10 * orb.period);
  const auto& ws = manifolds()[0];
  const auto e0 = reinjection_events(tr, ws, 0, p, c);
  const auto e1 = reinjection_events(tr, ws, 1, p, c);
  CHECK(e0.size() == 10);
  CHECK(e1.size() == 10);
  for (const auto& e : e0) CHECK(e.direction == 1);
  CHECK(reinjection_events(tr, manifolds()[1], 0, p, c).empty());
  if (!e0.empty() && !e1.empty()) {
    const double shift = std::fmod(std::abs(e1[0].time - e0[0].time), orb.period);
    CHECK(std::abs(shift - 0.5 * orb.period) < 0.01 * orb.period);
    CHECK(e0[0].arclength == doctest::Approx(e1[0].arclength).epsilon(1e-3));
  }

  Trajectory rev = tr;
  const auto n = static_cast<Eigen::Index>(tr.size());
  for (Eigen::Index k = 0; k < n; ++k) rev.states.col(k) = tr.states.col(n - 1 - k);
  const auto r0 = reinjection_events(rev, ws, 0, p, c);
  REQUIRE(r0.size() == e0.size());
  for (const auto& e : r0) CHECK(e.direction == -1);
}

TEST_CASE("coupling field is zero on the synchronized manifold and linear in eps") {
  ModelParams p;
  NetworkState s0(4);
  s0 << -30.0, 0.2, -30.0, 0.2;
  const auto c = CouplingConfig::pair(0.2);
  const auto tr = unit_trajectory(s0, c, 5, 0.01);
  for (const auto& f : coupling_field_along(tr, 0, 7, p, c)) CHECK(f.coupling.norm() == 0.0);

  NetworkState s1(4);
  s1 << -30.0, 0.2, -60.0, 0.1;
  const auto ta = unit_trajectory(s1, CouplingConfig::pair(0.0), 1, 0.01);
  const auto fa = coupling_field_along(ta, 1, 10, p, CouplingConfig::pair(0.1));
  const auto fb = coupling_field_along(ta, 1, 10, p, CouplingConfig::pair(0.3));
  REQUIRE(fa.size() == fb.size());
  CHECK(fa.size() == 11);
  for (std::size_t k = 0; k < fa.size(); ++k)
    CHECK((fb[k].coupling - 3.0 * fa[k].coupling).norm() < 1e-12 * (1 + fb[k].coupling.norm()));
}
