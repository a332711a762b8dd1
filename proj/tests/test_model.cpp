#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "multistab/error.hpp"
#include "multistab/model.hpp"

using namespace multistab;

namespace {

Matrix fd_jacobian(const NetworkState& s, const ModelParams& p, const CouplingConfig& c) {
  const int d = static_cast<int>(s.size());
  Matrix j(d, d);
  for (int k = 0; k < d; ++k) {
    // central difference; x is O(10-100), y is O(1)
    const double h = (k % 2 == 0) ? 1e-5 : 1e-7;
    NetworkState a = s, b = s;
    a[k] += h;
    b[k] -= h;
    j.col(k) = (network_rhs(a, p, c) - network_rhs(b, p, c)) / (2 * h);
  }
  return j;
}

NetworkState random_state(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(-90, 20), uy(0, 1);
  NetworkState s(2 * n);
  for (int i = 0; i < n; ++i) {
    s[2 * i] = ux(rng);
    s[2 * i + 1] = uy(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("activation is a logistic with half-activation at half") {
  CHECK(activation(-20.0, -20.0, 15.0) == doctest::Approx(0.5));
  CHECK(activation(-25.0, -25.0, 5.0) == doctest::Approx(0.5));
  CHECK(activation(-10.0, -20.0, 15.0) == doctest::Approx(0.6607563687658172).epsilon(1e-14));
  CHECK(activation(1e4, -20.0, 15.0) == doctest::Approx(1.0));
  CHECK(activation(-1e4, -20.0, 15.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(activation(0.0, -20.0, 0.0), ConfigError);
  CHECK_THROWS_AS(activation(NAN, -20.0, 15.0), NumericalError);
}

TEST_CASE("local_rhs at a hand-checked point") {
  ModelParams p;
  // x = -20: m_inf = 0.5, n_inf(-20) = 1/(1+e^-1)
  const double ninf = 1.0 / (1.0 + std::exp(-1.0));
  const auto f = local_rhs(-20.0, 0.3, p);
  const double dx = p.current - p.g_leak * (-20 + 80) - p.g_na * 0.5 * (-20 - 60) -
                    p.g_k * 0.3 * (-20 + 90);
  CHECK(f.dx == doctest::Approx(dx));
  CHECK(f.dy == doctest::Approx((ninf - 0.3) / p.tau));
}

TEST_CASE("network Jacobian matches central differences") {
  ModelParams p;
  std::mt19937_64 rng(7);
  for (const auto& c : {CouplingConfig::single(), CouplingConfig::pair(0.15),
                        CouplingConfig::all_to_all(4, 0.3)}) {
    for (int trial = 0; trial < 20; ++trial) {
      const NetworkState s = random_state(c.n_units(), rng);
      const Matrix a = network_jacobian(s, p, c);
      const Matrix b = fd_jacobian(s, p, c);
      const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
      CHECK((a - b).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
  }
}

TEST_CASE("matrix-free products agree with the dense Jacobian") {
  ModelParams p;
  CouplingConfig c(3, {{0, 1}, {1, 2}}, 0.2, 0.1);
  c.set_edge_override(0, 1, 0.4);
  NetworkSystem sys(p, c);
  std::mt19937_64 rng(3);
  const NetworkState s = random_state(3, rng);
  const std::span<const double> ss(s.data(), 6);
  Matrix j;
  sys.jacobian(ss, j);
  CHECK(sys.jacobian_trace(ss) == doctest::Approx(j.trace()).epsilon(1e-12));

  const int k = 3;
  Eigen::MatrixXd v = Eigen::MatrixXd::Random(6, k);
  Eigen::MatrixXd out(6, k);
  sys.jacobian_times_block(ss, {v.data(), static_cast<std::size_t>(v.size())},
                           {out.data(), static_cast<std::size_t>(out.size())}, k);
  CHECK((out - j * v).norm() < 1e-10 * (1 + (j * v).norm()));

  Eigen::VectorXd w = v.col(0), jw(6);
  sys.jacobian_times(ss, {w.data(), 6}, {jw.data(), 6});
  CHECK((jw - j * w).norm() < 1e-10 * (1 + jw.norm()));
}

TEST_CASE("coupling vanishes on synchronized states and is antisymmetric in pairs") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.2);
  NetworkState s(4);
  s << -50, 0.2, -50, 0.2;
  auto h = c.coupling_term({s.data(), 4}, 0);
  CHECK(h.dx == 0.0);
  CHECK(h.dy == 0.0);
  s << -50, 0.2, -30, 0.5;
  const auto h0 = c.coupling_term({s.data(), 4}, 0);
  const auto h1 = c.coupling_term({s.data(), 4}, 1);
  CHECK(h0.dx == doctest::Approx(0.2 * 20));
  CHECK(h0.dx == doctest::Approx(-h1.dx));
  CHECK(h0.dy == doctest::Approx(-h1.dy));
}

TEST_CASE("parameter validation names the field") {
  ModelParams p;
  p.tau = -1;
  try {
    p.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("tau") != std::string::npos);
  }
  CHECK_THROWS_AS(CouplingConfig(2, {{0, 1}}, -0.1, 0.1).validate(), ConfigError);
  CHECK_THROWS_AS(CouplingConfig(2, {{0, 2}}, 0.1, 0.1), ConfigError);
  CHECK_THROWS_AS(check_state(NetworkState::Zero(3), CouplingConfig::pair(0.1)), ConfigError);
}

TEST_CASE("JSON round trip and unknown keys") {
  CouplingConfig c(3, {{0, 1}, {1, 2}}, 0.2, 0.1);
  c.set_edge_override(1, 2, 0.05);
  nlohmann::json j = c;
  CHECK(j["adjacency"][0] == nlohmann::json::array({1, 2}));
  const auto back = j.get<CouplingConfig>();
  CHECK(back.edges() == c.edges());
  CHECK(back.strength(2, 1).first == doctest::Approx(0.05));

  nlohmann::json m = ModelParams{};
  m["bogus"] = 1;
  CHECK_THROWS_AS(m.get<ModelParams>(), ConfigError);
  nlohmann::json bad = {{"n_units", 2}, {"adjacency", {{1, 2}}}, {"eps_x", -0.1}};
  try {
    bad.get<CouplingConfig>();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("eps_x") != std::string::npos);
  }
}
