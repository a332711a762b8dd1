#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "fixtures.hpp"
#include "multistab/attractors.hpp"
#include "multistab/equilibria.hpp"
#include "multistab/lyapunov.hpp"

using namespace multistab;

TEST_CASE("orthonormalize returns the R diagonal of a QR factorization") {
  for (int k : {3, 6}) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(8, k);
    Eigen::MatrixXd q = a;
    const Eigen::VectorXd r = orthonormalize(q);
    CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-12);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::VectorXd ref = qr.matrixQR().diagonal().cwiseAbs().head(k);
    CHECK((r - ref).norm() < 1e-10);
    CHECK((r.array() > 0).all());
  }
}

TEST_CASE("exponents at a stable node equal the eigenvalue real parts") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.05);
  const auto eqs = enumerate(p, c);
  const auto& nn = eqs.front();
  REQUIRE(nn.class_label == "node-node");
  LyapunovSettings cfg;
  cfg.t_average = 200;
  const auto sp = spectrum(nn.state, 4, p, c, cfg);
  for (int i = 0; i < 4; ++i)
    CHECK(sp.exponents[i] == doctest::Approx(nn.eigenvalues[i].real()).epsilon(1e-3));
  CHECK(sp.converged);
}

TEST_CASE("full spectrum sums to the mean Jacobian trace") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  LyapunovSettings cfg;
  cfg.t_average = 500;
  const auto s0 = fixtures::settle(fixtures::la_la_ic(), c, 500);
  const auto sp = spectrum(s0, 4, p, c, cfg);
  const double sum = std::accumulate(sp.exponents.begin(), sp.exponents.end(), 0.0);
  CHECK(std::abs(sum - sp.mean_trace) < 1e-2);
  CHECK(std::is_sorted(sp.exponents.rbegin(), sp.exponents.rend()));
}

TEST_CASE("LA-LA limit cycle has one zero exponent and is classified periodic") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  const auto s0 = fixtures::settle(fixtures::la_la_ic(), c);
  LyapunovSettings cfg;
  cfg.t_average = 5000;
  const auto sp = spectrum(s0, 2, p, c, cfg);
  CHECK(std::abs(sp.exponents[0]) < 1e-3);
  CHECK(sp.exponents[1] < -0.1);

  IntegrationSettings is;
  is.t_transient = 0;
  is.t_total = 200;
  const auto f = featurize(integrate(NetworkSystem(p, c), s0, is));
  CHECK(classify(sp, f) == DynamicalClass::Periodic);
}

TEST_CASE("classification rules") {
  FeatureVector quiet;
  quiet.per_unit_amplitude = {0.1, 0.2};
  FeatureVector loud;
  loud.per_unit_amplitude = {40.0, 40.0};
  LyapunovSpectrum s;
  s.converged = true;
  s.exponents = {0.0004, -0.00002, -0.1, -0.6};
  CHECK(classify(s, quiet) == DynamicalClass::Equilibrium);
  CHECK(classify(s, loud) == DynamicalClass::Quasiperiodic);
  s.exponents = {0.05, 0.0, -0.1, -0.6};
  CHECK(classify(s, loud) == DynamicalClass::Chaotic);
  s.exponents = {0.0, -0.3, -0.5, -1};
  CHECK(classify(s, loud) == DynamicalClass::Periodic);
  s.converged = false;
  CHECK(classify(s, loud) == DynamicalClass::Unclassified);
  CHECK(to_string(DynamicalClass::Quasiperiodic) == "quasiperiodic");
}
