#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "multistab/equilibria.hpp"
#include "multistab/error.hpp"

using namespace multistab;

TEST_CASE("uncoupled fixed points at default parameters") {
  ModelParams p;
  const auto pts = uncoupled_fixed_points(p);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].name == "node");
  CHECK(pts[0].x == doctest::Approx(-64.651979).epsilon(1e-8));
  CHECK(pts[0].y == doctest::Approx(0.000360).epsilon(1e-2));
  CHECK(pts[1].name == "saddle");
  CHECK(pts[1].x == doctest::Approx(-57.340426).epsilon(1e-8));
  CHECK(pts[1].y == doctest::Approx(0.001550).epsilon(1e-2));
  CHECK(pts[2].name == "focus");
  CHECK(pts[2].x == doctest::Approx(-27.189370).epsilon(1e-8));
  CHECK(pts[2].y == doctest::Approx(0.392248).epsilon(1e-5));
}

TEST_CASE("single unit eigen-signatures") {
  ModelParams p;
  const auto eqs = enumerate(p, CouplingConfig::single());
  REQUIRE(eqs.size() == 3);
  CHECK(eqs[0].class_label == "node");
  CHECK(eqs[0].stable());
  CHECK(eqs[1].signature() == EigenSignature{1, 1, 0, 0, 0});
  CHECK(eqs[2].signature() == EigenSignature{0, 0, 1, 0, 0});
  CHECK(eqs[2].eigenvalues[0].imag() == doctest::Approx(11.714).epsilon(1e-4));
  for (const auto& e : eqs) CHECK(e.residual_norm < 1e-10);
}

TEST_CASE("nine equilibria for two weakly coupled units") {
  ModelParams p;
  const auto eqs = enumerate(p, CouplingConfig::pair(0.05));
  REQUIRE(eqs.size() == 9);
  const auto unc = uncoupled_fixed_points(p);
  int symmetric = 0;
  for (const auto& e : eqs) {
    if (std::abs(e.state[0] - e.state[2]) > 1e-9) continue;
    ++symmetric;
    const auto nearest = std::min_element(unc.begin(), unc.end(), [&](auto& a, auto& b) {
      return std::abs(a.x - e.state[0]) < std::abs(b.x - e.state[0]);
    });
    CHECK(std::abs(nearest->x - e.state[0]) < 1e-8);
    CHECK(std::abs(nearest->y - e.state[1]) < 1e-8);
  }
  CHECK(symmetric == 3);
  // exactly one stable equilibrium: node-node
  CHECK(std::count_if(eqs.begin(), eqs.end(), [](auto& e) { return e.stable(); }) == 1);
}

TEST_CASE("signature label ignores unit order") {
  ModelParams p;
  const auto eqs = enumerate(p, CouplingConfig::pair(0.05));
  for (const auto& e : eqs) {
    if (e.class_label == "node-saddle" || e.class_label == "saddle-node")
      CHECK(e.signature_label == "saddle-node");
  }
}

TEST_CASE("permuting units permutes equilibria") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.1);
  const auto eqs = enumerate(p, c);
  for (const auto& e : eqs) {
    NetworkState swapped(4);
    swapped << e.state[2], e.state[3], e.state[0], e.state[1];
    const bool found = std::any_of(eqs.begin(), eqs.end(), [&](auto& f) {
      return (f.state - swapped).cwiseAbs().maxCoeff() < 1e-8;
    });
    CHECK(found);
  }
}

TEST_CASE("Newton reports failure with the last iterate") {
  ModelParams p;
  NetworkState guess(2);
  guess << 500.0, 5.0;
  NewtonOptions opt;
  opt.max_iterations = 2;
  try {
    refine(guess, p, CouplingConfig::single(), opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_state().size() == 2);
  }
}

TEST_CASE("node/saddle fold in the injected current") {
  ModelParams p;
  const auto eqs = enumerate(p, CouplingConfig::single());
  const auto br = continue_branch(eqs[0], Parameter::Current, 6.0, 0.01, p, CouplingConfig::single());
  REQUIRE_FALSE(br.events.empty());
  CHECK(br.events.front().kind == BifurcationKind::Fold);
  CHECK(br.events.front().param_value == doctest::Approx(4.5128676).epsilon(1e-7));
}

TEST_CASE("Hopf of the symmetric focus-focus equilibrium") {
  ModelParams p;
  const auto c = CouplingConfig::pair(0.05);
  for (const auto& e : enumerate(p, c)) {
    if (e.class_label != "focus-focus") continue;
    const auto br = continue_branch(e, Parameter::Eps, 0.6, 0.01, p, c);
    REQUIRE(br.events.size() == 1);
    CHECK(br.events[0].kind == BifurcationKind::Hopf);
    CHECK(br.events[0].param_value == doctest::Approx(0.4087614).epsilon(1e-6));
    // the pair crosses at the uncoupled focus frequency: the symmetric mode is unaffected by eps
    CHECK(br.events[0].diagnostic == doctest::Approx(11.714).epsilon(1e-4));
  }
}

TEST_CASE("equilibria JSON lists every point") {
  ModelParams p;
  std::ostringstream os;
  write_equilibria_json(os, enumerate(p, CouplingConfig::single()));
  const auto j = nlohmann::json::parse(os.str());
  CHECK(j.size() == 3);
}
