#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "multistab/model.hpp"
#include "multistab/parameter.hpp"

namespace multistab {

using Complex = std::complex<double>;

/// Counts of Jacobian eigenvalues by type.
struct EigenSignature {
  int positive_real = 0;   // real eigenvalues with Re > 0
  int negative_real = 0;   // real eigenvalues with Re < 0
  int unstable_pairs = 0;  // complex pairs with Re > 0
  int stable_pairs = 0;    // complex pairs with Re < 0
  int marginal = 0;        // |Re| below the marginal threshold

  bool operator==(const EigenSignature&) const = default;
};

/// Real parts with magnitude below this are reported as marginal.
inline constexpr double kMarginalThreshold = 1e-9;

struct Equilibrium {
  NetworkState state;
  /// Sorted by real part, descending.
  std::vector<Complex> eigenvalues;
  /// Per-unit compound name in unit order, e.g. "node-saddle".
  std::string class_label;
  /// Name implied by the eigenvalue signature alone, units sorted
  /// saddle < node < focus, e.g. "saddle-node".
  std::string signature_label;
  double residual_norm = 0.0;

  bool stable() const;
  EigenSignature signature() const;
};

/// Fixed points of the uncoupled unit, ordered by x (node, saddle, focus at default parameters).
struct UncoupledPoint {
  double x;
  double y;
  std::string name;  // node, saddle, focus, repeller, marginal
};

std::vector<UncoupledPoint> uncoupled_fixed_points(const ModelParams& p);

/// Eigenvalues of a real matrix sorted by real part descending (ties by imaginary part descending).
std::vector<Complex> sorted_eigenvalues(const Matrix& m);

EigenSignature signature_of(const std::vector<Complex>& eigenvalues);

/// Canonical compound name from the signature, or "marginal" / "unclassified".
std::string signature_label(const EigenSignature& sig, int n_units);

/// Name of a planar fixed point from its two eigenvalues.
std::string planar_label(const std::vector<Complex>& eigenvalues);

struct NewtonOptions {
  double tolerance = 1e-12;
  int max_iterations = 50;
  double min_damping = 1.0 / (1 << 20);
};

/// Damped Newton on network_rhs. Throws ConvergenceError (with the last
/// iterate) or SingularJacobianError.
Equilibrium refine(const NetworkState& guess, const ModelParams& p, const CouplingConfig& c,
                   const NewtonOptions& opt = {});

/// Per-unit label from the nearest uncoupled fixed point, plus the signature label.
/// Returns the per-unit compound label; "marginal" if any |Re| < 1e-9.
std::string classify(Equilibrium& eq, const ModelParams& p);

/// All equilibria reachable from the 3^N products of the uncoupled fixed points,
/// deduplicated within 1e-6 (max norm). Requires N <= 12.
std::vector<Equilibrium> enumerate(const ModelParams& p, const CouplingConfig& c,
                                   int workers = 1);

struct BranchPoint {
  double param;
  Equilibrium eq;
};

struct EquilibriumBranch {
  std::vector<BranchPoint> points;
  std::vector<BifurcationEvent> events;
  bool truncated = false;
  std::string notice;
};

struct BranchOptions {
  double min_step = 1e-9;
  double max_step = 0.05;
  /// Continuation stops if the state leaves this box (x range, y range).
  double x_min = -150.0, x_max = 100.0, y_min = -0.5, y_max = 1.5;
  int max_points = 100000;
};

/// Pseudo-arclength continuation of an equilibrium in one parameter from its
/// current value towards `target`. Emits FOLD at turning points of the
/// parameter and HOPF where a complex pair crosses the imaginary axis
/// (bisected to |Re| < 1e-8).
EquilibriumBranch continue_branch(const Equilibrium& start, Parameter param, double target,
                                  double step, const ModelParams& p, const CouplingConfig& c,
                                  const BranchOptions& opt = {});

void write_equilibria_json(std::ostream& os, const std::vector<Equilibrium>& eqs);

}  // namespace multistab
