#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "multistab/equilibria.hpp"
#include "multistab/model.hpp"
#include "multistab/parameter.hpp"

namespace multistab {

struct PeriodicOrbit {
  /// Point on the section x_{section_unit} = section_level.
  NetworkState anchor;
  double period = 0.0;
  /// Nontrivial Floquet multipliers (2N-1), sorted by modulus descending.
  std::vector<Complex> multipliers;
  /// The flow-direction multiplier removed before reporting.
  double trivial_multiplier = 1.0;
  Parameter param = Parameter::Eps;
  double param_value = 0.0;
  int section_unit = 0;
  double section_level = 0.0;
  double residual = 0.0;
  /// Largest max-min of x_i over one period.
  double amplitude_max = 0.0;

  bool stable() const;
};

struct ShootingOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double tolerance = 1e-9;
  int max_iterations = 40;
  /// Section unit when the caller gives a period; -1 picks the unit with the
  /// largest oscillation.
  int section_unit = 0;
};

/// Shooting on the return map to x_u = guess x_u with the period as a free
/// unknown. With guess_period <= 0 the state is first integrated forward to
/// estimate the period and choose the section (unit of largest amplitude,
/// level at mid amplitude). Throws ConvergenceError, or ConvergenceError when
/// the orbit collapses onto an equilibrium.
PeriodicOrbit find_orbit(const NetworkState& guess, double guess_period, const ModelParams& p,
                         const CouplingConfig& c, Parameter param = Parameter::Eps,
                         const ShootingOptions& opt = {});

struct OrbitBranch {
  std::vector<PeriodicOrbit> points;
  std::vector<BifurcationEvent> events;
  bool truncated = false;
  std::string notice;
};

struct OrbitContinuationOptions {
  ShootingOptions shooting;
  /// Pseudo-arclength step bounds; arclength is measured in raw (s, T, param).
  double min_step = 1e-9;
  double max_step = 5.0;
  /// Largest parameter change per accepted step.
  double max_param_step = 0.002;
  /// Largest relative period change per accepted step.
  double max_period_jump = 0.1;
  int max_points = 20000;
  int max_halvings = 8;
  /// Residual accepted when Newton stagnates (saddle cycles amplify
  /// integration error by their unstable multiplier).
  double noise_tolerance = 1e-7;
  double period_max = 500.0;
  double hom_distance = 0.5;
  /// Points of monotone period growth required before a HOM flag.
  int hom_window = 6;
  int branch_id = 0;
  /// Stop at the first detected event.
  bool stop_after_event = false;
};

/// Pseudo-arclength continuation of an orbit in `param` over [lo, hi],
/// starting in the direction of sign(initial_step). Events: SNLC at folds in
/// the parameter, TORUS where a complex multiplier pair crosses the unit
/// circle, HOM when the period diverges next to a saddle equilibrium (either
/// above period_max or when continuation stalls with monotone growth).
OrbitBranch continue_orbit(const PeriodicOrbit& start, Parameter param, double lo, double hi,
                           double initial_step, const ModelParams& p, const CouplingConfig& c,
                           const OrbitContinuationOptions& opt = {});

struct SingleUnitScan {
  EquilibriumBranch equilibria;
  OrbitBranch orbits;
  std::vector<BifurcationEvent> events;
};

/// N=1 scan in I over [lo, hi]: fold of the node/saddle pair from equilibrium
/// continuation and the homoclinic from the stable limit cycle continued
/// downward from `cycle_seed_current`.
SingleUnitScan single_unit_scan(double lo, double hi, const ModelParams& p,
                                double cycle_seed_current = 4.0);

struct CurvePoint {
  double current;
  double eps;
};

struct TwoParamCurve {
  std::vector<CurvePoint> points;
  std::vector<std::string> notices;
};

/// For each I in the grid, continues `seed` (an orbit at the model's I and
/// eps) to that I, then in eps towards `eps_lo` or `eps_hi` (direction
/// `eps_direction`) and records the first event of `kind`. Grid points where
/// no event is found are skipped with a notice.
TwoParamCurve two_param_bracket(const PeriodicOrbit& seed, const std::vector<double>& current_grid,
                                BifurcationKind kind, double eps_lo, double eps_hi,
                                int eps_direction, const ModelParams& p, const CouplingConfig& c,
                                const OrbitContinuationOptions& opt = {});

/// Samples one period of an orbit at spacing dt (includes both ends).
Eigen::MatrixXd orbit_samples(const PeriodicOrbit& orbit, const ModelParams& p,
                              const CouplingConfig& c, double dt = 0.01);

void write_branch_csv(std::ostream& os, const OrbitBranch& b);
void write_events_csv(std::ostream& os, const std::vector<BifurcationEvent>& events);

}  // namespace multistab
