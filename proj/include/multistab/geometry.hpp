#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "multistab/integrate.hpp"
#include "multistab/model.hpp"

namespace multistab {

enum class ManifoldBranch { StablePlus, StableMinus, UnstablePlus, UnstableMinus };

std::string to_string(ManifoldBranch b);

struct ManifoldPolyline {
  ManifoldBranch branch = ManifoldBranch::StablePlus;
  /// Ordered by integration time, starting next to the saddle.
  std::vector<Eigen::Vector2d> points;
  /// Cumulative arclength at each point, measured from the saddle.
  std::vector<double> cumulative;
  double arclength = 0.0;
  Eigen::Vector2d saddle = Eigen::Vector2d::Zero();

  bool stable() const noexcept {
    return branch == ManifoldBranch::StablePlus || branch == ManifoldBranch::StableMinus;
  }
};

struct ManifoldOptions {
  double offset = 1e-6;
  double max_arclength = 500.0;
  double max_time = 500.0;
  double x_min = -100.0, x_max = 60.0, y_min = -0.1, y_max = 1.1;
  /// Polyline spacing within near_radius of the saddle, and elsewhere.
  double ds_near = 0.05, ds_far = 0.5, near_radius = 5.0;
  double abs_tol = 1e-10, rel_tol = 1e-10;
};

/// The four branches of the uncoupled saddle, in the order stable+, stable-,
/// unstable+, unstable-. "+" is the eigenvector direction with positive x
/// component. Throws NumericalError without a saddle.
std::array<ManifoldPolyline, 4> saddle_manifolds(const ModelParams& p,
                                                 const ManifoldOptions& opt = {});

struct ReinjectionEvent {
  double time;
  int unit;
  Eigen::Vector2d point;
  /// eps*h of the unit at the crossing.
  Eigen::Vector2d coupling;
  /// +1 when crossing towards the side of the unstable focus.
  int direction;
  /// Arclength from the saddle along the manifold to the crossing.
  double arclength;
};

/// Signed crossings of the unit's projected trajectory with a manifold polyline.
std::vector<ReinjectionEvent> reinjection_events(const Trajectory& traj,
                                                 const ManifoldPolyline& manifold, int unit,
                                                 const ModelParams& p, const CouplingConfig& c);

struct FieldSample {
  double time;
  Eigen::Vector2d position;
  Eigen::Vector2d coupling;
  Eigen::Vector2d local;
};

/// Every stride-th sample with eps*h_i and the uncoupled vector field f_i.
std::vector<FieldSample> coupling_field_along(const Trajectory& traj, int unit, int stride,
                                              const ModelParams& p, const CouplingConfig& c);

void write_manifolds_csv(std::ostream& os, const std::array<ManifoldPolyline, 4>& m);
void write_reinjection_csv(std::ostream& os, const std::vector<ReinjectionEvent>& events);
void write_field_csv(std::ostream& os, const std::vector<FieldSample>& samples);

}  // namespace multistab
