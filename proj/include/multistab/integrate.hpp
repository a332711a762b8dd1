#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "multistab/model.hpp"

namespace multistab {

/// Autonomous vector field: writes f(s) into ds.
using VectorField = std::function<void(std::span<const double> s, std::span<double> ds)>;

/// Scalar function of the state whose zeros define a section.
using SectionFn = std::function<double(std::span<const double> s)>;

VectorField make_vector_field(const NetworkSystem& sys);

struct IntegrationSettings {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double t_transient = 7000.0;
  double t_total = 40000.0;
  double sample_dt = 0.05;
  long max_steps = 200'000'000;

  void validate() const;
};

void to_json(nlohmann::json& j, const IntegrationSettings& s);
void from_json(const nlohmann::json& j, IntegrationSettings& s);

/// Post-transient samples on a uniform grid. states.col(k) is the state at times[k].
struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;

  std::size_t size() const noexcept { return times.size(); }
  int dimension() const noexcept { return static_cast<int>(states.rows()); }
  Eigen::VectorXd state(std::size_t k) const { return states.col(static_cast<Eigen::Index>(k)); }

  /// Linear interpolation between samples; t must lie within [times.front(), times.back()].
  Eigen::VectorXd interpolate(double t) const;
};

/// Dormand-Prince 5(4) stepper with PI step-size control and the
/// fourth-order continuous extension of Hairer & Wanner.
class Dopri5 {
 public:
  Dopri5(VectorField f, int dimension, double abs_tol, double rel_tol);

  void reset(double t0, std::span<const double> y0, double h0 = 0.0);

  /// Takes one accepted step, never stepping past t_limit.
  /// Throws DivergenceError on step-size underflow and BlowUpError on non-finite state.
  void step(double t_limit);

  double t() const noexcept { return t_; }
  double t_prev() const noexcept { return t_old_; }
  double last_step() const noexcept { return t_ - t_old_; }
  std::span<const double> y() const noexcept { return y_; }
  std::span<const double> y_prev() const noexcept { return y_old_; }
  /// Derivative at the current point (FSAL stage).
  std::span<const double> dy() const noexcept { return k1_; }
  long n_steps() const noexcept { return n_accepted_ + n_rejected_; }
  long n_accepted() const noexcept { return n_accepted_; }
  long n_rhs() const noexcept { return n_rhs_; }
  int dimension() const noexcept { return dim_; }

  /// Continuous extension on the last step, t in [t_prev(), t()].
  void dense(double t, std::span<double> out) const;

  /// Upper bound on the step size (default: unbounded).
  void set_max_step(double h) { h_max_ = h; }

 private:
  double initial_step() ;
  double error_norm(std::span<const double> err, std::span<const double> y0,
                    std::span<const double> y1) const;

  VectorField f_;
  int dim_;
  double atol_, rtol_;
  double t_ = 0.0, t_old_ = 0.0, h_ = 0.0, h_max_ = 0.0;
  double err_old_ = 1e-4;
  bool last_rejected_ = false;
  long n_accepted_ = 0, n_rejected_ = 0, n_rhs_ = 0;
  std::vector<double> y_, y_old_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, yerr_;
  std::vector<double> r1_, r2_, r3_, r4_, r5_;
};

/// Called once per stored sample.
using SampleObserver = std::function<void(double t, std::span<const double> s)>;

/// Integrates from t=0 to cfg.t_total and reports every post-transient sample
/// (t = t_transient + k*sample_dt) to the observer. Returns the final state.
/// Throws DivergenceError if cfg.max_steps is exceeded.
Eigen::VectorXd integrate(const VectorField& f, const Eigen::VectorXd& s0,
                          const IntegrationSettings& cfg, const SampleObserver& observer);

Trajectory integrate(const VectorField& f, const Eigen::VectorXd& s0,
                     const IntegrationSettings& cfg);

Trajectory integrate(const NetworkSystem& sys, const NetworkState& s0,
                     const IntegrationSettings& cfg);

/// Integrates without sampling; returns the state at time t_end.
Eigen::VectorXd advance(const VectorField& f, const Eigen::VectorXd& s0, double t_end,
                        double abs_tol = 1e-9, double rel_tol = 1e-9,
                        long max_steps = 200'000'000);

struct Crossing {
  double time;
  Eigen::VectorXd state;
  int direction;  // +1 upward, -1 downward
};

/// Sign changes of section along a sampled trajectory, refined on the
/// piecewise-linear interpolant. direction: +1, -1 or 0 (both).
std::vector<Crossing> locate_crossings(const Trajectory& traj, const SectionFn& section,
                                       int direction, double scale = 1.0);

/// Integrates from s0 over [t0, t_end] and refines every sign change of
/// section on the dense output to |section| < 1e-9*scale. The returned time
/// always lies inside the step that bracketed the sign change.
std::vector<Crossing> locate_crossings(const VectorField& f, const Eigen::VectorXd& s0,
                                       double t_end, const SectionFn& section, int direction,
                                       double abs_tol = 1e-9, double rel_tol = 1e-9,
                                       double scale = 1.0);

/// Refines a sign change of section bracketed by the last step of the stepper.
Crossing refine_crossing(const Dopri5& stepper, const SectionFn& section, double g_prev,
                         double g_now, double scale = 1.0);

/// CSV with header t,x1,y1,...,xN,yN and 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace multistab
