#pragma once

#include <string>
#include <vector>

#include "multistab/model.hpp"

namespace multistab {

struct FeatureVector;

struct LyapunovSettings {
  double renorm_interval = 1.0;
  /// Optional extra transient integrated before averaging starts.
  double t_transient = 0.0;
  double t_average = 20000.0;
  /// Tangent vectors are aligned for this long before averaging starts.
  double t_align = 100.0;
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  /// Half-window and full-window estimates must agree to this for convergence.
  double convergence_tol = 3e-3;
};

struct LyapunovSpectrum {
  /// Descending.
  std::vector<double> exponents;
  double renorm_interval = 1.0;
  double t_average = 0.0;
  /// Exponents estimated from the first half of the window.
  std::vector<double> half_window;
  /// max |half_window - exponents|.
  double convergence_estimate = 0.0;
  bool converged = false;
  /// Time average of the Jacobian trace along the orbit.
  double mean_trace = 0.0;
};

enum class DynamicalClass { Equilibrium, Periodic, Quasiperiodic, Chaotic, Unclassified };

std::string to_string(DynamicalClass c);

/// Exponents with |lambda| <= zero_tol count as zero (units 1/time).
inline constexpr double kZeroTol = 1e-3;
/// Oscillation amplitude (mV) below which a unit is considered stationary.
inline constexpr double kAmplitudeFloor = 1.0;

/// First k Lyapunov exponents from s0 by tangent-space integration with
/// orthonormalization every renorm_interval. Throws on divergence.
LyapunovSpectrum spectrum(const NetworkState& s0, int k, const ModelParams& p,
                          const CouplingConfig& c, const LyapunovSettings& cfg = {});

/// equilibrium if every amplitude < amplitude_floor; unclassified if not
/// converged; chaotic if lambda_1 > zero_tol; then one zero exponent ->
/// periodic, two -> quasiperiodic.
DynamicalClass classify(const LyapunovSpectrum& spec, const FeatureVector& features,
                        double zero_tol = kZeroTol, double amplitude_floor = kAmplitudeFloor);

/// Orthonormalizes the columns of v in place and returns the diagonal of R
/// (positive). Modified Gram-Schmidt for up to four columns, Householder beyond.
Eigen::VectorXd orthonormalize(Eigen::MatrixXd& v);

}  // namespace multistab
