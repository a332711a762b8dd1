#include "multistab/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "multistab/attractors.hpp"
#include "multistab/error.hpp"
#include "multistab/integrate.hpp"

namespace multistab {

std::string to_string(DynamicalClass c) {
  switch (c) {
    case DynamicalClass::Equilibrium: return "equilibrium";
    case DynamicalClass::Periodic: return "periodic";
    case DynamicalClass::Quasiperiodic: return "quasiperiodic";
    case DynamicalClass::Chaotic: return "chaotic";
    case DynamicalClass::Unclassified: return "unclassified";
  }
  return "unclassified";
}

Eigen::VectorXd orthonormalize(Eigen::MatrixXd& v) {
  const auto k = v.cols();
  Eigen::VectorXd r(k);
  if (k <= 4) {
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) v.col(i) -= v.col(j).dot(v.col(i)) * v.col(j);
      r[i] = v.col(i).norm();
      if (!(r[i] > 0.0) || !std::isfinite(r[i]))
        throw NumericalError("orthonormalize: degenerate tangent vectors");
      v.col(i) /= r[i];
    }
    return r;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  const Eigen::MatrixXd rr = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    r[i] = std::abs(rr(i, i));
    if (!(r[i] > 0.0) || !std::isfinite(r[i]))
      throw NumericalError("orthonormalize: degenerate tangent vectors");
    if (rr(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  v = q;
  return r;
}

LyapunovSpectrum spectrum(const NetworkState& s0, int k, const ModelParams& p,
                          const CouplingConfig& c, const LyapunovSettings& cfg) {
  check_state(s0, c);
  const NetworkSystem sys(p, c);
  const int d = sys.dimension();
  if (k < 1 || k > d) throw ConfigError("spectrum: k must be in [1, 2N]");
  if (!(cfg.renorm_interval > 0.0) || !(cfg.t_average > 0.0) || !(cfg.t_align >= 0.0))
    throw ConfigError("spectrum: renorm_interval and t_average must be > 0");

  if (!(cfg.t_transient >= 0.0)) throw ConfigError("spectrum: t_transient must be >= 0");
  const NetworkState start = cfg.t_transient > 0.0
                                 ? NetworkState(advance(make_vector_field(sys), s0, cfg.t_transient,
                                                        cfg.abs_tol, cfg.rel_tol))
                                 : s0;

  // Layout: [state (d), tangent vectors (k*d, column-major), trace integral].
  const int dim = d + k * d + 1;
  VectorField f = [&sys, d, k](std::span<const double> u, std::span<double> du) {
    sys.rhs(u.subspan(0, d), du.subspan(0, d));
    sys.jacobian_times_block(u.subspan(0, d), u.subspan(d, k * d), du.subspan(d, k * d), k);
    du[d + k * d] = sys.jacobian_trace(u.subspan(0, d));
  };

  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  u.head(d) = start;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, k);
  for (int i = 0; i < k; ++i) u.segment(d + i * d, d) = v.col(i);

  Dopri5 st(f, dim, cfg.abs_tol, cfg.rel_tol);
  const long n_align = std::lround(cfg.t_align / cfg.renorm_interval);
  const long n_intervals = std::max<long>(2, std::lround(cfg.t_average / cfg.renorm_interval));
  const long half = n_intervals / 2;
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(k), half_sums = Eigen::VectorXd::Zero(k);
  double t = -static_cast<double>(n_align) * cfg.renorm_interval, h = 0.0;
  for (long n = -n_align; n < n_intervals; ++n) {
    st.reset(t, {u.data(), static_cast<size_t>(dim)}, h);
    const double t_end = static_cast<double>(n + 1) * cfg.renorm_interval;
    while (st.t() < t_end) {
      st.step(t_end);
      if (st.n_steps() > 100'000'000) throw DivergenceError("spectrum: step budget exceeded");
    }
    h = st.last_step();
    t = st.t();
    u = Eigen::Map<const Eigen::VectorXd>(st.y().data(), dim);
    if (!u.allFinite())
      throw BlowUpError("spectrum: non-finite state", std::vector<double>(u.data(), u.data() + d));
    for (int i = 0; i < k; ++i) v.col(i) = u.segment(d + i * d, d);
    const Eigen::VectorXd r = orthonormalize(v);
    for (int i = 0; i < k; ++i) {
      if (n >= 0) sums[i] += std::log(r[i]);
      u.segment(d + i * d, d) = v.col(i);
    }
    if (n < 0) u[d + k * d] = 0.0;
    if (n + 1 == half) half_sums = sums;
  }
  LyapunovSpectrum out;
  out.renorm_interval = cfg.renorm_interval;
  out.t_average = t;
  out.mean_trace = u[d + k * d] / t;
  const double t_half = static_cast<double>(half) * cfg.renorm_interval;
  for (int i = 0; i < k; ++i) {
    out.exponents.push_back(sums[i] / t);
    out.half_window.push_back(half_sums[i] / t_half);
  }
  // Stretch factors from QR come out ordered, but sort to be safe.
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
  std::sort(out.half_window.begin(), out.half_window.end(), std::greater<>());
  for (int i = 0; i < k; ++i)
    out.convergence_estimate =
        std::max(out.convergence_estimate, std::abs(out.exponents[i] - out.half_window[i]));
  out.converged = out.convergence_estimate <= cfg.convergence_tol;
  return out;
}

DynamicalClass classify(const LyapunovSpectrum& spec, const FeatureVector& features,
                        double zero_tol, double amplitude_floor) {
  const bool still = std::all_of(features.per_unit_amplitude.begin(),
                                 features.per_unit_amplitude.end(),
                                 [&](double a) { return a < amplitude_floor; });
  if (still) return DynamicalClass::Equilibrium;
  if (!spec.converged || spec.exponents.empty()) return DynamicalClass::Unclassified;
  if (spec.exponents.front() > zero_tol) return DynamicalClass::Chaotic;
  const auto zeros = std::count_if(spec.exponents.begin(), spec.exponents.end(),
                                   [&](double l) { return std::abs(l) <= zero_tol; });
  if (zeros == 1) return DynamicalClass::Periodic;
  if (zeros == 2) return DynamicalClass::Quasiperiodic;
  return DynamicalClass::Unclassified;
}

}  // namespace multistab
