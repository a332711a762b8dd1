#include "multistab/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>

#include "multistab/attractors.hpp"
#include "multistab/error.hpp"
#include "multistab/integrate.hpp"

namespace multistab {

bool PeriodicOrbit::stable() const {
  return std::all_of(multipliers.begin(), multipliers.end(),
                     [](const Complex& m) { return std::abs(m) < 1.0; });
}

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct Flow {
  Eigen::VectorXd end;
  Matrix monodromy;
  Eigen::VectorXd f_end;
  /// Sensitivity of the end point to the parameter.
  Eigen::VectorXd psi;
};

/// Variational integration of the network at a given parameter value.
class Shooter {
 public:
  Shooter(const ModelParams& p, const CouplingConfig& c, Parameter param, int unit, double level,
          const ShootingOptions& opt)
      : p_(p), c_(c), param_(param), unit_(unit), level_(level), opt_(opt), d_(c.dimension()) {}

  int dimension() const { return d_; }
  int unit() const { return unit_; }
  double level() const { return level_; }
  Parameter param() const { return param_; }

  std::pair<ModelParams, CouplingConfig> at(double lam) const {
    ModelParams p = p_;
    CouplingConfig c = c_;
    try {
      set_parameter(param_, lam, p, c);
      p.validate();
      c.validate();
    } catch (const ConfigError& e) {
      throw ConvergenceError(std::string("shooting left the valid parameter range: ") + e.what());
    }
    return {p, c};
  }

  Flow flow(const Eigen::VectorXd& s, double period, double lam) const {
    if (!(period > 1e-6) || !std::isfinite(period))
      throw ConvergenceError("shooting: period collapsed");
    const auto [pa, ca] = at(lam);
    const auto [pb, cb] = at(lam + 1.0);
    const NetworkSystem sys(pa, ca), sys_plus(pb, cb);
    const int d = d_;
    const int dim = d + d * d + d;
    std::vector<double> tmp(d);
    VectorField f = [&](std::span<const double> u, std::span<double> du) {
      const auto x = u.subspan(0, d);
      sys.rhs(x, du.subspan(0, d));
      sys.jacobian_times_block(x, u.subspan(d, (d + 1) * d), du.subspan(d, (d + 1) * d), d + 1);
      // The vector field is affine in every continuation parameter.
      sys_plus.rhs(x, tmp);
      for (int k = 0; k < d; ++k) du[d + d * d + k] += tmp[k] - du[k];
    };
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    u.head(d) = s;
    for (int i = 0; i < d; ++i) u[d + i * d + i] = 1.0;
    Dopri5 st(f, dim, opt_.abs_tol, opt_.rel_tol);
    st.reset(0.0, {u.data(), static_cast<std::size_t>(dim)});
    while (st.t() < period) {
      st.step(period);
      if (st.n_steps() > 50'000'000) throw ConvergenceError("shooting: step budget exceeded");
    }
    Flow out;
    const Eigen::Map<const Eigen::VectorXd> y(st.y().data(), dim);
    out.end = y.head(d);
    out.monodromy = Eigen::Map<const Matrix>(y.data() + d, d, d);
    out.psi = y.tail(d);
    out.f_end.resize(d);
    sys.rhs({out.end.data(), static_cast<std::size_t>(d)},
            {out.f_end.data(), static_cast<std::size_t>(d)});
    return out;
  }

  /// Residual [phi_T(s) - s; s_u - level].
  Eigen::VectorXd residual(const Eigen::VectorXd& s, const Flow& fl) const {
    Eigen::VectorXd r(d_ + 1);
    r.head(d_) = fl.end - s;
    r[d_] = s[2 * unit_] - level_;
    return r;
  }

  /// d(residual)/d(s, T, lambda), (d+1) x (d+2).
  Matrix jacobian(const Flow& fl) const {
    Matrix a = Matrix::Zero(d_ + 1, d_ + 2);
    a.topLeftCorner(d_, d_) = fl.monodromy - Matrix::Identity(d_, d_);
    a.block(0, d_, d_, 1) = fl.f_end;
    a.block(0, d_ + 1, d_, 1) = fl.psi;
    a(d_, 2 * unit_) = 1.0;
    return a;
  }

 private:
  ModelParams p_;
  CouplingConfig c_;
  Parameter param_;
  int unit_;
  double level_;
  ShootingOptions opt_;
  int d_;
};

/// Nontrivial multipliers by deflating the flow direction f, which the
/// monodromy maps to itself.
void fill_multipliers(PeriodicOrbit& orb, const Matrix& m, const Eigen::VectorXd& f) {
  const int d = static_cast<int>(m.rows());
  const Eigen::VectorXd fh = f.normalized();
  orb.trivial_multiplier = fh.dot(m * fh);
  Eigen::HouseholderQR<Matrix> qr(fh);
  const Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix basis = q.rightCols(d - 1);
  orb.multipliers.clear();
  if (d > 1) {
    Eigen::EigenSolver<Matrix> es(basis.transpose() * m * basis, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      orb.multipliers.push_back(es.eigenvalues()[i]);
  }
  std::sort(orb.multipliers.begin(), orb.multipliers.end(), [](const Complex& a, const Complex& b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    return a.imag() > b.imag();
  });
}

struct ProbeResult {
  std::vector<double> x_min, x_max;
  double period = 0.0;
  NetworkState anchor;
  int unit = 0;
  double level = 0.0;
};

/// Estimates section, level and period by integrating from a guess.
ProbeResult probe(const NetworkState& guess, const NetworkSystem& sys) {
  const VectorField f = make_vector_field(sys);
  const int n = sys.dimension() / 2;
  ProbeResult pr;
  pr.x_min.assign(n, std::numeric_limits<double>::infinity());
  pr.x_max.assign(n, -std::numeric_limits<double>::infinity());
  // Long enough for slow orbits near a homoclinic; stops early below.
  constexpr double kWindow = 2000.0;
  Dopri5 st(f, sys.dimension(), 1e-10, 1e-10);
  st.reset(0.0, {guess.data(), static_cast<std::size_t>(guess.size())});
  std::vector<double> buf(sys.dimension());
  double t_mark = 0.0;
  // First pass: amplitude over an initial window, grown until a few spikes are seen.
  while (st.t() < kWindow) {
    st.step(kWindow);
    for (int i = 0; i < n; ++i) {
      pr.x_min[i] = std::min(pr.x_min[i], st.y()[2 * i]);
      pr.x_max[i] = std::max(pr.x_max[i], st.y()[2 * i]);
    }
    if (st.t() > t_mark + 200.0) break;
  }
  int unit = 0;
  for (int i = 1; i < n; ++i)
    if (pr.x_max[i] - pr.x_min[i] > pr.x_max[unit] - pr.x_min[unit]) unit = i;
  if (pr.x_max[unit] - pr.x_min[unit] < kAmplitudeFloor)
    throw ConvergenceError("find_orbit: guess does not oscillate");
  pr.unit = unit;
  pr.level = 0.5 * (pr.x_max[unit] + pr.x_min[unit]);
  const SectionFn g = [unit, lvl = pr.level](std::span<const double> s) { return s[2 * unit] - lvl; };
  std::vector<Crossing> hits;
  double g_prev = g(st.y());
  const double t_stop = st.t() + kWindow;
  while (st.t() < t_stop && hits.size() < 3) {
    st.step(t_stop);
    const double g_now = g(st.y());
    if (g_prev < 0.0 && g_now >= 0.0) hits.push_back(refine_crossing(st, g, g_prev, g_now));
    g_prev = g_now;
  }
  if (hits.size() < 3) throw ConvergenceError("find_orbit: no recurrent section crossings");
  pr.period = hits[2].time - hits[1].time;
  pr.anchor = hits[2].state;
  return pr;
}

}  // namespace

Eigen::MatrixXd orbit_samples(const PeriodicOrbit& orbit, const ModelParams& p0,
                              const CouplingConfig& c0, double dt) {
  ModelParams p = p0;
  CouplingConfig c = c0;
  set_parameter(orbit.param, orbit.param_value, p, c);
  const NetworkSystem sys(p, c);
  IntegrationSettings cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-10;
  cfg.t_transient = 0.0;
  cfg.sample_dt = std::min(dt, orbit.period / 4.0);
  cfg.t_total = orbit.period;
  return integrate(sys, orbit.anchor, cfg).states;
}

namespace {

double amplitude_of(const PeriodicOrbit& orb, const ModelParams& p, const CouplingConfig& c) {
  const Eigen::MatrixXd s = orbit_samples(orb, p, c, std::max(1e-3, orb.period / 4000.0));
  double amp = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); i += 2)
    amp = std::max(amp, s.row(i).maxCoeff() - s.row(i).minCoeff());
  return amp;
}

PeriodicOrbit make_orbit(const Shooter& sh, const Eigen::VectorXd& z, const Flow& fl,
                         const ModelParams& p, const CouplingConfig& c) {
  const int d = sh.dimension();
  PeriodicOrbit o;
  o.anchor = z.head(d);
  o.period = z[d];
  o.param = sh.param();
  o.param_value = z[d + 1];
  o.section_unit = sh.unit();
  o.section_level = sh.level();
  o.residual = inf_norm(sh.residual(o.anchor, fl));
  fill_multipliers(o, fl.monodromy, fl.f_end);
  o.amplitude_max = amplitude_of(o, p, c);
  return o;
}

/// Newton at fixed parameter on (s, T). Returns the converged (s, T, lambda).
Eigen::VectorXd newton_fixed(const Shooter& sh, Eigen::VectorXd z, const ShootingOptions& opt) {
  const int d = sh.dimension();
  Flow fl = sh.flow(z.head(d), z[d], z[d + 1]);
  Eigen::VectorXd r = sh.residual(z.head(d), fl);
  for (int it = 0; it < opt.max_iterations; ++it) {
    const double rn = inf_norm(r);
    if (!std::isfinite(rn)) throw ConvergenceError("find_orbit: non-finite residual");
    if (rn < opt.tolerance) return z;
    const Matrix a = sh.jacobian(fl).leftCols(d + 1);
    Eigen::FullPivLU<Matrix> lu(a);
    if (lu.rcond() < 1e-15) throw SingularJacobianError("find_orbit: singular shooting matrix");
    const Eigen::VectorXd dz = lu.solve(-r);
    // Backtracking: halve until the residual decreases.
    bool moved = false;
    for (double lam = 1.0; lam >= 1.0 / 1024; lam *= 0.5) {
      Eigen::VectorXd trial = z;
      trial.head(d + 1) += lam * dz;
      try {
        Flow ft = sh.flow(trial.head(d), trial[d], trial[d + 1]);
        Eigen::VectorXd rt = sh.residual(trial.head(d), ft);
        if (inf_norm(rt) < rn || (lam == 1.0 && inf_norm(rt) < 10.0 * opt.tolerance)) {
          z = trial;
          fl = std::move(ft);
          r = std::move(rt);
          moved = true;
          break;
        }
      } catch (const NumericalError&) {
      }
    }
    if (!moved) break;
  }
  throw ConvergenceError("find_orbit: Newton did not converge",
                         std::vector<double>(z.data(), z.data() + d));
}

}  // namespace

PeriodicOrbit find_orbit(const NetworkState& guess, double guess_period, const ModelParams& p,
                         const CouplingConfig& c, Parameter param, const ShootingOptions& opt) {
  check_state(guess, c);
  const int d = c.dimension();
  Eigen::VectorXd z(d + 2);
  int unit = opt.section_unit;
  double level = 0.0;
  if (guess_period > 0.0) {
    if (unit < 0) {
      const auto pr = probe(guess, NetworkSystem(p, c));
      unit = pr.unit;
    }
    if (unit >= c.n_units()) throw ConfigError("find_orbit: section unit out of range");
    level = guess[2 * unit];
    z.head(d) = guess;
    z[d] = guess_period;
  } else {
    const auto pr = probe(guess, NetworkSystem(p, c));
    unit = pr.unit;
    level = pr.level;
    z.head(d) = pr.anchor;
    z[d] = pr.period;
  }
  z[d + 1] = get_parameter(param, p, c);
  const Shooter sh(p, c, param, unit, level, opt);
  z = newton_fixed(sh, z, opt);
  const Flow fl = sh.flow(z.head(d), z[d], z[d + 1]);
  PeriodicOrbit o = make_orbit(sh, z, fl, p, c);
  if (o.amplitude_max < kAmplitudeFloor || o.period < 1e-6)
    throw ConvergenceError("find_orbit: orbit collapsed onto an equilibrium");
  return o;
}

namespace {

Eigen::VectorXd tangent_of(const Matrix& a, const Eigen::VectorXd& t_prev) {
  const auto n = a.cols();
  Matrix m(n, n);
  m.topRows(n - 1) = a;
  m.row(n - 1) = t_prev.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd t = m.fullPivLu().solve(rhs);
  t.normalize();
  if (t.dot(t_prev) < 0.0) t = -t;
  return t;
}

struct Corrected {
  Eigen::VectorXd z;
  Flow flow;
  Eigen::VectorXd tangent;
};

int unstable_complex_pairs(const PeriodicOrbit& o) {
  int n = 0;
  for (const auto& m : o.multipliers)
    if (std::abs(m.imag()) > 1e-9 && m.imag() > 0.0 && std::abs(m) > 1.0) ++n;
  return n;
}

}  // namespace

OrbitBranch continue_orbit(const PeriodicOrbit& start, Parameter param, double lo, double hi,
                           double initial_step, const ModelParams& p, const CouplingConfig& c,
                           const OrbitContinuationOptions& opt) {
  check_state(start.anchor, c);
  if (!(lo <= hi)) throw ConfigError("continue_orbit: empty parameter range");
  if (initial_step == 0.0 || !std::isfinite(initial_step))
    throw ConfigError("continue_orbit: initial step must be nonzero");
  const int d = c.dimension();
  const Shooter sh(p, c, param, start.section_unit, start.section_level, opt.shooting);
  const double tol = opt.shooting.tolerance;

  Eigen::VectorXd z(d + 2);
  z.head(d) = start.anchor;
  z[d] = start.period;
  z[d + 1] = get_parameter(param, p, c);
  z = newton_fixed(sh, z, opt.shooting);

  auto at_params = [&](double lam) { return sh.at(lam); };
  auto orbit_at = [&](const Eigen::VectorXd& zz, const Flow& fl) {
    const auto [pp, cc] = at_params(zz[d + 1]);
    return make_orbit(sh, zz, fl, pp, cc);
  };

  // Corrector on the hyperplane t.(z - pred) = 0.
  auto correct = [&](const Eigen::VectorXd& pred, const Eigen::VectorXd& t,
                     const Eigen::VectorXd& t_orient) -> std::optional<Corrected> {
    Eigen::VectorXd zz = pred;
    double r_prev = std::numeric_limits<double>::infinity(), last_update = r_prev;
    for (int it = 0; it < 10; ++it) {
      if (!(zz[d] > 0.0)) return std::nullopt;
      Flow fl;
      try {
        fl = sh.flow(zz.head(d), zz[d], zz[d + 1]);
      } catch (const NumericalError&) {
        return std::nullopt;
      }
      const Eigen::VectorXd r = sh.residual(zz.head(d), fl);
      const double rn = inf_norm(r);
      if (!std::isfinite(rn)) return std::nullopt;
      // Near saddle cycles integration noise is amplified by the unstable
      // multiplier; accept a stagnated Newton iteration at that floor.
      const bool at_floor = rn < opt.noise_tolerance &&
                            last_update < 1e-9 * std::max(1.0, inf_norm(zz));
      const Matrix a = sh.jacobian(fl);
      if (rn < tol || at_floor) return Corrected{zz, std::move(fl), tangent_of(a, t_orient)};
      if (rn > 10.0 * r_prev && rn > opt.noise_tolerance) return std::nullopt;
      r_prev = rn;
      Matrix m(d + 2, d + 2);
      m.topRows(d + 1) = a;
      m.row(d + 1) = t.transpose();
      Eigen::VectorXd rhs(d + 2);
      rhs.head(d + 1) = -r;
      rhs[d + 1] = -t.dot(zz - pred);
      Eigen::FullPivLU<Matrix> lu(m);
      if (lu.rcond() < 1e-16) return std::nullopt;
      const Eigen::VectorXd dz = lu.solve(rhs);
      last_update = inf_norm(dz);
      zz += dz;
      if (!zz.allFinite()) return std::nullopt;
    }
    return std::nullopt;
  };

  OrbitBranch br;
  Flow fl0 = sh.flow(z.head(d), z[d], z[d + 1]);
  Eigen::VectorXd e_lam = Eigen::VectorXd::Zero(d + 2);
  e_lam[d + 1] = initial_step > 0 ? 1.0 : -1.0;
  Eigen::VectorXd t = tangent_of(sh.jacobian(fl0), e_lam);
  br.points.push_back(orbit_at(z, fl0));
  for (auto& o : br.points) o.param = param;

  auto add_event = [&](BifurcationKind kind, double lam, double diag, std::string note) {
    br.events.push_back({kind, lam, opt.branch_id, diag, std::move(note)});
  };

  // Bisects along the arclength from za (tangent ta) for the first sigma where
  // indicator(orbit, tangent) differs from its value at za.
  auto bisect = [&](const Eigen::VectorXd& za, const Eigen::VectorXd& ta, double h, auto&& same,
                    double lam_tol) -> std::optional<std::pair<Corrected, PeriodicOrbit>> {
    double s_lo = 0.0, s_hi = h;
    std::optional<std::pair<Corrected, PeriodicOrbit>> best;
    double lam_lo = za[d + 1], lam_hi = std::numeric_limits<double>::quiet_NaN();
    for (int it = 0; it < 60; ++it) {
      const double s_mid = 0.5 * (s_lo + s_hi);
      auto cz = correct(za + s_mid * ta, ta, ta);
      if (!cz) break;
      PeriodicOrbit o = orbit_at(cz->z, cz->flow);
      if (same(o, cz->tangent)) {
        s_lo = s_mid;
        lam_lo = cz->z[d + 1];
      } else {
        s_hi = s_mid;
        lam_hi = cz->z[d + 1];
        best.emplace(std::move(*cz), std::move(o));
      }
      if (std::abs(lam_hi - lam_lo) < lam_tol) break;
    }
    return best;
  };

  double h = std::abs(initial_step);
  int successes = 0, halvings = 0;
  auto hom_check = [&](const char* reason) -> bool {
    const int n = static_cast<int>(br.points.size());
    if (n < opt.hom_window) return false;
    for (int k = n - opt.hom_window + 1; k < n; ++k)
      if (!(br.points[k].period > br.points[k - 1].period)) return false;
    const PeriodicOrbit& last = br.points.back();
    const double lam = last.param_value;
    const double step_dir = lam >= br.points[n - 2].param_value ? 1.0 : -1.0;
    const auto [pp, cc] = at_params(lam);
    const Eigen::MatrixXd samples = orbit_samples(last, pp, cc, std::max(1e-3, last.period / 20000.0));
    double best = std::numeric_limits<double>::infinity();
    // The saddle may only exist just beyond the truncation point (saddle-node case).
    for (double off : {0.0, 1e-5, 1e-4, 1e-3, 1e-2}) {
      std::vector<Equilibrium> eqs;
      try {
        const auto [pq, cq] = at_params(lam + step_dir * off);
        eqs = enumerate(pq, cq);
      } catch (const std::exception&) {
        continue;
      }
      for (const auto& eq : eqs) {
        if (eq.stable()) continue;
        const auto sig = eq.signature();
        if (sig.negative_real + sig.stable_pairs + sig.marginal == 0) continue;
        for (Eigen::Index k = 0; k < samples.cols(); ++k)
          best = std::min(best, (samples.col(k) - eq.state).norm());
      }
      if (best <= opt.hom_distance) break;
    }
    if (best > opt.hom_distance) return false;
    add_event(BifurcationKind::Homoclinic, lam, last.period,
              std::string(reason) + "; distance to saddle " + std::to_string(best));
    return true;
  };

  while (static_cast<int>(br.points.size()) < opt.max_points) {
    const PeriodicOrbit& prev = br.points.back();
    auto cz = correct(z + h * t, t, t);
    bool ok = cz.has_value();
    if (ok) {
      const double dlam = std::abs(cz->z[d + 1] - z[d + 1]);
      const double jump = std::abs(cz->z[d] - z[d]) / z[d];
      ok = dlam <= opt.max_param_step && jump <= opt.max_period_jump;
    }
    if (!ok) {
      h *= 0.5;
      successes = 0;
      if (++halvings > opt.max_halvings || h < opt.min_step) {
        br.truncated = true;
        br.notice = "step failure at " + to_string(param) + "=" + std::to_string(z[d + 1]) +
                    " (period " + std::to_string(z[d]) + ")";
        hom_check("continuation stalled with diverging period");
        break;
      }
      continue;
    }
    halvings = 0;
    const double lam_new = cz->z[d + 1];
    if (lam_new < lo || lam_new > hi) {
      // Land on the range end with the parameter pinned.
      const double bound = lam_new < lo ? lo : hi;
      if (std::abs(t[d + 1]) > 1e-12 && bound != z[d + 1]) {
        Eigen::VectorXd pred = z + ((bound - z[d + 1]) / t[d + 1]) * t;
        pred[d + 1] = bound;
        Eigen::VectorXd pin = Eigen::VectorXd::Zero(d + 2);
        pin[d + 1] = 1.0;
        if (auto end = correct(pred, pin, t)) br.points.push_back(orbit_at(end->z, end->flow));
      }
      br.notice = "reached end of parameter range";
      break;
    }
    PeriodicOrbit o = orbit_at(cz->z, cz->flow);

    // SNLC: the parameter component of the tangent changes sign.
    if ((cz->tangent[d + 1] > 0.0) != (t[d + 1] > 0.0)) {
      const double sgn = t[d + 1] > 0.0;
      auto hit = bisect(z, t, h, [&](const PeriodicOrbit&, const Eigen::VectorXd& tt) {
        return (tt[d + 1] > 0.0) == sgn;
      }, 1e-7);
      const PeriodicOrbit& at = hit ? hit->second : o;
      double diag = 0.0, gap = std::numeric_limits<double>::infinity();
      for (const auto& m : at.multipliers)
        if (std::abs(m - 1.0) < gap) {
          gap = std::abs(m - 1.0);
          diag = m.real();
        }
      add_event(BifurcationKind::SNLC, at.param_value, diag, "fold of limit cycles");
    }
    // TORUS: a complex pair crosses the unit circle.
    const int pairs_prev = unstable_complex_pairs(prev), pairs_now = unstable_complex_pairs(o);
    if (pairs_prev != pairs_now) {
      auto hit = bisect(z, t, h, [&](const PeriodicOrbit& q, const Eigen::VectorXd&) {
        return unstable_complex_pairs(q) == pairs_prev;
      }, 1e-6);
      const PeriodicOrbit& at = hit ? hit->second : o;
      double diag = 0.0, gap = std::numeric_limits<double>::infinity();
      for (const auto& m : at.multipliers)
        if (std::abs(m.imag()) > 1e-9 && std::abs(std::abs(m) - 1.0) < gap) {
          gap = std::abs(std::abs(m) - 1.0);
          diag = std::abs(m);
        }
      if (gap < 1e-2) add_event(BifurcationKind::Torus, at.param_value, diag, "Neimark-Sacker");
    }

    z = cz->z;
    t = cz->tangent;
    br.points.push_back(std::move(o));
    if (opt.stop_after_event && !br.events.empty()) {
      br.notice = "stopped after first event";
      break;
    }
    if (z[d] > opt.period_max) {
      if (!hom_check("period above limit")) br.notice = "period above limit away from saddles";
      br.truncated = true;
      break;
    }
    if (++successes >= 3) {
      h = std::min(2.0 * h, opt.max_step);
      successes = 0;
    }
  }
  if (static_cast<int>(br.points.size()) >= opt.max_points) {
    br.truncated = true;
    br.notice = "point budget exhausted";
  }
  return br;
}

SingleUnitScan single_unit_scan(double lo, double hi, const ModelParams& p0,
                                double cycle_seed_current) {
  if (!(lo < hi)) throw ConfigError("single_unit_scan: empty current range");
  SingleUnitScan out;
  const CouplingConfig c = CouplingConfig::single();
  ModelParams p = p0;
  p.current = lo;
  const auto eqs = enumerate(p, c);
  const auto node = std::find_if(eqs.begin(), eqs.end(), [](const Equilibrium& e) { return e.stable(); });
  if (node != eqs.end()) {
    out.equilibria = continue_branch(*node, Parameter::Current, hi, 1e-3, p, c);
    for (const auto& ev : out.equilibria.events) out.events.push_back(ev);
  }

  // Stable cycle: spiral out from the unstable focus.
  ModelParams pc = p0;
  pc.current = cycle_seed_current;
  const auto pts = uncoupled_fixed_points(pc);
  const auto focus = std::max_element(pts.begin(), pts.end(),
                                      [](const auto& a, const auto& b) { return a.x < b.x; });
  if (focus != pts.end()) {
    NetworkState guess(2);
    guess << focus->x + 0.5, focus->y;
    try {
      const PeriodicOrbit orb = find_orbit(guess, 0.0, pc, c, Parameter::Current);
      OrbitContinuationOptions opt;
      opt.branch_id = 1;
      out.orbits = continue_orbit(orb, Parameter::Current, lo, hi, -1e-3, pc, c, opt);
      for (const auto& ev : out.orbits.events) out.events.push_back(ev);
    } catch (const NumericalError& e) {
      out.orbits.notice = std::string("no limit cycle at seed current: ") + e.what();
    }
  }
  return out;
}

namespace {

struct EpsScan {
  double event_eps;
  /// Orbits inside the existence window, closest to its middle first.
  std::vector<PeriodicOrbit> candidates;
};

}  // namespace

TwoParamCurve two_param_bracket(const PeriodicOrbit& seed, const std::vector<double>& grid,
                                BifurcationKind kind, double eps_lo, double eps_hi,
                                int eps_direction, const ModelParams& p0, const CouplingConfig& c0,
                                const OrbitContinuationOptions& opt) {
  if (!(eps_lo < eps_hi)) throw ConfigError("two_param_bracket: empty eps interval");
  if (eps_direction != 1 && eps_direction != -1)
    throw ConfigError("two_param_bracket: eps_direction must be +1 or -1");
  TwoParamCurve curve;
  OrbitContinuationOptions probe_opt = opt;
  probe_opt.stop_after_event = true;
  const double dir = eps_direction;

  auto with_eps = [&](double eps) {
    CouplingConfig c = c0;
    c.set_eps(eps, eps);
    return c;
  };

  // Event in eps from `orb` at current I, plus seeds spread over the window.
  auto scan = [&](const PeriodicOrbit& orb, const ModelParams& p) -> std::optional<EpsScan> {
    const CouplingConfig c = with_eps(orb.param_value);
    const OrbitBranch fwd = continue_orbit(orb, Parameter::Eps, eps_lo, eps_hi, dir * 1e-3, p, c,
                                           probe_opt);
    const auto ev = std::find_if(fwd.events.begin(), fwd.events.end(),
                                 [&](const auto& e) { return e.kind == kind; });
    if (ev == fwd.events.end()) return std::nullopt;
    EpsScan out{ev->param_value, {}};
    for (const auto& o : fwd.points)
      if (dir * (o.param_value - ev->param_value) < 0) out.candidates.push_back(o);
    try {
      const OrbitBranch back = continue_orbit(orb, Parameter::Eps, eps_lo, eps_hi, -dir * 1e-3,
                                              p, c, probe_opt);
      for (const auto& o : back.points)
        if (o.stable()) out.candidates.push_back(o);
    } catch (const NumericalError&) {
    }
    double far = ev->param_value;
    for (const auto& o : out.candidates)
      if (dir * (o.param_value - far) < 0) far = o.param_value;
    const double mid = 0.5 * (far + ev->param_value);
    std::stable_sort(out.candidates.begin(), out.candidates.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.param_value - mid) < std::abs(b.param_value - mid);
    });
    return out;
  };

  // Continues `orb` (at eps = orb.param_value) in I from p.current to target.
  auto move = [&](const PeriodicOrbit& orb, const ModelParams& p,
                  double target) -> std::optional<PeriodicOrbit> {
    const CouplingConfig c = with_eps(orb.param_value);
    const double step = target > p.current ? 1e-3 : -1e-3;
    try {
      const OrbitBranch mv = continue_orbit(orb, Parameter::Current, std::min(target, p.current),
                                            std::max(target, p.current), step, p, c, opt);
      const bool lost = std::any_of(mv.events.begin(), mv.events.end(), [](const auto& e) {
        return e.kind == BifurcationKind::SNLC || e.kind == BifurcationKind::Homoclinic;
      });
      const PeriodicOrbit& near = mv.points.back();
      if (lost || std::abs(near.param_value - target) > 2.0 * opt.max_param_step) return std::nullopt;
      ModelParams pn = p;
      pn.current = target;
      ShootingOptions so = opt.shooting;
      so.section_unit = orb.section_unit;
      PeriodicOrbit out = find_orbit(near.anchor, near.period, pn, c, Parameter::Eps, so);
      out.param_value = orb.param_value;
      return out;
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  };

  ModelParams p = p0;
  PeriodicOrbit start = seed;
  start.param = Parameter::Eps;
  start.param_value = get_parameter(Parameter::Eps, p0, c0);
  std::optional<EpsScan> state;

  // Reaches `target` from the current state, splitting the I step if needed.
  std::function<bool(double, int)> reach = [&](double target, int depth) -> bool {
    constexpr int kTries = 4;
    for (int k = 0; k < std::min<int>(kTries, state->candidates.size()); ++k) {
      auto moved = move(state->candidates[k], p, target);
      if (!moved) continue;
      ModelParams pn = p;
      pn.current = target;
      auto sc = scan(*moved, pn);
      if (!sc) continue;
      p = pn;
      state = std::move(sc);
      return true;
    }
    if (depth >= 4) return false;
    const double mid = 0.5 * (p.current + target);
    return reach(mid, depth + 1) && reach(target, depth + 1);
  };

  try {
    state = scan(start, p);
  } catch (const NumericalError& e) {
    curve.notices.push_back(std::string("seed: ") + e.what());
  }
  if (!state) {
    curve.notices.push_back("seed: no " + to_string(kind) + " found in eps search");
    return curve;
  }
  for (double current : grid) {
    if (current != p.current && !reach(current, 0)) {
      curve.notices.push_back("I=" + std::to_string(current) + ": orbit lost while moving in I");
      continue;
    }
    curve.points.push_back({current, state->event_eps});
  }
  return curve;
}

void write_branch_csv(std::ostream& os, const OrbitBranch& b) {
  std::size_t m = 0;
  for (const auto& o : b.points) m = std::max(m, o.multipliers.size());
  os << "param,period,amp_max,stability";
  for (std::size_t i = 1; i <= m; ++i) os << ",mu" << i << "_re,mu" << i << "_im";
  os << '\n';
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& o : b.points) {
    os << num(o.param_value) << ',' << num(o.period) << ',' << num(o.amplitude_max) << ','
       << (o.stable() ? "stable" : "saddle");
    for (std::size_t i = 0; i < m; ++i) {
      if (i < o.multipliers.size())
        os << ',' << num(o.multipliers[i].real()) << ',' << num(o.multipliers[i].imag());
      else
        os << ",,";
    }
    os << '\n';
  }
}

void write_events_csv(std::ostream& os, const std::vector<BifurcationEvent>& events) {
  os << "kind,param,branch_id,diagnostic\n";
  char buf[40];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, "%.17g", e.param_value);
    os << to_string(e.kind) << ',' << buf << ',' << e.branch_id << ',';
    std::snprintf(buf, sizeof buf, "%.17g", e.diagnostic);
    os << buf << '\n';
  }
}

}  // namespace multistab
