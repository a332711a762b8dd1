#include "multistab/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "multistab/error.hpp"
#include "multistab/parallel.hpp"

namespace multistab {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

constexpr double kComplexTol = 1e-10;

bool is_complex(const Complex& z) { return std::abs(z.imag()) > kComplexTol * std::max(1.0, std::abs(z)); }

}  // namespace

std::vector<Complex> sorted_eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  std::vector<Complex> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return ev;
}

EigenSignature signature_of(const std::vector<Complex>& ev) {
  EigenSignature s;
  for (const auto& z : ev) {
    if (std::abs(z.real()) < kMarginalThreshold) {
      ++s.marginal;
    } else if (is_complex(z)) {
      // counted once per conjugate pair
      if (z.imag() > 0.0) (z.real() > 0.0 ? s.unstable_pairs : s.stable_pairs) += 1;
    } else {
      (z.real() > 0.0 ? s.positive_real : s.negative_real) += 1;
    }
  }
  return s;
}

std::string signature_label(const EigenSignature& sig, int n_units) {
  if (sig.marginal > 0) return "marginal";
  const int n_focus = sig.unstable_pairs;
  const int n_saddle = sig.positive_real;
  const int rem = sig.negative_real - n_saddle;
  if (sig.stable_pairs != 0 || rem < 0 || rem % 2 != 0 || n_focus + n_saddle + rem / 2 != n_units)
    return "unclassified";
  std::string out;
  auto add = [&](const char* name, int count) {
    for (int i = 0; i < count; ++i) {
      if (!out.empty()) out += '-';
      out += name;
    }
  };
  add("saddle", n_saddle);
  add("node", rem / 2);
  add("focus", n_focus);
  return out;
}

std::string planar_label(const std::vector<Complex>& ev) {
  if (ev.size() != 2) throw ConfigError("planar_label: expected two eigenvalues");
  const auto s = signature_of(ev);
  if (s.marginal) return "marginal";
  if (s.unstable_pairs) return "focus";
  if (s.stable_pairs) return "stable-focus";
  if (s.positive_real == 1) return "saddle";
  if (s.negative_real == 2) return "node";
  return "repeller";
}

bool Equilibrium::stable() const { return !eigenvalues.empty() && eigenvalues.front().real() < 0.0; }

EigenSignature Equilibrium::signature() const { return signature_of(eigenvalues); }

// ---------------------------------------------------------------------------

namespace {

/// Newton iteration plus eigenvalues; no labels.
Equilibrium newton_core(const NetworkState& guess, const ModelParams& p, const CouplingConfig& c,
                        const NewtonOptions& opt) {
  check_state(guess, c);
  NetworkSystem sys(p, c);
  const int d = sys.dimension();
  NetworkState s = guess, f(d), trial(d), ft(d);
  Matrix j;
  auto eval = [&](const NetworkState& x, NetworkState& out) {
    sys.rhs({x.data(), static_cast<size_t>(d)}, {out.data(), static_cast<size_t>(d)});
  };
  eval(s, f);
  double res = inf_norm(f);
  auto last_state = [&] { return std::vector<double>(s.data(), s.data() + d); };
  int it = 0;
  for (; it < opt.max_iterations && !(res < opt.tolerance); ++it) {
    sys.jacobian({s.data(), static_cast<size_t>(d)}, j);
    Eigen::FullPivLU<Matrix> lu(j);
    if (!lu.isInvertible() || lu.rcond() < 1e-15)
      throw SingularJacobianError("refine: singular Jacobian (candidate fold)", last_state());
    const NetworkState dx = lu.solve(-f);
    double lambda = 1.0;
    double res_t = std::numeric_limits<double>::infinity();
    for (;;) {
      trial = s + lambda * dx;
      if (trial.allFinite()) {
        eval(trial, ft);
        res_t = inf_norm(ft);
        if (std::isfinite(res_t) && res_t < res) break;
      }
      lambda *= 0.5;
      if (lambda < opt.min_damping) break;
    }
    if (!(res_t < res)) {
      // Residual at the round-off floor: accept if already small enough.
      if (res < 1e-10) break;
      throw ConvergenceError("refine: damping floor reached with residual " + std::to_string(res),
                             last_state());
    }
    s = trial;
    f = ft;
    res = res_t;
    if (inf_norm(lambda * dx) < 1e-14 * (1.0 + inf_norm(s)) && res < 1e-10) break;
  }
  if (!(res < 1e-10))
    throw ConvergenceError("refine: no convergence after " + std::to_string(it) +
                               " iterations, residual " + std::to_string(res),
                           last_state());
  Equilibrium eq;
  eq.state = s;
  eq.residual_norm = res;
  sys.jacobian({s.data(), static_cast<size_t>(d)}, j);
  eq.eigenvalues = sorted_eigenvalues(j);
  return eq;
}

void label_with(Equilibrium& eq, const std::vector<UncoupledPoint>& pts) {
  const int n = static_cast<int>(eq.state.size() / 2);
  const auto sig = eq.signature();
  eq.signature_label = signature_label(sig, n);
  if (sig.marginal > 0) {
    eq.class_label = "marginal";
    return;
  }
  std::string label;
  for (int i = 0; i < n; ++i) {
    const double x = eq.state[2 * i], y = eq.state[2 * i + 1];
    const UncoupledPoint* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& u : pts) {
      const double dd = std::hypot(x - u.x, y - u.y);
      if (dd < best_d) {
        best_d = dd;
        best = &u;
      }
    }
    if (i) label += '-';
    label += best ? best->name : "unknown";
  }
  eq.class_label = label;
}

}  // namespace

std::vector<UncoupledPoint> uncoupled_fixed_points(const ModelParams& p) {
  p.validate();
  auto g = [&](double x) { return local_rhs(x, activation(x, p.n_half, p.k_n), p).dx; };
  std::vector<double> roots;
  const double lo = -200.0, hi = 150.0, dx = 0.005;
  double x0 = lo, g0 = g(x0);
  for (double x1 = lo + dx; x1 <= hi; x1 += dx) {
    const double g1 = g(x1);
    if (g0 == 0.0) {
      roots.push_back(x0);
    } else if ((g0 < 0.0) != (g1 < 0.0) && g1 != 0.0) {
      double a = x0, b = x1, ga = g0;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if ((gm < 0.0) == (ga < 0.0)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    g0 = g1;
  }
  std::vector<UncoupledPoint> out;
  const auto single = CouplingConfig::single();
  for (double r : roots) {
    NetworkState s(2);
    s << r, activation(r, p.n_half, p.k_n);
    try {
      auto eq = newton_core(s, p, single, NewtonOptions{});
      out.push_back({eq.state[0], eq.state[1], planar_label(eq.eigenvalues)});
    } catch (const NumericalError&) {
      Matrix j = network_jacobian(s, p, single);
      out.push_back({s[0], s[1], planar_label(sorted_eigenvalues(j))});
    }
  }
  return out;
}

Equilibrium refine(const NetworkState& guess, const ModelParams& p, const CouplingConfig& c,
                   const NewtonOptions& opt) {
  Equilibrium eq = newton_core(guess, p, c, opt);
  label_with(eq, uncoupled_fixed_points(p));
  return eq;
}

std::string classify(Equilibrium& eq, const ModelParams& p) {
  label_with(eq, uncoupled_fixed_points(p));
  return eq.class_label;
}

std::vector<Equilibrium> enumerate(const ModelParams& p, const CouplingConfig& c, int workers) {
  const int n = c.n_units();
  if (n > 12) throw ConfigError("enumerate: seeding 3^N combinations requires N <= 12");
  const auto pts = uncoupled_fixed_points(p);
  const auto k = static_cast<std::size_t>(pts.size());
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= k;
  std::vector<std::optional<Equilibrium>> found(total);
  parallel_for(total, workers, [&](std::size_t idx) {
    NetworkState seed(2 * n);
    std::size_t code = idx;
    for (int i = 0; i < n; ++i) {
      const auto& u = pts[code % k];
      code /= k;
      seed[2 * i] = u.x;
      seed[2 * i + 1] = u.y;
    }
    try {
      found[idx] = newton_core(seed, p, c, NewtonOptions{});
    } catch (const NumericalError&) {
    }
  });
  std::vector<Equilibrium> out;
  for (auto& f : found) {
    if (!f) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Equilibrium& e) {
      return inf_norm(e.state - f->state) < 1e-6;
    });
    if (dup) continue;
    label_with(*f, pts);
    out.push_back(std::move(*f));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

int unstable_complex_count(const std::vector<Complex>& ev) {
  int count = 0;
  for (const auto& z : ev)
    if (is_complex(z) && z.imag() > 0.0 && z.real() > 0.0) ++count;
  return count;
}

/// Complex eigenvalue with the smallest |Re|, or NaN if there is none.
double closest_complex_real(const std::vector<Complex>& ev) {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (const auto& z : ev)
    if (is_complex(z) && (std::isnan(best) || std::abs(z.real()) < std::abs(best))) best = z.real();
  return best;
}

/// Augmented problem F(state, lambda) = 0 for pseudo-arclength continuation.
class AugmentedSystem {
 public:
  AugmentedSystem(Parameter param, ModelParams p, CouplingConfig c)
      : param_(param), p_(p), c_(std::move(c)), d_(c_.dimension()) {}

  int dimension() const { return d_; }

  NetworkSystem at(double lambda) const {
    ModelParams p = p_;
    CouplingConfig c = c_;
    set_parameter(param_, lambda, p, c);
    return NetworkSystem(p, c);
  }

  ModelParams params_at(double lambda) const {
    ModelParams p = p_;
    CouplingConfig c = c_;
    set_parameter(param_, lambda, p, c);
    return p;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& u) const {
    const auto sys = at(u[d_]);
    Eigen::VectorXd f(d_);
    sys.rhs({u.data(), static_cast<size_t>(d_)}, {f.data(), static_cast<size_t>(d_)});
    return f;
  }

  /// d x (d+1) Jacobian [J | dF/dlambda].
  Matrix jacobian(const Eigen::VectorXd& u) const {
    Matrix out(d_, d_ + 1);
    const auto sys = at(u[d_]);
    Matrix j;
    sys.jacobian({u.data(), static_cast<size_t>(d_)}, j);
    out.leftCols(d_) = j;
    const double lam = u[d_];
    double delta = 1e-7 * (1.0 + std::abs(lam));
    Eigen::VectorXd up = u, um = u;
    up[d_] = lam + delta;
    um[d_] = lam - delta;
    if (param_ != Parameter::Current && um[d_] < 0.0) {
      // one-sided difference at the eps >= 0 boundary
      um[d_] = lam;
      out.col(d_) = (residual(up) - residual(um)) / delta;
    } else {
      out.col(d_) = (residual(up) - residual(um)) / (2.0 * delta);
    }
    return out;
  }

  Eigen::VectorXd tangent(const Eigen::VectorXd& u, const Eigen::VectorXd& orient) const {
    Matrix a(d_ + 1, d_ + 1);
    a.topRows(d_) = jacobian(u);
    a.row(d_) = orient.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d_ + 1);
    rhs[d_] = 1.0;
    Eigen::VectorXd t = a.fullPivLu().solve(rhs);
    t.normalize();
    if (t.dot(orient) < 0.0) t = -t;
    return t;
  }

  /// Newton on [F(u); t.(u - u_pred)] = 0.
  std::optional<Eigen::VectorXd> correct(const Eigen::VectorXd& u_pred,
                                         const Eigen::VectorXd& t) const {
    Eigen::VectorXd u = u_pred;
    for (int it = 0; it < 12; ++it) {
      Eigen::VectorXd f;
      Matrix a(d_ + 1, d_ + 1);
      try {
        f = residual(u);
        a.topRows(d_) = jacobian(u);
      } catch (const ConfigError&) {
        return std::nullopt;
      }
      const double res = inf_norm(f);
      if (!std::isfinite(res)) return std::nullopt;
      Eigen::VectorXd g(d_ + 1);
      g.head(d_) = f;
      g[d_] = t.dot(u - u_pred);
      a.row(d_) = t.transpose();
      Eigen::VectorXd du = a.fullPivLu().solve(-g);
      if (!du.allFinite()) return std::nullopt;
      u += du;
      if (inf_norm(du) < 1e-11 * (1.0 + inf_norm(u))) {
        try {
          if (inf_norm(residual(u)) < 1e-10) return u;
        } catch (const ConfigError&) {
          return std::nullopt;
        }
      }
    }
    try {
      if (inf_norm(residual(u)) < 1e-10) return u;
    } catch (const ConfigError&) {
    }
    return std::nullopt;
  }

  std::vector<Complex> eigenvalues(const Eigen::VectorXd& u) const {
    const auto sys = at(u[d_]);
    Matrix j;
    sys.jacobian({u.data(), static_cast<size_t>(d_)}, j);
    return sorted_eigenvalues(j);
  }

 private:
  Parameter param_;
  ModelParams p_;
  CouplingConfig c_;
  int d_;
};

}  // namespace

EquilibriumBranch continue_branch(const Equilibrium& start, Parameter param, double target,
                                  double step, const ModelParams& p0, const CouplingConfig& c0,
                                  const BranchOptions& opt) {
  check_state(start.state, c0);
  if (!(step > 0.0)) throw ConfigError("continue_branch: step must be > 0");
  const AugmentedSystem sys(param, p0, c0);
  const int d = sys.dimension();
  const double lam0 = get_parameter(param, p0, c0);
  const double dir = target >= lam0 ? 1.0 : -1.0;
  const double lam_lo = std::min(lam0, target), lam_hi = std::max(lam0, target);

  EquilibriumBranch branch;
  const bool relabel = param == Parameter::Current;
  auto pts = uncoupled_fixed_points(p0);
  auto make_point = [&](const Eigen::VectorXd& u) {
    Equilibrium eq;
    eq.state = u.head(d);
    eq.residual_norm = inf_norm(sys.residual(u));
    eq.eigenvalues = sys.eigenvalues(u);
    if (relabel) pts = uncoupled_fixed_points(sys.params_at(u[d]));
    label_with(eq, pts);
    return BranchPoint{u[d], std::move(eq)};
  };

  Eigen::VectorXd u(d + 1);
  u.head(d) = start.state;
  u[d] = lam0;
  if (inf_norm(sys.residual(u)) >= 1e-10) {
    auto eq = refine(start.state, p0, c0);
    u.head(d) = eq.state;
  }
  Eigen::VectorXd e_lam = Eigen::VectorXd::Zero(d + 1);
  e_lam[d] = dir;
  Eigen::VectorXd t = sys.tangent(u, e_lam);
  branch.points.push_back(make_point(u));

  // Bisection along the arclength from `a` (tangent ta) over [0, s_hi] for
  // the first point where `changed` flips to true.
  auto bisect = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& ta, double s_hi,
                    auto&& changed, auto&& done) {
    double lo = 0.0, hi = s_hi;
    Eigen::VectorXd best = a;
    for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, s_hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      auto um = sys.correct(a + mid * ta, ta);
      if (!um) break;
      best = *um;
      if (done(*um)) break;
      if (changed(*um)) hi = mid;
      else lo = mid;
    }
    return best;
  };

  double h = step;
  int successes = 0;
  while (static_cast<int>(branch.points.size()) < opt.max_points) {
    auto un = sys.correct(u + h * t, t);
    if (!un) {
      h *= 0.5;
      successes = 0;
      if (h < opt.min_step) {
        branch.truncated = true;
        branch.notice = "step size fell below min_step at " + to_string(param) + "=" +
                        std::to_string(u[d]);
        break;
      }
      continue;
    }
    Eigen::VectorXd tn = sys.tangent(*un, t);

    // Stop exactly at the target parameter.
    if ((*un)[d] * dir > target * dir && tn[d] * dir > 0.0) {
      const double frac = (target - u[d]) / ((*un)[d] - u[d]);
      Eigen::VectorXd guess = u + frac * ((*un) - u);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(d + 1);
      e[d] = 1.0;
      guess[d] = target;
      if (auto uf = sys.correct(guess, e)) un = uf;
      tn = sys.tangent(*un, t);
    }

    const auto ev_a = sys.eigenvalues(u);
    const auto ev_b = sys.eigenvalues(*un);
    const double s_ab = h;

    if (tn[d] * t[d] < 0.0) {
      const double sign_a = t[d];
      auto at = bisect(
          u, t, s_ab, [&](const Eigen::VectorXd& x) { return sys.tangent(x, t)[d] * sign_a < 0.0; },
          [&](const Eigen::VectorXd&) { return false; });
      const auto ev = sys.eigenvalues(at);
      double smallest = std::numeric_limits<double>::infinity();
      for (const auto& z : ev) smallest = std::min(smallest, std::abs(z));
      branch.events.push_back({BifurcationKind::Fold, at[d], 0, smallest, ""});
    }

    const int na = unstable_complex_count(ev_a), nb = unstable_complex_count(ev_b);
    if (na != nb) {
      auto at = bisect(
          u, t, s_ab,
          [&](const Eigen::VectorXd& x) { return unstable_complex_count(sys.eigenvalues(x)) != na; },
          [&](const Eigen::VectorXd& x) {
            const double re = closest_complex_real(sys.eigenvalues(x));
            return std::isfinite(re) && std::abs(re) < 1e-8;
          });
      const auto ev = sys.eigenvalues(at);
      double freq = 0.0;
      for (const auto& z : ev)
        if (is_complex(z) && std::abs(z.real()) < std::abs(closest_complex_real(ev)) + 1e-15)
          freq = std::abs(z.imag());
      branch.events.push_back({BifurcationKind::Hopf, at[d], 0, freq, ""});
    }

    bool outside = false;
    for (int i = 0; i < d; i += 2) {
      const double x = (*un)[i], y = (*un)[i + 1];
      outside = outside || x < opt.x_min || x > opt.x_max || y < opt.y_min || y > opt.y_max;
    }
    if (outside) {
      branch.truncated = true;
      branch.notice = "branch left the state-space box at " + to_string(param) + "=" +
                      std::to_string((*un)[d]);
      break;
    }

    branch.points.push_back(make_point(*un));
    u = *un;
    t = tn;
    const double lam = u[d];
    if (std::abs(lam - target) < 1e-14 * std::max(1.0, std::abs(target))) break;
    if (lam < lam_lo - 1e-12 || lam > lam_hi + 1e-12) break;
    if (++successes >= 3) {
      h = std::min(2.0 * h, opt.max_step);
      successes = 0;
    }
  }
  return branch;
}

void write_equilibria_json(std::ostream& os, const std::vector<Equilibrium>& eqs) {
  auto arr = nlohmann::json::array();
  for (const auto& e : eqs) {
    auto ev = nlohmann::json::array();
    for (const auto& z : e.eigenvalues) ev.push_back({z.real(), z.imag()});
    arr.push_back({{"state", std::vector<double>(e.state.data(), e.state.data() + e.state.size())},
                   {"eigenvalues", ev},
                   {"label", e.class_label},
                   {"signature_label", e.signature_label},
                   {"residual", e.residual_norm}});
  }
  os << arr.dump(2) << '\n';
}

}  // namespace multistab
