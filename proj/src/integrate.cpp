#include "multistab/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "multistab/error.hpp"

namespace multistab {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller
constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

}  // namespace

VectorField make_vector_field(const NetworkSystem& sys) {
  return [&sys](std::span<const double> s, std::span<double> ds) { sys.rhs(s, ds); };
}

void IntegrationSettings::validate() const {
  if (!(abs_tol > 0.0)) throw ConfigError("abs_tol must be > 0");
  if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be > 0");
  if (!(t_transient >= 0.0)) throw ConfigError("t_transient must be >= 0");
  if (!(t_total > t_transient)) throw ConfigError("t_total must exceed t_transient");
  if (!(sample_dt > 0.0)) throw ConfigError("sample_dt must be > 0");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
}

void to_json(nlohmann::json& j, const IntegrationSettings& s) {
  j = {{"abs_tol", s.abs_tol},         {"rel_tol", s.rel_tol},     {"t_transient", s.t_transient},
       {"t_total", s.t_total},         {"sample_dt", s.sample_dt}, {"max_steps", s.max_steps}};
}

void from_json(const nlohmann::json& j, IntegrationSettings& s) {
  if (!j.is_object()) throw ConfigError("integration: expected a JSON object");
  IntegrationSettings d;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ConfigError("integration." + k + " must be a number");
    if (k == "abs_tol") d.abs_tol = v.get<double>();
    else if (k == "rel_tol") d.rel_tol = v.get<double>();
    else if (k == "t_transient") d.t_transient = v.get<double>();
    else if (k == "t_total") d.t_total = v.get<double>();
    else if (k == "sample_dt") d.sample_dt = v.get<double>();
    else if (k == "max_steps") d.max_steps = v.get<long>();
    else throw ConfigError("integration: unknown key '" + k + "'");
  }
  d.validate();
  s = d;
}

Eigen::VectorXd Trajectory::interpolate(double t) const {
  if (times.empty()) throw ConfigError("interpolate: empty trajectory");
  if (t <= times.front()) return states.col(0);
  if (t >= times.back()) return states.col(states.cols() - 1);
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = static_cast<Eigen::Index>(it - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return (1.0 - w) * states.col(k - 1) + w * states.col(k);
}

// ---------------------------------------------------------------------------

Dopri5::Dopri5(VectorField f, int dimension, double abs_tol, double rel_tol)
    : f_(std::move(f)), dim_(dimension), atol_(abs_tol), rtol_(rel_tol) {
  if (dim_ < 1) throw ConfigError("Dopri5: dimension must be >= 1");
  if (!(atol_ > 0.0) || !(rtol_ > 0.0)) throw ConfigError("Dopri5: tolerances must be > 0");
  for (auto* v : {&y_, &y_old_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &yerr_, &r1_,
                  &r2_, &r3_, &r4_, &r5_})
    v->assign(dim_, 0.0);
  h_max_ = std::numeric_limits<double>::infinity();
}

void Dopri5::reset(double t0, std::span<const double> y0, double h0) {
  if (static_cast<int>(y0.size()) != dim_) throw ConfigError("Dopri5: state dimension mismatch");
  t_ = t_old_ = t0;
  std::copy(y0.begin(), y0.end(), y_.begin());
  y_old_ = y_;
  f_(y_, k1_);
  ++n_rhs_;
  for (double v : k1_)
    if (!std::isfinite(v)) throw BlowUpError("vector field is not finite at the initial state", y_);
  err_old_ = 1e-4;
  last_rejected_ = false;
  h_ = h0 > 0.0 ? h0 : initial_step();
  r1_ = y_;
  std::fill(r2_.begin(), r2_.end(), 0.0);
  std::fill(r3_.begin(), r3_.end(), 0.0);
  std::fill(r4_.begin(), r4_.end(), 0.0);
  std::fill(r5_.begin(), r5_.end(), 0.0);
}

double Dopri5::initial_step() {
  // Hairer & Wanner, starting step size heuristic for a method of order 5.
  double dnf = 0.0, dny = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double sk = atol_ + rtol_ * std::abs(y_[i]);
    dnf += (k1_[i] / sk) * (k1_[i] / sk);
    dny += (y_[i] / sk) * (y_[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, h_max_);
  for (int i = 0; i < dim_; ++i) ytmp_[i] = y_[i] + h * k1_[i];
  f_(ytmp_, k2_);
  ++n_rhs_;
  double der2 = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double sk = atol_ + rtol_ * std::abs(y_[i]);
    const double d = (k2_[i] - k1_[i]) / sk;
    der2 += d * d;
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                   : std::pow(0.01 / der12, 1.0 / 5.0);
  return std::min({100.0 * std::abs(h), h1, h_max_});
}

double Dopri5::error_norm(std::span<const double> err, std::span<const double> y0,
                          std::span<const double> y1) const {
  double acc = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double sk = atol_ + rtol_ * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = err[i] / sk;
    acc += e * e;
  }
  return std::sqrt(acc / dim_);
}

void Dopri5::step(double t_limit) {
  const double remaining = t_limit - t_;
  if (remaining <= 0.0) throw ConfigError("Dopri5::step: t_limit must exceed current time");
  const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_));
  for (;;) {
    double h = std::min({h_, remaining, h_max_});
    if (h < h_min && h < remaining) throw DivergenceError("step size underflow at t=" + std::to_string(t_), y_);
    const int n = dim_;
    for (int i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * a21 * k1_[i];
    f_(ytmp_, k2_);
    for (int i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    f_(ytmp_, k3_);
    for (int i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    f_(ytmp_, k4_);
    for (int i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    f_(ytmp_, k5_);
    for (int i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                              a65 * k5_[i]);
    f_(ytmp_, k6_);
    for (int i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] +
                              a76 * k6_[i]);
    f_(ytmp_, k7_);
    n_rhs_ += 6;
    bool finite = true;
    for (int i = 0; i < n; ++i) {
      yerr_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                      e7 * k7_[i]);
      finite = finite && std::isfinite(ytmp_[i]) && std::isfinite(k7_[i]);
    }
    double err = finite ? error_norm(yerr_, y_, ytmp_) : std::numeric_limits<double>::infinity();

    if (err <= 1.0) {
      // accepted
      for (int i = 0; i < n; ++i) {
        const double ydiff = ytmp_[i] - y_[i];
        const double bspl = h * k1_[i] - ydiff;
        r1_[i] = y_[i];
        r2_[i] = ydiff;
        r3_[i] = bspl;
        r4_[i] = ydiff - h * k7_[i] - bspl;
        r5_[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] +
                      d7 * k7_[i]);
      }
      y_old_ = y_;
      y_.swap(ytmp_);
      k1_.swap(k7_);
      t_old_ = t_;
      t_ = (h == remaining) ? t_limit : t_ + h;
      ++n_accepted_;
      err = std::max(err, 1e-10);
      double fac = std::pow(err, -kAlpha) * std::pow(err_old_, kBeta) * kSafety;
      fac = std::clamp(fac, kMinFactor, kMaxFactor);
      if (last_rejected_) fac = std::min(fac, 1.0);
      err_old_ = std::max(err, 1e-4);
      last_rejected_ = false;
      // Keep the controller's step when this one was clipped by t_limit.
      h_ = (h < h_) ? std::max(h_, h * fac) : h * fac;
      if (h_ > h_max_) h_ = h_max_;
      return;
    }
    ++n_rejected_;
    last_rejected_ = true;
    if (!finite) {
      h_ = h * kMinFactor;
    } else {
      const double fac = std::max(kMinFactor, kSafety * std::pow(err, -kAlpha));
      h_ = h * std::min(fac, 1.0);
    }
    if (n_rejected_ > 1000000 && n_rejected_ > 10 * n_accepted_)
      throw DivergenceError("too many rejected steps near t=" + std::to_string(t_), y_);
  }
}

void Dopri5::dense(double t, std::span<double> out) const {
  const double h = t_ - t_old_;
  if (h <= 0.0) {
    std::copy(y_.begin(), y_.end(), out.begin());
    return;
  }
  const double th = (t - t_old_) / h;
  const double th1 = 1.0 - th;
  for (int i = 0; i < dim_; ++i)
    out[i] = r1_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
}

// ---------------------------------------------------------------------------

namespace {

void check_finite(std::span<const double> y, double t) {
  for (double v : y)
    if (!std::isfinite(v))
      throw BlowUpError("state became non-finite at t=" + std::to_string(t),
                        std::vector<double>(y.begin(), y.end()));
}

}  // namespace

Eigen::VectorXd integrate(const VectorField& f, const Eigen::VectorXd& s0,
                          const IntegrationSettings& cfg, const SampleObserver& observer) {
  cfg.validate();
  const int dim = static_cast<int>(s0.size());
  Dopri5 st(f, dim, cfg.abs_tol, cfg.rel_tol);
  st.reset(0.0, {s0.data(), static_cast<size_t>(dim)});
  std::vector<double> buf(dim);
  long k = 0;
  auto sample_time = [&](long idx) { return cfg.t_transient + static_cast<double>(idx) * cfg.sample_dt; };
  const double t_end = cfg.t_total;
  // Samples that coincide with t_total (up to rounding) are emitted.
  const double slack = 1e-9 * cfg.sample_dt;
  if (cfg.t_transient == 0.0 && observer) {
    observer(0.0, st.y());
    k = 1;
  }
  while (st.t() < t_end) {
    st.step(t_end);
    if (st.n_steps() > cfg.max_steps)
      throw DivergenceError("max_steps exceeded at t=" + std::to_string(st.t()),
                            std::vector<double>(st.y().begin(), st.y().end()));
    check_finite(st.y(), st.t());
    if (!observer) continue;
    const double limit = st.t() >= t_end ? t_end + slack : st.t();
    while (sample_time(k) <= limit) {
      const double ts = sample_time(k);
      if (ts >= st.t()) {
        observer(ts, st.y());
      } else {
        st.dense(ts, buf);
        observer(ts, buf);
      }
      ++k;
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(st.y().data(), dim);
}

Trajectory integrate(const VectorField& f, const Eigen::VectorXd& s0,
                     const IntegrationSettings& cfg) {
  cfg.validate();
  const auto expected =
      static_cast<std::size_t>(std::floor((cfg.t_total - cfg.t_transient) / cfg.sample_dt)) + 2;
  std::vector<double> times;
  std::vector<double> flat;
  times.reserve(expected);
  flat.reserve(expected * s0.size());
  integrate(f, s0, cfg, [&](double t, std::span<const double> s) {
    times.push_back(t);
    flat.insert(flat.end(), s.begin(), s.end());
  });
  Trajectory traj;
  traj.times = std::move(times);
  traj.states = Eigen::Map<Eigen::MatrixXd>(flat.data(), s0.size(),
                                            static_cast<Eigen::Index>(traj.times.size()));
  return traj;
}

Trajectory integrate(const NetworkSystem& sys, const NetworkState& s0,
                     const IntegrationSettings& cfg) {
  check_state(s0, sys.coupling());
  return integrate(make_vector_field(sys), s0, cfg);
}

Eigen::VectorXd advance(const VectorField& f, const Eigen::VectorXd& s0, double t_end,
                        double abs_tol, double rel_tol, long max_steps) {
  const int dim = static_cast<int>(s0.size());
  if (t_end <= 0.0) return s0;
  Dopri5 st(f, dim, abs_tol, rel_tol);
  st.reset(0.0, {s0.data(), static_cast<size_t>(dim)});
  while (st.t() < t_end) {
    st.step(t_end);
    if (st.n_steps() > max_steps)
      throw DivergenceError("max_steps exceeded", std::vector<double>(st.y().begin(), st.y().end()));
    check_finite(st.y(), st.t());
  }
  return Eigen::Map<const Eigen::VectorXd>(st.y().data(), dim);
}

// ---------------------------------------------------------------------------

namespace {

bool wanted(double g0, double g1, int direction) {
  const bool up = g0 < 0.0 && g1 >= 0.0;
  const bool down = g0 > 0.0 && g1 <= 0.0;
  if (direction > 0) return up;
  if (direction < 0) return down;
  return up || down;
}

}  // namespace

std::vector<Crossing> locate_crossings(const Trajectory& traj, const SectionFn& section,
                                       int direction, double scale) {
  std::vector<Crossing> out;
  if (traj.size() < 2) return out;
  const int dim = traj.dimension();
  Eigen::VectorXd s(dim);
  auto g_at = [&](const Eigen::VectorXd& v) { return section({v.data(), static_cast<size_t>(dim)}); };
  double g_prev = g_at(traj.states.col(0));
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const Eigen::VectorXd a = traj.states.col(static_cast<Eigen::Index>(k - 1));
    const Eigen::VectorXd b = traj.states.col(static_cast<Eigen::Index>(k));
    const double g_now = g_at(b);
    if (wanted(g_prev, g_now, direction)) {
      // Illinois iteration on the linear interpolant.
      double lo = 0.0, hi = 1.0, glo = g_prev, ghi = g_now, w = 0.0;
      int side = 0;
      for (int it = 0; it < 200; ++it) {
        w = (lo * ghi - hi * glo) / (ghi - glo);
        if (!(w > lo && w < hi)) w = 0.5 * (lo + hi);
        s = (1.0 - w) * a + w * b;
        const double g = g_at(s);
        if (std::abs(g) < 1e-9 * scale || hi - lo < 1e-15) break;
        if ((g < 0.0) == (glo < 0.0)) {
          lo = w;
          glo = g;
          if (side == -1) ghi *= 0.5;
          side = -1;
        } else {
          hi = w;
          ghi = g;
          if (side == 1) glo *= 0.5;
          side = 1;
        }
      }
      const double t = traj.times[k - 1] + w * (traj.times[k] - traj.times[k - 1]);
      out.push_back({t, s, g_now > g_prev ? 1 : -1});
    }
    g_prev = g_now;
  }
  return out;
}

Crossing refine_crossing(const Dopri5& st, const SectionFn& section, double g_prev, double g_now,
                         double scale) {
  std::vector<double> buf(st.dimension());
  double lo = st.t_prev(), hi = st.t();
  double glo = g_prev, ghi = g_now, t = hi;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    t = (lo * ghi - hi * glo) / (ghi - glo);
    if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
    st.dense(t, buf);
    const double g = section(buf);
    if (std::abs(g) < 1e-9 * scale || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi))
      break;
    if ((g < 0.0) == (glo < 0.0)) {
      lo = t;
      glo = g;
      if (side == -1) ghi *= 0.5;
      side = -1;
    } else {
      hi = t;
      ghi = g;
      if (side == 1) glo *= 0.5;
      side = 1;
    }
  }
  st.dense(t, buf);
  return {t, Eigen::Map<Eigen::VectorXd>(buf.data(), st.dimension()), g_now > g_prev ? 1 : -1};
}

std::vector<Crossing> locate_crossings(const VectorField& f, const Eigen::VectorXd& s0,
                                       double t_end, const SectionFn& section, int direction,
                                       double abs_tol, double rel_tol, double scale) {
  std::vector<Crossing> out;
  const int dim = static_cast<int>(s0.size());
  Dopri5 st(f, dim, abs_tol, rel_tol);
  st.reset(0.0, {s0.data(), static_cast<size_t>(dim)});
  double g_prev = section(st.y());
  while (st.t() < t_end) {
    st.step(t_end);
    check_finite(st.y(), st.t());
    const double g_now = section(st.y());
    if (wanted(g_prev, g_now, direction)) out.push_back(refine_crossing(st, section, g_prev, g_now, scale));
    g_prev = g_now;
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.dimension() / 2;
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i << ",y" << i;
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << traj.times[k];
    for (int r = 0; r < traj.dimension(); ++r) os << ',' << traj.states(r, static_cast<Eigen::Index>(k));
    os << '\n';
  }
}

}  // namespace multistab
