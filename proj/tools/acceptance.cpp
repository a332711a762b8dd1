// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion either passes or is listed in
// --expect-fail; an expected failure that passes is reported as XPASS and
// also makes the run fail, so the list cannot go stale silently.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multistab/attractors.hpp"
#include "multistab/config.hpp"
#include "multistab/continuation.hpp"
#include "multistab/equilibria.hpp"
#include "multistab/error.hpp"
#include "multistab/geometry.hpp"
#include "multistab/integrate.hpp"
#include "multistab/lyapunov.hpp"
#include "multistab/parallel.hpp"

using namespace multistab;

namespace {

// Compute budget. Integration windows are shorter than the library defaults
// (7000/40000); the attractors of N=2 settle within ~1000 time units.
struct Budget {
  int n2_ics = 1000;
  double n2_transient = 2000, n2_total = 5000;
  double lyapunov_t = 5000;
  int n10_ics = 100;
  double n10_transient = 1000, n10_total = 3000;
  double n10_lyapunov_t = 3000;
  int ablation_ics = 100;
  double ablation_transient = 1500, ablation_total = 3000;
  int workers = 1;
  std::string n10_topology = "configs/n10_topology.json";
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

NetworkState state4(double a, double b, double c, double d) {
  NetworkState s(4);
  s << a, b, c, d;
  return s;
}

NetworkState settle(const NetworkState& s0, const CouplingConfig& c, double t = 1000.0) {
  const NetworkSystem sys(ModelParams{}, c);
  return advance(make_vector_field(sys), s0, t);
}

const NetworkState kLaLaIc = state4(-27.0, 0.39, -20.0, 0.45);
const NetworkState kLaSaIc = state4(-27.0, 0.39, -64.0, 0.0);

const BifurcationEvent* first_event(const std::vector<BifurcationEvent>& ev, BifurcationKind k) {
  for (const auto& e : ev)
    if (e.kind == k) return &e;
  return nullptr;
}

int count_large(const FeatureVector& f) {
  return static_cast<int>(std::count_if(f.per_unit_amplitude.begin(), f.per_unit_amplitude.end(),
                                        [](double a) { return a >= kLargeAmplitude; }));
}

// ----------------------------------------------------------------- criteria

Outcome ac1(const Budget&) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  const auto eqs = enumerate(p, CouplingConfig::single());
  struct Target {
    const char* name;
    double x, y;
    EigenSignature sig;
  };
  const Target targets[] = {{"node", -63.3, 0.0005, {0, 2, 0, 0, 0}},
                            {"saddle", -58.6, 0.001, {1, 1, 0, 0, 0}},
                            {"focus", -27.1, 0.4, {0, 0, 1, 0, 0}}};
  bool ok = eqs.size() == 3;
  std::string d;
  for (std::size_t k = 0; k < 3 && k < eqs.size(); ++k) {
    const auto& e = eqs[k];
    const auto& t = targets[k];
    const bool pos = std::abs(e.state[0] - t.x) <= 0.1 && std::abs(e.state[1] - t.y) <= 0.005;
    const bool sig = e.signature() == t.sig && e.class_label == t.name;
    ok = ok && pos && sig;
    d += fmt("%s (%.3f, %.5f) vs (%.1f, %.4f)%s; ", t.name, e.state[0], e.state[1], t.x, t.y,
             sig ? "" : " wrong signature");
  }
  const double rt = seconds_since(t0);
  ok = ok && rt < 1.0;
  return {ok, d + fmt("%.3f s", rt)};
}

Outcome ac2(const Budget&) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  const auto eqs = enumerate(p, CouplingConfig::pair(0.05));
  const auto unc = uncoupled_fixed_points(p);
  int symmetric = 0;
  double worst = 0.0;
  for (const auto& e : eqs) {
    if (std::abs(e.state[0] - e.state[2]) > 1e-6) continue;
    ++symmetric;
    for (int u = 0; u < 2; ++u) {
      double best = 1e300;
      for (const auto& q : unc)
        best = std::min(best, std::max(std::abs(q.x - e.state[2 * u]), std::abs(q.y - e.state[2 * u + 1])));
      worst = std::max(worst, best);
    }
  }
  const double rt = seconds_since(t0);
  const bool ok = eqs.size() == 9 && symmetric == 3 && worst < 1e-8 && rt < 5.0;
  return {ok, fmt("%zu equilibria, %d symmetric, max projection error %.1e; %.2f s", eqs.size(),
                  symmetric, worst, rt)};
}

Outcome ac3(const Budget&) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  const auto lala = find_orbit(settle(kLaLaIc, c), 0.0, p, c);
  const auto lasa = find_orbit(settle(kLaSaIc, c), 0.0, p, c);

  OrbitContinuationOptions up_once;
  up_once.stop_after_event = true;
  const auto la_up = continue_orbit(lala, Parameter::Eps, 0.0, 0.35, 1e-3, p, c, up_once);
  const auto la_down = continue_orbit(lala, Parameter::Eps, 0.0, 0.35, -1e-3, p, c);
  // LA-SA upward folds at its SNLC and returns along the saddle branch.
  const auto sa_up = continue_orbit(lasa, Parameter::Eps, 0.0, 0.35, 1e-3, p, c);
  const auto sa_down = continue_orbit(lasa, Parameter::Eps, 0.0, 0.35, -1e-3, p, c);

  double hopf = NAN;
  for (const auto& e : enumerate(p, CouplingConfig::pair(0.05)))
    if (e.class_label == "focus-focus") {
      const auto br = continue_branch(e, Parameter::Eps, 0.6, 0.01, p, CouplingConfig::pair(0.05));
      if (const auto* ev = first_event(br.events, BifurcationKind::Hopf)) hopf = ev->param_value;
    }

  auto value = [](const std::vector<BifurcationEvent>& ev, BifurcationKind k) {
    const auto* e = first_event(ev, k);
    return e ? e->param_value : NAN;
  };
  struct Item {
    const char* name;
    double got, want, tol;
  };
  const Item items[] = {
      {"SNLC", value(la_down.events, BifurcationKind::SNLC), 0.06432, 0.0005},
      {"HOM(saddle)", value(sa_up.events, BifurcationKind::Homoclinic), 0.07285, 0.003},
      {"HOM(LA-SA)", value(sa_down.events, BifurcationKind::Homoclinic), 0.1175, 0.003},
      {"SNLC(LA-SA)", value(sa_up.events, BifurcationKind::SNLC), 0.2179, 0.001},
      {"TORUS", value(la_up.events, BifurcationKind::Torus), 0.2701, 0.002},
      {"HOPF", hopf, 0.4088, 0.002},
  };
  bool ok = true;
  std::string d;
  for (const auto& it : items) {
    const bool good = std::abs(it.got - it.want) <= it.tol;
    ok = ok && good;
    d += fmt("%s %.5f%s; ", it.name, it.got, good ? "" : " (out of tolerance)");
  }
  const double rt = seconds_since(t0);
  ok = ok && rt < 600.0;
  return {ok, d + fmt("%.0f s", rt)};
}

Outcome ac4(const Budget& b) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  CensusOptions o;
  o.n_ics = b.n2_ics;
  o.integration.t_transient = b.n2_transient;
  o.integration.t_total = b.n2_total;
  o.compute_lyapunov = false;
  o.workers = b.workers;
  const auto ics = sample_ics(2, o.n_ics, o.seed);
  const std::vector<std::pair<double, int>> expected = {{0.05, 1},  {0.1, 2},  {0.117485, 4},
                                                        {0.15, 4},  {0.25, 2}, {0.3, 2},
                                                        {0.45, 1}};
  bool ok = true;
  std::string d;
  for (const auto& [eps, want] : expected) {
    const auto c = CouplingConfig::pair(eps);
    const auto r = census_at(p, c, ics, o);
    bool good = r.n_attractors() == want;
    std::string extra;
    if (eps == 0.3) {
      // SS-SS plus a quasiperiodic LA-LA
      bool qp = false, ss = false;
      for (const auto& a : r.attractors) {
        if (a.label == "SS-SS") ss = true;
        if (a.label == "LA-LA") {
          LyapunovSettings ls;
          ls.t_average = b.lyapunov_t;
          const auto sp = spectrum(a.representative_state, 4, p, c, ls);
          qp = classify(sp, a.features) == DynamicalClass::Quasiperiodic;
        }
      }
      good = good && qp && ss;
      extra = qp ? " qp" : " (LA-LA not quasiperiodic)";
    }
    ok = ok && good;
    d += fmt("%g:%d%s%s ", eps, r.n_attractors(), good ? "" : fmt("!=%d", want).c_str(), extra.c_str());
  }
  const double rt = seconds_since(t0);
  ok = ok && rt < 900.0;
  return {ok, d + fmt("(%d ICs) %.0f s", b.n2_ics, rt)};
}

Outcome ac5(const Budget& b) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  LyapunovSettings ls;
  ls.t_average = b.lyapunov_t;
  const auto c15 = CouplingConfig::pair(0.15);
  const auto c3 = CouplingConfig::pair(0.3);
  const auto c05 = CouplingConfig::pair(0.05);
  const auto lala = spectrum(settle(kLaLaIc, c15), 4, p, c15, ls);
  const auto torus = spectrum(settle(kLaSaIc, c3), 4, p, c3, ls);
  const auto node = spectrum(enumerate(p, c05).front().state, 4, p, c05, ls);
  const auto& l = lala.exponents;
  const auto& t = torus.exponents;
  const auto& n = node.exponents;
  const bool a = std::abs(l[0]) <= 1e-3 && l[1] < -1e-3 && l[2] < 0 && l[3] < 0;
  const bool q = std::abs(t[0]) <= 1e-3 && std::abs(t[1]) <= 1e-3 && t[2] < -1e-3;
  const bool e = std::all_of(n.begin(), n.end(), [](double v) { return v < 0; });
  const double rt = seconds_since(t0);
  const bool ok = a && q && e && rt < 120.0;
  return {ok, fmt("LA-LA (%.4f, %.3f, %.3f, %.3f); torus (%.4f, %.4f, %.3f, %.3f); node max %.3f; %.0f s",
                  l[0], l[1], l[2], l[3], t[0], t[1], t[2], t[3], n[0], rt)};
}

Outcome ac6(const Budget&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scan = single_unit_scan(2.0, 6.0, ModelParams{});
  const auto* fold = first_event(scan.events, BifurcationKind::Fold);
  const auto* hom = first_event(scan.events, BifurcationKind::Homoclinic);
  const double f = fold ? fold->param_value : NAN;
  const double h = hom ? hom->param_value : NAN;
  const bool fo = std::abs(f - 4.8) <= 0.05;
  const bool ho = std::abs(h - 3.09) <= 0.05;
  const double rt = seconds_since(t0);
  return {fo && ho && rt < 120.0,
          fmt("fold I=%.4f%s; homoclinic I=%.4f%s (period %.1f); %.0f s", f,
              fo ? "" : " (expected 4.8)", h, ho ? "" : " (expected 3.09)", hom ? hom->diagnostic : NAN, rt)};
}

Outcome ac7(const Budget&) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  const auto c = CouplingConfig::pair(0.15);
  const auto lala = find_orbit(settle(kLaLaIc, c), 0.0, p, c);
  const auto lasa = find_orbit(settle(kLaSaIc, c), 0.0, p, c);
  const auto a = two_param_bracket(lala, {2.0, 2.4, 2.8, 3.0, 3.05, 3.08}, BifurcationKind::SNLC,
                                   0.0, 0.6, -1, p, c);
  const auto s = two_param_bracket(lasa, {2.0, 2.5, 3.0, 3.5, 4.0, 4.3, 4.45, 4.5},
                                   BifurcationKind::SNLC, 0.0, 0.6, +1, p, c);
  // Endpoint: the curve point with the smallest eps must be close to eps = 0.
  auto check = [](const TwoParamCurve& cv, double target, std::string& d, const char* name) {
    if (cv.points.empty()) {
      d += fmt("%s: no points; ", name);
      return false;
    }
    const auto end = *std::min_element(cv.points.begin(), cv.points.end(),
                                       [](auto& x, auto& y) { return x.eps < y.eps; });
    const bool ok = end.eps <= 0.01 && std::abs(end.current - target) <= 0.1;
    d += fmt("%s end (eps %.4f, I %.3f) vs I %.2f%s; ", name, end.eps, end.current, target,
             ok ? "" : " (out of tolerance)");
    return ok;
  };
  std::string d;
  const bool ok1 = check(a, 3.09, d, "LA-LA SNLC");
  const bool ok2 = check(s, 4.8, d, "LA-SA SNLC");
  const double rt = seconds_since(t0);
  return {ok1 && ok2 && rt < 1200.0, d + fmt("%.0f s", rt)};
}

Outcome ac8(const Budget&) {
  ModelParams p;
  const auto c15 = CouplingConfig::pair(0.15);
  const auto orb15 = find_orbit(settle(kLaLaIc, c15), 0.0, p, c15);
  const auto br = continue_orbit(orb15, Parameter::Eps, 0.065, 0.15, -1e-3, p, c15);
  if (br.points.empty() || std::abs(br.points.back().param_value - 0.065) > 1e-9)
    return {false, "continuation did not reach eps=0.065"};
  const auto& orb65 = br.points.back();
  const auto m = saddle_manifolds(p);

  std::string d;
  bool ok = true;
  double mean_s[2] = {0, 0};
  int idx = 0;
  for (const auto* o : {&orb65, &orb15}) {
    const auto c = CouplingConfig::pair(o->param_value);
    IntegrationSettings is;
    is.t_transient = 0;
    is.t_total = 10 * o->period;
    is.sample_dt = 0.005;
    const auto traj = integrate(NetworkSystem(p, c), o->anchor, is);
    double s_sum = 0;
    int s_n = 0;
    for (int u = 0; u < 2; ++u) {
      std::vector<ReinjectionEvent> ev;
      for (const auto& b : m)
        if (b.stable()) {
          auto e = reinjection_events(traj, b, u, p, c);
          ev.insert(ev.end(), e.begin(), e.end());
        }
      std::sort(ev.begin(), ev.end(), [](auto& x, auto& y) { return x.time < y.time; });
      bool once = ev.size() == 10;
      for (std::size_t k = 1; k < ev.size(); ++k)
        once = once && std::abs(ev[k].time - ev[k - 1].time - o->period) < 0.01 * o->period;
      ok = ok && once;
      for (const auto& e : ev) {
        s_sum += e.arclength;
        ++s_n;
      }
      d += fmt("eps %.3f unit %d: %zu crossings/10 periods; ", o->param_value, u + 1, ev.size());
    }
    mean_s[idx++] = s_n ? s_sum / s_n : NAN;
  }
  const bool order = mean_s[1] > mean_s[0];
  d += fmt("arclength %.3f (0.065) vs %.3f (0.15)", mean_s[0], mean_s[1]);
  return {ok && order, d};
}

Outcome ac9(const Budget& b) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  CouplingConfig c;
  {
    std::ifstream in(b.n10_topology);
    if (!in) return {false, "cannot open " + b.n10_topology};
    c = nlohmann::json::parse(in).get<CouplingConfig>();
  }
  c.set_eps(0.15);
  CensusOptions o;
  o.n_ics = b.n10_ics;
  o.integration.t_transient = b.n10_transient;
  o.integration.t_total = b.n10_total;
  o.lyapunov.t_average = b.n10_lyapunov_t;
  o.workers = b.workers;
  const auto r = census(p, c, {0.15}, o).front();
  std::map<DynamicalClass, int> counts;
  for (const auto& a : r.attractors) ++counts[a.dynamical_class];
  const bool eq = counts[DynamicalClass::Equilibrium] > 0;
  const bool per = counts[DynamicalClass::Periodic] > 0;
  const bool nonper = counts[DynamicalClass::Quasiperiodic] + counts[DynamicalClass::Chaotic] > 0;
  const auto report = degree_amplitude_report(r.attractors, c);
  const bool anti = report.rank_correlation < 0;

  // Soft check, logged only.
  CensusOptions soft = o;
  soft.compute_lyapunov = false;
  CouplingConfig cw = c;
  cw.set_eps(0.075);
  const int weak = census_at(p, cw, sample_ics(c.n_units(), soft.n_ics, soft.seed), soft).n_attractors();

  const double rt = seconds_since(t0);
  return {eq && per && nonper && anti,
          fmt("%d attractors: equilibrium %d, periodic %d, quasiperiodic %d, chaotic %d, "
              "unclassified %d; solitary rank correlation %.3f over %zu rows; "
              "[soft] eps=0.075: %d attractors (>50: %s); %.0f s",
              r.n_attractors(), counts[DynamicalClass::Equilibrium],
              counts[DynamicalClass::Periodic], counts[DynamicalClass::Quasiperiodic],
              counts[DynamicalClass::Chaotic], counts[DynamicalClass::Unclassified],
              report.rank_correlation, report.rows.size(), weak, weak > 50 ? "yes" : "no", rt)};
}

Outcome ac10(const Budget& b) {
  ModelParams p;
  CensusOptions o;
  o.n_ics = b.ablation_ics;
  o.integration.t_transient = b.ablation_transient;
  o.integration.t_total = b.ablation_total;
  o.compute_lyapunov = false;
  o.workers = b.workers;
  const auto ics = sample_ics(2, o.n_ics, o.seed);
  // One unit large, the other oscillating below the LA threshold.
  auto la_sa_type = [](const AttractorRecord& a) {
    const auto& amp = a.features.per_unit_amplitude;
    return count_large(a.features) == 1 &&
           std::any_of(amp.begin(), amp.end(), [](double v) { return v < kLargeAmplitude && v > 1e-3; });
  };
  std::string d;
  bool x_lala = false, x_lasa = false;
  for (double e : {0.1, 0.2, 0.3}) {
    CouplingConfig c = CouplingConfig::pair(0.0);
    c.set_eps(e, 0.0);
    const auto r = census_at(p, c, ics, o);
    bool lala = false, lasa = false;
    for (const auto& a : r.attractors) {
      lala = lala || count_large(a.features) == 2;
      lasa = lasa || la_sa_type(a);
    }
    x_lala = x_lala || lala;
    x_lasa = x_lasa || lasa;
    d += fmt("eps_x=%.2f: %d attr%s%s; ", e, r.n_attractors(), lala ? " LA-LA" : "", lasa ? " LA-SA" : "");
  }
  bool y_lasa = false;
  for (double e : {0.15, 0.3}) {
    CouplingConfig c = CouplingConfig::pair(0.0);
    c.set_eps(0.0, e);
    const auto r = census_at(p, c, ics, o);
    double quiet = 0;
    bool lasa = false;
    for (const auto& a : r.attractors)
      if (la_sa_type(a)) {
        lasa = true;
        quiet = *std::min_element(a.features.per_unit_amplitude.begin(), a.features.per_unit_amplitude.end());
      }
    y_lasa = y_lasa || lasa;
    d += fmt("eps_y=%.2f: %d attr%s; ", e, r.n_attractors(),
             lasa ? fmt(" LA-SA type (quiet unit %.2f mV)", quiet).c_str() : "");
  }
  return {x_lala && !x_lasa && y_lasa, d};
}

// Work-precision slope: -d log(error) / d log(steps) over a tolerance sweep.
double observed_order(const VectorField& f, const Eigen::VectorXd& s0, double t_end) {
  const auto ref = advance(f, s0, t_end, 1e-14, 1e-14);
  std::vector<double> lx, ly;
  for (double tol : {1e-6, 1e-7, 1e-8, 1e-9}) {
    Dopri5 st(f, static_cast<int>(s0.size()), tol, tol);
    st.reset(0.0, {s0.data(), static_cast<std::size_t>(s0.size())});
    while (st.t() < t_end) st.step(t_end);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(st.y().data(), s0.size());
    lx.push_back(std::log(static_cast<double>(st.n_accepted())));
    ly.push_back(std::log((y - ref).norm()));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return -sxy / sxx;
}

Outcome ac11(const Budget& b) {
  ModelParams p;
  std::string d;
  bool ok = true;

  // Jacobian vs central differences.
  {
    std::mt19937_64 rng(5);
    const auto c = CouplingConfig::all_to_all(3, 0.2);
    double worst = 0;
    for (const auto& s : sample_ics(3, 50, 5)) {
      const Matrix j = network_jacobian(s, p, c);
      Matrix fd(6, 6);
      for (int k = 0; k < 6; ++k) {
        const double h = k % 2 == 0 ? 1e-5 : 1e-7;
        NetworkState a = s, bb = s;
        a[k] += h;
        bb[k] -= h;
        fd.col(k) = (network_rhs(a, p, c) - network_rhs(bb, p, c)) / (2 * h);
      }
      worst = std::max(worst, (j - fd).cwiseAbs().maxCoeff() / std::max(1.0, j.cwiseAbs().maxCoeff()));
    }
    ok = ok && worst < 1e-6;
    d += fmt("jacobian %.1e; ", worst);
  }
  // Convergence order over one full spike of the single unit. Trajectories
  // that relax onto the node damp their global error and overstate the order.
  {
    const NetworkSystem sys(p, CouplingConfig::single());
    Eigen::VectorXd s0(2);
    s0 << -30.0, 0.4;
    const double order = observed_order(make_vector_field(sys), s0, 5.0);
    ok = ok && std::abs(order - 5.0) <= 0.3;
    d += fmt("order %.2f; ", order);
  }
  // Spectrum sum vs mean trace, and Floquet vs Lyapunov, on LA-LA at 0.15.
  {
    const auto c = CouplingConfig::pair(0.15);
    const auto orb = find_orbit(settle(kLaLaIc, c), 0.0, p, c);
    LyapunovSettings ls;
    ls.t_average = b.lyapunov_t;
    const auto sp = spectrum(orb.anchor, 4, p, c, ls);
    const double sum = std::accumulate(sp.exponents.begin(), sp.exponents.end(), 0.0);
    const double trace_err = std::abs(sum - sp.mean_trace);
    std::vector<double> fl = {0.0};
    for (const auto& m : orb.multipliers) fl.push_back(std::log(std::abs(m)) / orb.period);
    std::sort(fl.rbegin(), fl.rend());
    double fq = 0;
    for (int i = 0; i < 4; ++i) fq = std::max(fq, std::abs(fl[i] - sp.exponents[i]));
    ok = ok && trace_err < 1e-2 && fq < 5e-3;
    d += fmt("trace identity %.1e; floquet-lyapunov %.1e; ", trace_err, fq);
  }
  // Census determinism and permutation invariance.
  {
    const auto c = CouplingConfig::pair(0.15);
    CensusOptions o;
    o.n_ics = 40;
    o.integration.t_transient = 1000;
    o.integration.t_total = 1500;
    o.compute_lyapunov = false;
    const auto ics = sample_ics(2, o.n_ics, 9);
    const auto r1 = census_at(p, c, ics, o);
    o.workers = std::max(2, b.workers);
    const auto r2 = census_at(p, c, ics, o);
    std::ostringstream s1, s2;
    write_census_csv(s1, r1);
    write_census_csv(s2, r2);
    std::vector<NetworkState> swapped;
    for (const auto& s : ics) swapped.push_back(state4(s[2], s[3], s[0], s[1]));
    const auto r3 = census_at(p, c, swapped, o);
    std::multiset<std::string> a, m;
    for (const auto& r : r1.attractors) a.insert(r.label.substr(3) + "-" + r.label.substr(0, 2));
    for (const auto& r : r3.attractors) m.insert(r.label);
    const bool det = s1.str() == s2.str();
    const bool perm = a == m && r1.ic_group.size() == r3.ic_group.size();
    ok = ok && det && perm;
    d += fmt("census deterministic %s, permutation invariant %s", det ? "yes" : "no", perm ? "yes" : "no");
  }
  return {ok, d};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Budget b;
  std::string only, expect_fail;
  bool quick = false;
  app.add_option("--only", only, "Comma-separated criteria to run, e.g. AC3,AC8");
  app.add_option("--expect-fail", expect_fail, "Comma-separated criteria known to fail");
  app.add_option("--n10-topology", b.n10_topology, "N=10 coupling JSON");
  app.add_option("--workers", b.workers, "Worker threads");
  app.add_flag("--quick", quick, "Smaller IC counts (not the pinned budget)");
  CLI11_PARSE(app, argc, argv);
  if (quick) {
    b.n2_ics = 200;
    b.n10_ics = 30;
    b.ablation_ics = 50;
  }
  if (b.workers < 1) b.workers = default_workers();

  auto split = [](const std::string& s) {
    std::set<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) if (!item.empty()) out.insert(item);
    return out;
  };
  const auto selected = split(only);
  const auto expected = split(expect_fail);

  const std::vector<std::pair<std::string, std::function<Outcome(const Budget&)>>> criteria = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4},  {"AC5", ac5},  {"AC6", ac6},
      {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}, {"AC11", ac11}};
  int unexpected = 0;
  for (const auto& [name, fn] : criteria) {
    if (!selected.empty() && !selected.count(name)) continue;
    Outcome r;
    try {
      r = fn(b);
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    const bool xf = expected.count(name) > 0;
    const char* tag = r.pass ? (xf ? "XPASS" : "PASS") : "FAIL";
    if (r.pass == xf) ++unexpected;
    std::printf("%-4s %-5s %s%s\n", name.c_str(), tag, r.detail.c_str(),
                !r.pass && xf ? "  [known conflict, see notes]" : "");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
