// multistab: command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "multistab/attractors.hpp"
#include "multistab/config.hpp"
#include "multistab/continuation.hpp"
#include "multistab/equilibria.hpp"
#include "multistab/error.hpp"
#include "multistab/geometry.hpp"
#include "multistab/integrate.hpp"
#include "multistab/lyapunov.hpp"
#include "multistab/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace multistab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config_path;
  std::string out_dir;  // overrides config.outputs
  int workers = 0;      // 0: MULTISTAB_WORKERS or hardware concurrency
};

struct Job {
  RunConfig cfg;
  fs::path out;
  int workers = 1;
  json manifest;
  std::vector<std::string> files;

  std::ofstream open(const std::string& name) {
    std::ofstream os(out / name);
    if (!os) throw ConfigError("cannot write " + (out / name).string());
    files.push_back(name);
    return os;
  }

  void finish() {
    manifest["outputs"] = files;
    std::ofstream os(out / "manifest.json");
    os << manifest.dump(2) << "\n";
  }
};

Job start_job(const Common& common, const std::string& command,
              const std::vector<std::string>& argv) {
  Job job;
  if (common.config_path.empty()) throw ConfigError("--config is required");
  job.cfg = load_run_config(common.config_path);
  job.out = common.out_dir.empty() ? fs::path(job.cfg.outputs) : fs::path(common.out_dir);
  fs::create_directories(job.out);
  job.workers = common.workers > 0 ? common.workers : default_workers();
  job.manifest = {{"tool", "multistab"},
                  {"version", MULTISTAB_VERSION},
                  {"command", command},
                  {"argv", argv},
                  {"config", job.cfg},
                  {"workers", job.workers}};
  return job;
}

void log(const std::string& msg) { std::cerr << "[multistab] " << msg << std::endl; }

NetworkState parse_state(const std::string& csv, const CouplingConfig& c) {
  std::vector<double> v;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("--initial: '" + item + "' is not a number");
    }
  }
  NetworkState s = Eigen::Map<NetworkState>(v.data(), static_cast<Eigen::Index>(v.size()));
  check_state(s, c);
  return s;
}

/// Branch seed file: {"state": [...], "settle": t, "period": T}. The state is
/// integrated for `settle` time units before use; period <= 0 lets shooting
/// estimate it.
struct BranchSeed {
  NetworkState state;
  double settle = 0.0;
  double period = 0.0;
  json raw;
};

BranchSeed load_seed(const std::string& path, const RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open branch seed " + path);
  BranchSeed seed;
  try {
    seed.raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const auto& j = seed.raw;
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (k != "state" && k != "settle" && k != "period")
      throw ConfigError(path + ": unknown key '" + k + "'");
  if (!j.contains("state") || !j.at("state").is_array())
    throw ConfigError(path + ": 'state' must be an array");
  std::vector<double> v;
  for (const auto& x : j.at("state")) {
    if (!x.is_number()) throw ConfigError(path + ": state entries must be numbers");
    v.push_back(x.get<double>());
  }
  seed.state = Eigen::Map<NetworkState>(v.data(), static_cast<Eigen::Index>(v.size()));
  check_state(seed.state, cfg.coupling);
  if (j.contains("settle")) seed.settle = j.at("settle").get<double>();
  if (j.contains("period")) seed.period = j.at("period").get<double>();
  if (seed.settle < 0) throw ConfigError(path + ": settle must be >= 0");
  return seed;
}

NetworkState settle(const NetworkState& s0, double t, const ModelParams& p, const CouplingConfig& c,
                    const IntegrationSettings& is) {
  if (t <= 0) return s0;
  const NetworkSystem sys(p, c);
  return advance(make_vector_field(sys), s0, t, is.abs_tol, is.rel_tol, is.max_steps);
}

PeriodicOrbit orbit_from_seed(const BranchSeed& seed, const RunConfig& cfg, Parameter param) {
  const NetworkState s = settle(seed.state, seed.settle, cfg.model, cfg.coupling, cfg.integration);
  return find_orbit(s, seed.period, cfg.model, cfg.coupling, param);
}

json spectrum_json(const LyapunovSpectrum& sp) {
  return {{"exponents", sp.exponents},
          {"half_window", sp.half_window},
          {"convergence_estimate", sp.convergence_estimate},
          {"converged", sp.converged},
          {"mean_trace", sp.mean_trace},
          {"renorm_interval", sp.renorm_interval},
          {"t_average", sp.t_average}};
}

json orbit_json(const PeriodicOrbit& o) {
  json mu = json::array();
  for (const auto& m : o.multipliers) mu.push_back({m.real(), m.imag()});
  return {{"param", to_string(o.param)},
          {"param_value", o.param_value},
          {"period", o.period},
          {"anchor", std::vector<double>(o.anchor.data(), o.anchor.data() + o.anchor.size())},
          {"multipliers", mu},
          {"trivial_multiplier", o.trivial_multiplier},
          {"stable", o.stable()},
          {"amplitude_max", o.amplitude_max},
          {"residual", o.residual}};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- commands

struct SimulateArgs {
  std::string initial;
  std::string branch_seed;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const Common& common, const SimulateArgs& a, const std::vector<std::string>& argv) {
  Job job = start_job(common, "simulate", argv);
  const auto& cfg = job.cfg;
  NetworkState s0;
  if (!a.initial.empty()) {
    s0 = parse_state(a.initial, cfg.coupling);
  } else if (!a.branch_seed.empty()) {
    s0 = load_seed(a.branch_seed, cfg).state;
  } else {
    const std::uint64_t seed = a.seed.value_or(cfg.census.seed);
    s0 = sample_ics(cfg.coupling.n_units(), 1, seed, cfg.census.box).front();
    job.manifest["seed"] = seed;
  }
  job.manifest["initial_state"] = std::vector<double>(s0.data(), s0.data() + s0.size());
  const auto traj = integrate(NetworkSystem(cfg.model, cfg.coupling), s0, cfg.integration);
  auto os = job.open("trajectory.csv");
  write_trajectory_csv(os, traj);
  job.finish();
  log("wrote " + std::to_string(traj.size()) + " samples to " + (job.out / "trajectory.csv").string());
  return 0;
}

struct CensusArgs {
  std::string grid;
  std::string param = "eps";
  bool no_lyapunov = false;
  double t_average = 0.0;
};

int cmd_census(const Common& common, const CensusArgs& a, const std::vector<std::string>& argv) {
  Job job = start_job(common, "census", argv);
  const auto& cfg = job.cfg;
  const Parameter param = parse_parameter(a.param);
  const std::vector<double> grid =
      a.grid.empty() ? std::vector<double>{get_parameter(param, cfg.model, cfg.coupling)}
                     : parse_grid(a.grid);
  CensusOptions opt = cfg.census_options();
  opt.sweep = param;
  opt.workers = job.workers;
  opt.compute_lyapunov = !a.no_lyapunov;
  if (a.t_average > 0) opt.lyapunov.t_average = a.t_average;
  job.manifest["seed"] = opt.seed;
  job.manifest["grid"] = grid;
  job.manifest["param"] = to_string(param);

  const auto ics = sample_ics(cfg.coupling.n_units(), opt.n_ics, opt.seed, opt.box);
  std::vector<CensusResult> results;
  for (double v : grid) {
    const auto t0 = std::chrono::steady_clock::now();
    ModelParams p = cfg.model;
    CouplingConfig c = cfg.coupling;
    set_parameter(param, v, p, c);
    auto r = census_at(p, c, ics, opt);
    r.param_value = v;
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log(to_string(param) + "=" + fmt(v) + ": " + std::to_string(r.n_attractors()) +
        " attractors, " + std::to_string(r.n_diverged) + " diverged (" + fmt(dt) + " s)");
    {
      auto os = job.open("census_" + to_string(param) + "_" + fmt(v) + ".csv");
      write_census_csv(os, r);
    }
    if (c.n_units() > 2) {
      auto os = job.open("degree_amplitude_" + to_string(param) + "_" + fmt(v) + ".csv");
      write_degree_amplitude_csv(os, degree_amplitude_report(r.attractors, c));
    }
    results.push_back(std::move(r));
  }
  auto os = job.open("census_summary.csv");
  write_census_summary_csv(os, results);
  job.finish();
  return 0;
}

struct ContinueArgs {
  std::string param = "eps";
  std::string branch_seed;
  std::optional<double> lo, hi;
  double step = 1e-3;
  std::string direction = "both";
  std::string bracket_grid;
  std::string bracket_kind = "SNLC";
  int bracket_direction = -1;
};

int cmd_continue(const Common& common, const ContinueArgs& a, const std::vector<std::string>& argv) {
  Job job = start_job(common, "continue", argv);
  const auto& cfg = job.cfg;
  const Parameter param = parse_parameter(a.param);
  if (a.branch_seed.empty()) throw ConfigError("--branch-seed is required");
  const auto seed = load_seed(a.branch_seed, cfg);
  job.manifest["branch_seed"] = seed.raw;
  const PeriodicOrbit orbit = orbit_from_seed(seed, cfg, param);
  log("seed orbit: T=" + fmt(orbit.period) + " at " + to_string(param) + "=" +
      fmt(orbit.param_value) + (orbit.stable() ? " (stable)" : " (unstable)"));
  {
    auto os = job.open("seed_orbit.json");
    os << orbit_json(orbit).dump(2) << "\n";
  }

  if (!a.bracket_grid.empty()) {
    // Two-parameter bracketing in (current, eps).
    BifurcationKind kind;
    if (a.bracket_kind == "SNLC") kind = BifurcationKind::SNLC;
    else if (a.bracket_kind == "TORUS") kind = BifurcationKind::Torus;
    else if (a.bracket_kind == "HOM") kind = BifurcationKind::Homoclinic;
    else throw ConfigError("--bracket-kind must be SNLC, TORUS or HOM");
    if (param != Parameter::Eps) throw ConfigError("--bracket-grid requires --param eps");
    const auto grid = parse_grid(a.bracket_grid);
    const auto curve = two_param_bracket(orbit, grid, kind, a.lo.value_or(0.0), a.hi.value_or(0.6),
                                         a.bracket_direction, cfg.model, cfg.coupling);
    auto os = job.open("two_param.csv");
    os << "current,eps\n";
    os.precision(17);
    for (const auto& q : curve.points) os << q.current << "," << q.eps << "\n";
    job.manifest["notices"] = curve.notices;
    job.finish();
    return 0;
  }

  const double lo = a.lo.value_or(0.0);
  const double hi = a.hi.value_or(param == Parameter::Current ? 6.0 : 0.6);
  std::vector<int> dirs;
  if (a.direction == "both" || a.direction == "up") dirs.push_back(+1);
  if (a.direction == "both" || a.direction == "down") dirs.push_back(-1);
  if (dirs.empty()) throw ConfigError("--direction must be up, down or both");

  std::vector<BifurcationEvent> events;
  for (int d : dirs) {
    OrbitContinuationOptions opt;
    opt.branch_id = d > 0 ? 0 : 1;
    const auto br = continue_orbit(orbit, param, lo, hi, d * std::abs(a.step), cfg.model,
                                   cfg.coupling, opt);
    log(std::string(d > 0 ? "up" : "down") + ": " + std::to_string(br.points.size()) + " points" +
        (br.notice.empty() ? "" : " (" + br.notice + ")"));
    for (const auto& e : br.events)
      log("  " + to_string(e.kind) + " at " + fmt(e.param_value));
    auto os = job.open(std::string("branch_") + (d > 0 ? "up" : "down") + ".csv");
    write_branch_csv(os, br);
    events.insert(events.end(), br.events.begin(), br.events.end());
  }
  auto os = job.open("events.csv");
  write_events_csv(os, events);
  job.finish();
  return 0;
}

struct LyapunovArgs {
  std::string branch_seed;
  std::string initial;
  int k = 0;
  double t_average = 0.0;
};

int cmd_lyapunov(const Common& common, const LyapunovArgs& a, const std::vector<std::string>& argv) {
  Job job = start_job(common, "lyapunov", argv);
  const auto& cfg = job.cfg;
  NetworkState s0;
  double settle_time = cfg.integration.t_transient;
  if (!a.initial.empty()) {
    s0 = parse_state(a.initial, cfg.coupling);
  } else if (!a.branch_seed.empty()) {
    const auto seed = load_seed(a.branch_seed, cfg);
    s0 = seed.state;
    settle_time = seed.settle;
  } else {
    throw ConfigError("one of --initial or --branch-seed is required");
  }
  const int n = cfg.coupling.dimension();
  const int k = a.k > 0 ? a.k : std::min(n, 4);
  if (k > n) throw ConfigError("-k exceeds the state dimension");
  LyapunovSettings ls;
  if (a.t_average > 0) ls.t_average = a.t_average;
  const NetworkState s = settle(s0, settle_time, cfg.model, cfg.coupling, cfg.integration);
  const auto sp = spectrum(s, k, cfg.model, cfg.coupling, ls);

  IntegrationSettings is = cfg.integration;
  is.t_transient = 0;
  is.t_total = std::max(200.0, 100 * is.sample_dt);
  const auto f = featurize(integrate(NetworkSystem(cfg.model, cfg.coupling), s, is));
  json out = spectrum_json(sp);
  out["class"] = to_string(classify(sp, f));
  out["label"] = amplitude_label(f);
  auto os = job.open("lyapunov.json");
  os << out.dump(2) << "\n";
  job.finish();
  std::ostringstream line;
  for (double e : sp.exponents) line << " " << fmt(e);
  log("exponents:" + line.str() + " -> " + out["class"].get<std::string>());
  return 0;
}

struct ManifoldsArgs {
  std::string branch_seed;
  int unit = 0;  // 1-based; 0 means all units
  double periods = 10.0;
  int stride = 10;
};

int cmd_manifolds(const Common& common, const ManifoldsArgs& a, const std::vector<std::string>& argv) {
  Job job = start_job(common, "manifolds", argv);
  const auto& cfg = job.cfg;
  const auto m = saddle_manifolds(cfg.model);
  {
    auto os = job.open("manifolds.csv");
    write_manifolds_csv(os, m);
  }
  log("wrote 4 manifold branches");
  if (!a.branch_seed.empty()) {
    const int n = cfg.coupling.n_units();
    if (a.unit < 0 || a.unit > n) throw ConfigError("--unit must be in 1.." + std::to_string(n));
    const auto seed = load_seed(a.branch_seed, cfg);
    NetworkState s = settle(seed.state, seed.settle, cfg.model, cfg.coupling, cfg.integration);
    double duration = cfg.integration.t_total - cfg.integration.t_transient;
    // Prefer an exact orbit when one exists; otherwise use the settled trajectory.
    try {
      const auto orbit = find_orbit(s, seed.period, cfg.model, cfg.coupling);
      s = orbit.anchor;
      duration = a.periods * orbit.period;
      job.manifest["orbit"] = orbit_json(orbit);
    } catch (const NumericalError& e) {
      log(std::string("no periodic orbit from seed (") + e.what() + "); using the trajectory");
    }
    IntegrationSettings is = cfg.integration;
    is.t_transient = 0;
    is.t_total = duration;
    is.sample_dt = std::min(is.sample_dt, 0.005);
    const auto traj = integrate(NetworkSystem(cfg.model, cfg.coupling), s, is);
    std::vector<ReinjectionEvent> events;
    std::vector<FieldSample> field;
    for (int u = 0; u < n; ++u) {
      if (a.unit != 0 && u != a.unit - 1) continue;
      for (const auto& b : m) {
        if (!b.stable()) continue;
        auto ev = reinjection_events(traj, b, u, cfg.model, cfg.coupling);
        events.insert(events.end(), ev.begin(), ev.end());
      }
      if (a.unit != 0) field = coupling_field_along(traj, u, a.stride, cfg.model, cfg.coupling);
    }
    auto os = job.open("reinjection.csv");
    write_reinjection_csv(os, events);
    if (!field.empty()) {
      auto fs_ = job.open("field_unit" + std::to_string(a.unit) + ".csv");
      write_field_csv(fs_, field);
    }
    log(std::to_string(events.size()) + " reinjection crossings");
  }
  job.finish();
  return 0;
}

struct EquilibriaArgs {
  std::string param;
  std::optional<double> target;
};

int cmd_equilibria(const Common& common, const EquilibriaArgs& a,
                   const std::vector<std::string>& argv) {
  Job job = start_job(common, "equilibria", argv);
  const auto& cfg = job.cfg;
  const auto eqs = enumerate(cfg.model, cfg.coupling, job.workers);
  {
    auto os = job.open("equilibria.json");
    write_equilibria_json(os, eqs);
  }
  log(std::to_string(eqs.size()) + " equilibria");
  if (!a.param.empty()) {
    if (!a.target) throw ConfigError("--target is required with --param");
    const Parameter param = parse_parameter(a.param);
    const double here = get_parameter(param, cfg.model, cfg.coupling);
    std::vector<BifurcationEvent> events;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
      const double step = (*a.target > here ? 1 : -1) * 0.01;
      auto br = continue_branch(eqs[i], param, *a.target, step, cfg.model, cfg.coupling);
      for (auto e : br.events) {
        e.branch_id = static_cast<int>(i);
        e.note = eqs[i].class_label;
        events.push_back(e);
        log("  " + eqs[i].class_label + ": " + to_string(e.kind) + " at " + fmt(e.param_value));
      }
    }
    auto os = job.open("equilibrium_events.csv");
    write_events_csv(os, events);
  }
  job.finish();
  return 0;
}

// ------------------------------------------------------------------ repro

struct ReproArgs {
  bool quick = false;
  bool skip_two_param = false;
};

/// Regenerates the data behind every figure into subdirectories of the
/// output directory. The config supplies model, integration and census
/// settings; the coupling topology is fixed per figure (N=1 or N=2).
int cmd_repro(const Common& common, const ReproArgs& a, const std::vector<std::string>& argv) {
  Job job = start_job(common, "repro", argv);
  RunConfig cfg = job.cfg;
  if (a.quick) {
    cfg.census.n_ics = std::min(cfg.census.n_ics, 200);
    cfg.integration.t_transient = std::min(cfg.integration.t_transient, 2000.0);
    cfg.integration.t_total = std::min(cfg.integration.t_total, 5000.0);
  }
  job.manifest["effective_config"] = cfg;
  const ModelParams& p = cfg.model;
  auto sub = [&](const std::string& name) {
    fs::create_directories(job.out / name);
    return name + "/";
  };

  // Fig. 1: uncoupled phase portrait.
  {
    const std::string d = sub("fig1");
    auto eo = job.open(d + "equilibria.json");
    write_equilibria_json(eo, enumerate(p, CouplingConfig::single()));
    auto mo = job.open(d + "manifolds.csv");
    write_manifolds_csv(mo, saddle_manifolds(p));
    log("fig1 done");
  }

  // Fig. 3: attractor panels at the published coupling values.
  CensusOptions copt = cfg.census_options();
  copt.workers = job.workers;
  copt.lyapunov.t_average = a.quick ? 4000.0 : copt.lyapunov.t_average;
  const auto ics = sample_ics(2, copt.n_ics, copt.seed, copt.box);
  std::optional<NetworkState> la_la, la_sa;
  {
    const std::string d = sub("fig3");
    std::vector<CensusResult> results;
    for (double eps : {0.05, 0.1, 0.117485, 0.15, 0.25, 0.3, 0.45}) {
      const auto c = CouplingConfig::pair(eps);
      auto r = census_at(p, c, ics, copt);
      r.param_value = eps;
      auto os = job.open(d + "census_eps_" + fmt(eps) + ".csv");
      write_census_csv(os, r);
      for (const auto& rec : r.attractors) {
        IntegrationSettings is = cfg.integration;
        is.t_transient = 0;
        is.t_total = 50;
        is.sample_dt = 0.01;
        auto to = job.open(d + "trajectory_eps_" + fmt(eps) + "_" + rec.label + "_g" +
                           std::to_string(rec.group_id) + ".csv");
        write_trajectory_csv(to, integrate(NetworkSystem(p, c), rec.representative_state, is));
        if (eps == 0.15 && rec.label == "LA-LA") la_la = rec.representative_state;
        if (eps == 0.15 && rec.label == "LA-SA") la_sa = rec.representative_state;
      }
      log("fig3 eps=" + fmt(eps) + ": " + std::to_string(r.n_attractors()) + " attractors");
      results.push_back(std::move(r));
    }
    auto so = job.open(d + "census_summary.csv");
    write_census_summary_csv(so, results);
  }

  // Bifurcation diagram of N=2 in eps, and single-unit scan in I.
  const auto c15 = CouplingConfig::pair(0.15);
  std::optional<PeriodicOrbit> lala_orbit, lasa_orbit;
  {
    const std::string d = sub("bifurcations");
    std::vector<BifurcationEvent> events;
    auto run = [&](const NetworkState& s, const std::string& name, int id) {
      const auto orbit = find_orbit(s, 0.0, p, c15);
      for (int dir : {+1, -1}) {
        OrbitContinuationOptions opt;
        opt.branch_id = id;
        const auto br = continue_orbit(orbit, Parameter::Eps, 0.0, 0.6, dir * 1e-3, p, c15, opt);
        auto os = job.open(d + "branch_" + name + (dir > 0 ? "_up" : "_down") + ".csv");
        write_branch_csv(os, br);
        events.insert(events.end(), br.events.begin(), br.events.end());
      }
      return orbit;
    };
    if (la_la) lala_orbit = run(*la_la, "LA-LA", 0);
    else log("no LA-LA attractor at eps=0.15 in the census; skipping its branch");
    if (la_sa) lasa_orbit = run(*la_sa, "LA-SA", 1);
    else log("no LA-SA attractor at eps=0.15 in the census; skipping its branch");
    for (const auto& e : enumerate(p, CouplingConfig::pair(0.05))) {
      if (e.class_label != "focus-focus") continue;
      auto br = continue_branch(e, Parameter::Eps, 0.6, 0.01, p, CouplingConfig::pair(0.05));
      for (auto ev : br.events) {
        ev.branch_id = 2;
        events.push_back(ev);
      }
    }
    auto eo = job.open(d + "events.csv");
    write_events_csv(eo, events);

    const auto scan = single_unit_scan(0.0, 6.0, p);
    auto so = job.open(d + "single_unit_events.csv");
    write_events_csv(so, scan.events);
    auto sb = job.open(d + "single_unit_cycle.csv");
    write_branch_csv(sb, scan.orbits);

    if (!a.skip_two_param) {
      const std::vector<double> grid = {2.0, 2.2, 2.4, 2.6, 2.8, 3.0, 3.05, 3.08};
      if (lala_orbit) {
        const auto cv = two_param_bracket(*lala_orbit, grid, BifurcationKind::SNLC, 0.0, 0.6, -1, p, c15);
        auto os = job.open(d + "two_param_LA-LA_SNLC.csv");
        os << "current,eps\n";
        for (const auto& q : cv.points) os << fmt(q.current) << "," << fmt(q.eps) << "\n";
      }
      if (lasa_orbit) {
        const std::vector<double> g2 = {2.0, 2.5, 3.0, 3.5, 4.0, 4.3, 4.45, 4.5};
        const auto cv = two_param_bracket(*lasa_orbit, g2, BifurcationKind::SNLC, 0.0, 0.6, +1, p, c15);
        auto os = job.open(d + "two_param_LA-SA_SNLC.csv");
        os << "current,eps\n";
        for (const auto& q : cv.points) os << fmt(q.current) << "," << fmt(q.eps) << "\n";
      }
    }
    log("bifurcations done");
  }

  // Fig. 4: reinjection diagnostics.
  {
    const std::string d = sub("fig4");
    const auto m = saddle_manifolds(p);
    auto diag = [&](const PeriodicOrbit& orbit, const CouplingConfig& c, const std::string& tag,
                    bool field) {
      IntegrationSettings is;
      is.t_transient = 0;
      is.t_total = 10 * orbit.period;
      is.sample_dt = 0.005;
      const auto traj = integrate(NetworkSystem(p, c), orbit.anchor, is);
      std::vector<ReinjectionEvent> ev;
      for (int u = 0; u < 2; ++u) {
        auto e = reinjection_events(traj, m[0], u, p, c);
        ev.insert(ev.end(), e.begin(), e.end());
      }
      auto os = job.open(d + "reinjection_" + tag + ".csv");
      write_reinjection_csv(os, ev);
      if (field) {
        auto fo = job.open(d + "field_" + tag + "_unit2.csv");
        write_field_csv(fo, coupling_field_along(traj, 1, 10, p, c));
      }
    };
    if (lala_orbit) {
      diag(*lala_orbit, c15, "LA-LA_eps0.15", true);
      OrbitContinuationOptions opt;
      const auto br = continue_orbit(*lala_orbit, Parameter::Eps, 0.065, 0.6, -1e-3, p, c15, opt);
      if (!br.points.empty() && std::abs(br.points.back().param_value - 0.065) < 1e-9)
        diag(br.points.back(), CouplingConfig::pair(0.065), "LA-LA_eps0.065", true);
    }
    if (lasa_orbit) diag(*lasa_orbit, c15, "LA-SA_eps0.15", true);
    log("fig4 done");
  }

  // Appendix: number of attractors vs eps.
  {
    const std::string d = sub("appendix");
    CensusOptions o = copt;
    o.compute_lyapunov = false;
    std::vector<CensusResult> results;
    for (double eps : parse_grid(a.quick ? "0.05:0.5:0.025" : "0.05:0.5:0.01")) {
      auto r = census_at(p, CouplingConfig::pair(eps), ics, o);
      r.param_value = eps;
      results.push_back(std::move(r));
    }
    auto os = job.open(d + "number_of_attractors.csv");
    write_census_summary_csv(os, results);
    log("appendix done");
  }
  job.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Coupled excitable-neuron multistability toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MULTISTAB_VERSION);
  Common common;
  auto add_common = [&](CLI::App* sc) {
    sc->add_option("-c,--config", common.config_path, "Run configuration (JSON)")->required();
    sc->add_option("-o,--out", common.out_dir, "Output directory (overrides config outputs)");
    sc->add_option("--workers", common.workers, "Worker threads (default: MULTISTAB_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
  };

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Integrate one trajectory");
  add_common(s_sim);
  s_sim->add_option("--initial", sim.initial, "Initial state x1,y1,...");
  s_sim->add_option("--branch-seed", sim.branch_seed, "Seed file whose state is the initial state");
  s_sim->add_option("--seed", sim.seed, "Draw the initial state from the IC box with this seed");

  CensusArgs cen;
  auto* s_cen = app.add_subcommand("census", "Monte-Carlo attractor census");
  add_common(s_cen);
  s_cen->add_option("--eps-grid", cen.grid, "Grid a:b:step (or a single value)");
  s_cen->add_option("--param", cen.param, "Swept parameter: eps, eps_x, eps_y, current");
  s_cen->add_flag("--no-lyapunov", cen.no_lyapunov, "Skip Lyapunov classification");
  s_cen->add_option("--t-average", cen.t_average, "Lyapunov averaging time");

  ContinueArgs con;
  auto* s_con = app.add_subcommand("continue", "Periodic-orbit continuation");
  add_common(s_con);
  s_con->add_option("--param", con.param, "Continuation parameter: eps or current");
  s_con->add_option("--branch-seed", con.branch_seed, "Seed file {state, settle, period}")->required();
  s_con->add_option("--lo", con.lo, "Lower parameter bound");
  s_con->add_option("--hi", con.hi, "Upper parameter bound");
  s_con->add_option("--step", con.step, "Initial step");
  s_con->add_option("--direction", con.direction, "up, down or both");
  s_con->add_option("--bracket-grid", con.bracket_grid, "Current grid a:b:step for two-parameter bracketing");
  s_con->add_option("--bracket-kind", con.bracket_kind, "Event to bracket: SNLC, TORUS or HOM");
  s_con->add_option("--bracket-direction", con.bracket_direction, "Direction in eps: -1 or 1");

  LyapunovArgs lya;
  auto* s_lya = app.add_subcommand("lyapunov", "Lyapunov spectrum and class");
  add_common(s_lya);
  s_lya->add_option("--initial", lya.initial, "Initial state x1,y1,... (settled for t_transient)");
  s_lya->add_option("--branch-seed", lya.branch_seed, "Seed file {state, settle}");
  s_lya->add_option("-k", lya.k, "Number of exponents");
  s_lya->add_option("--t-average", lya.t_average, "Averaging time");

  ManifoldsArgs man;
  auto* s_man = app.add_subcommand("manifolds", "Saddle manifolds and reinjection diagnostics");
  add_common(s_man);
  s_man->add_option("--branch-seed", man.branch_seed, "Seed file for reinjection diagnostics");
  s_man->add_option("--unit", man.unit, "Unit (1-based) for reinjection and field export; 0 = all");
  s_man->add_option("--periods", man.periods, "Periods of orbit to analyse");
  s_man->add_option("--stride", man.stride, "Field sampling stride")->check(CLI::PositiveNumber);

  EquilibriaArgs equ;
  auto* s_equ = app.add_subcommand("equilibria", "Enumerate and continue equilibria");
  add_common(s_equ);
  s_equ->add_option("--param", equ.param, "Continue every equilibrium in this parameter");
  s_equ->add_option("--target", equ.target, "Continuation target value");

  ReproArgs rep;
  auto* s_rep = app.add_subcommand("repro", "Regenerate all figure data");
  add_common(s_rep);
  s_rep->add_flag("--quick", rep.quick, "Reduced ICs and integration times");
  s_rep->add_flag("--skip-two-param", rep.skip_two_param, "Skip two-parameter bracketing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*s_sim) return cmd_simulate(common, sim, args);
    if (*s_cen) return cmd_census(common, cen, args);
    if (*s_con) return cmd_continue(common, con, args);
    if (*s_lya) return cmd_lyapunov(common, lya, args);
    if (*s_man) return cmd_manifolds(common, man, args);
    if (*s_equ) return cmd_equilibria(common, equ, args);
    if (*s_rep) return cmd_repro(common, rep, args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
