#include "multistab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "multistab/equilibria.hpp"
#include "multistab/error.hpp"

namespace multistab {

std::string to_string(ManifoldBranch b) {
  switch (b) {
    case ManifoldBranch::StablePlus: return "stable+";
    case ManifoldBranch::StableMinus: return "stable-";
    case ManifoldBranch::UnstablePlus: return "unstable+";
    case ManifoldBranch::UnstableMinus: return "unstable-";
  }
  return "stable+";
}

namespace {

struct SaddleInfo {
  Eigen::Vector2d point;
  Eigen::Vector2d stable_dir, unstable_dir;
  Eigen::Vector2d focus;
};

SaddleInfo find_saddle(const ModelParams& p) {
  const auto pts = uncoupled_fixed_points(p);
  const auto saddle = std::find_if(pts.begin(), pts.end(), [](const auto& q) { return q.name == "saddle"; });
  if (saddle == pts.end()) throw NumericalError("saddle_manifolds: no saddle of the uncoupled unit");
  SaddleInfo s;
  s.point = {saddle->x, saddle->y};
  const auto j = local_jacobian(saddle->x, saddle->y, p);
  Eigen::Matrix2d m;
  m << j[0], j[1], j[2], j[3];
  Eigen::EigenSolver<Eigen::Matrix2d> es(m);
  for (int k = 0; k < 2; ++k) {
    Eigen::Vector2d v = es.eigenvectors().col(k).real().normalized();
    if (v.x() < 0.0) v = -v;
    (es.eigenvalues()[k].real() < 0.0 ? s.stable_dir : s.unstable_dir) = v;
  }
  // Rightmost remaining point is the focus at default parameters.
  s.focus = s.point;
  double best = -1e300;
  for (const auto& q : pts)
    if (q.name != "saddle" && q.x > best) {
      best = q.x;
      s.focus = {q.x, q.y};
    }
  return s;
}

ManifoldPolyline trace_branch(const ModelParams& p, const SaddleInfo& s, ManifoldBranch b,
                              const ManifoldOptions& opt) {
  const bool stable = b == ManifoldBranch::StablePlus || b == ManifoldBranch::StableMinus;
  const double sign = (b == ManifoldBranch::StablePlus || b == ManifoldBranch::UnstablePlus) ? 1.0 : -1.0;
  const Eigen::Vector2d dir = sign * (stable ? s.stable_dir : s.unstable_dir);
  const double time_sign = stable ? -1.0 : 1.0;
  VectorField f = [&p, time_sign](std::span<const double> u, std::span<double> du) {
    const auto d = local_rhs(u[0], u[1], p);
    du[0] = time_sign * d.dx;
    du[1] = time_sign * d.dy;
  };
  ManifoldPolyline line;
  line.branch = b;
  line.saddle = s.point;
  const Eigen::Vector2d start = s.point + opt.offset * dir;
  line.points.push_back(start);
  line.cumulative.push_back(opt.offset);
  Dopri5 st(f, 2, opt.abs_tol, opt.rel_tol);
  st.reset(0.0, {start.data(), 2});
  double buf[2];
  auto inside = [&](const Eigen::Vector2d& q) {
    return q.x() >= opt.x_min && q.x() <= opt.x_max && q.y() >= opt.y_min && q.y() <= opt.y_max;
  };
  while (st.t() < opt.max_time) {
    st.step(opt.max_time);
    const Eigen::Vector2d end(st.y()[0], st.y()[1]);
    // Oversample the dense output and keep the last candidate within ds of
    // the previous polyline point.
    auto spacing = [&](const Eigen::Vector2d& q) {
      return (q - s.point).norm() < opt.near_radius ? opt.ds_near : opt.ds_far;
    };
    auto emit = [&](const Eigen::Vector2d& q) {
      const double seg = (q - line.points.back()).norm();
      if (seg == 0.0) return;
      line.points.push_back(q);
      line.cumulative.push_back(line.cumulative.back() + seg);
    };
    const double chord = (end - line.points.back()).norm();
    const int pieces = std::max(1, static_cast<int>(std::ceil(8.0 * chord / opt.ds_near)));
    Eigen::Vector2d prev = line.points.back();
    bool stop = false;
    for (int k = 1; k <= pieces; ++k) {
      const double tk = st.t_prev() + (st.t() - st.t_prev()) * k / pieces;
      st.dense(tk, buf);
      const Eigen::Vector2d q(buf[0], buf[1]);
      if (!inside(q)) {
        stop = true;
        break;
      }
      const Eigen::Vector2d& last = line.points.back();
      if ((q - last).norm() > spacing(last)) {
        emit(prev == last ? q : prev);
        if (prev != q && (q - line.points.back()).norm() > spacing(line.points.back())) emit(q);
      }
      prev = q;
      if (line.cumulative.back() >= opt.max_arclength) {
        stop = true;
        break;
      }
    }
    if (!stop) emit(end);
    if (stop) break;
    // Settled on an equilibrium (node forward, focus backward).
    const auto d = local_rhs(end.x(), end.y(), p);
    if (std::hypot(d.dx, d.dy) < 1e-9 && st.t() > 1.0) break;
  }
  line.arclength = line.cumulative.back();
  return line;
}

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

std::array<ManifoldPolyline, 4> saddle_manifolds(const ModelParams& p, const ManifoldOptions& opt) {
  p.validate();
  const SaddleInfo s = find_saddle(p);
  return {trace_branch(p, s, ManifoldBranch::StablePlus, opt),
          trace_branch(p, s, ManifoldBranch::StableMinus, opt),
          trace_branch(p, s, ManifoldBranch::UnstablePlus, opt),
          trace_branch(p, s, ManifoldBranch::UnstableMinus, opt)};
}

std::vector<ReinjectionEvent> reinjection_events(const Trajectory& traj,
                                                 const ManifoldPolyline& m, int unit,
                                                 const ModelParams& p, const CouplingConfig& c) {
  if (unit < 0 || unit >= c.n_units()) throw ConfigError("reinjection_events: unit out of range");
  if (traj.dimension() != c.dimension())
    throw ConfigError("reinjection_events: trajectory does not match coupling");
  std::vector<ReinjectionEvent> out;
  if (m.points.size() < 2 || traj.size() < 2) return out;

  // The focus side, judged at the saddle end of the polyline, is the + side.
  const SaddleInfo s = find_saddle(p);
  const Eigen::Vector2d d0 = m.points[1] - m.points[0];
  const double focus_side = cross(d0, s.focus - m.points[0]) >= 0.0 ? 1.0 : -1.0;

  // Uniform grid over polyline segments; y is rescaled to be comparable with x.
  constexpr double kCellX = 2.0, kCellY = 0.04;
  std::map<std::pair<long, long>, std::vector<std::size_t>> grid;
  auto cell = [&](double x, double y) {
    return std::pair<long, long>{static_cast<long>(std::floor(x / kCellX)),
                                 static_cast<long>(std::floor(y / kCellY))};
  };
  for (std::size_t k = 0; k + 1 < m.points.size(); ++k) {
    const auto a = cell(std::min(m.points[k].x(), m.points[k + 1].x()),
                        std::min(m.points[k].y(), m.points[k + 1].y()));
    const auto b = cell(std::max(m.points[k].x(), m.points[k + 1].x()),
                        std::max(m.points[k].y(), m.points[k + 1].y()));
    for (long i = a.first; i <= b.first; ++i)
      for (long j = a.second; j <= b.second; ++j) grid[{i, j}].push_back(k);
  }

  std::vector<double> state(c.dimension());
  std::vector<std::size_t> cand;
  for (std::size_t n = 0; n + 1 < traj.size(); ++n) {
    const auto ci = static_cast<Eigen::Index>(n);
    const Eigen::Vector2d p0(traj.states(2 * unit, ci), traj.states(2 * unit + 1, ci));
    const Eigen::Vector2d p1(traj.states(2 * unit, ci + 1), traj.states(2 * unit + 1, ci + 1));
    const auto a = cell(std::min(p0.x(), p1.x()), std::min(p0.y(), p1.y()));
    const auto b = cell(std::max(p0.x(), p1.x()), std::max(p0.y(), p1.y()));
    cand.clear();
    for (long i = a.first; i <= b.first; ++i)
      for (long j = a.second; j <= b.second; ++j) {
        const auto it = grid.find({i, j});
        if (it != grid.end()) cand.insert(cand.end(), it->second.begin(), it->second.end());
      }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    const Eigen::Vector2d r = p1 - p0;
    for (std::size_t k : cand) {
      const Eigen::Vector2d q0 = m.points[k], sseg = m.points[k + 1] - q0;
      const double den = cross(r, sseg);
      if (den == 0.0) continue;
      const Eigen::Vector2d w = q0 - p0;
      const double u = cross(w, sseg) / den;  // along trajectory segment
      const double v = cross(w, r) / den;     // along polyline segment
      if (u < 0.0 || u >= 1.0 || v < 0.0 || v >= 1.0) continue;
      ReinjectionEvent ev;
      ev.time = traj.times[n] + u * (traj.times[n + 1] - traj.times[n]);
      ev.unit = unit;
      ev.point = q0 + v * sseg;
      ev.direction = (cross(sseg, r) > 0.0 ? 1 : -1) * static_cast<int>(focus_side);
      ev.arclength = m.cumulative[k] + v * sseg.norm();
      for (int i = 0; i < c.dimension(); ++i)
        state[i] = (1.0 - u) * traj.states(i, ci) + u * traj.states(i, ci + 1);
      const auto h = c.coupling_term(state, unit);
      ev.coupling = {h.dx, h.dy};
      out.push_back(ev);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.time < y.time; });
  return out;
}

std::vector<FieldSample> coupling_field_along(const Trajectory& traj, int unit, int stride,
                                              const ModelParams& p, const CouplingConfig& c) {
  if (unit < 0 || unit >= c.n_units()) throw ConfigError("coupling_field_along: unit out of range");
  if (stride < 1) throw ConfigError("coupling_field_along: stride must be >= 1");
  if (traj.dimension() != c.dimension())
    throw ConfigError("coupling_field_along: trajectory does not match coupling");
  std::vector<FieldSample> out;
  for (std::size_t n = 0; n < traj.size(); n += stride) {
    const auto col = traj.states.col(static_cast<Eigen::Index>(n));
    const std::span<const double> s(col.data(), static_cast<std::size_t>(col.size()));
    const auto h = c.coupling_term(s, unit);
    const auto f = local_rhs(s[2 * unit], s[2 * unit + 1], p);
    out.push_back({traj.times[n], {s[2 * unit], s[2 * unit + 1]}, {h.dx, h.dy}, {f.dx, f.dy}});
  }
  return out;
}

namespace {
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_manifolds_csv(std::ostream& os, const std::array<ManifoldPolyline, 4>& m) {
  os << "branch,x,y\n";
  for (const auto& line : m)
    for (const auto& q : line.points)
      os << to_string(line.branch) << ',' << num(q.x()) << ',' << num(q.y()) << '\n';
}

void write_reinjection_csv(std::ostream& os, const std::vector<ReinjectionEvent>& events) {
  os << "t,unit,x,y,hx,hy,dir,arclength\n";
  for (const auto& e : events)
    os << num(e.time) << ',' << e.unit + 1 << ',' << num(e.point.x()) << ',' << num(e.point.y())
       << ',' << num(e.coupling.x()) << ',' << num(e.coupling.y()) << ',' << e.direction << ','
       << num(e.arclength) << '\n';
}

void write_field_csv(std::ostream& os, const std::vector<FieldSample>& samples) {
  os << "t,x,y,hx,hy,fx,fy\n";
  for (const auto& s : samples)
    os << num(s.time) << ',' << num(s.position.x()) << ',' << num(s.position.y()) << ','
       << num(s.coupling.x()) << ',' << num(s.coupling.y()) << ',' << num(s.local.x()) << ','
       << num(s.local.y()) << '\n';
}

}  // namespace multistab
