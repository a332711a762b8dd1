#include "multistab/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "multistab/error.hpp"

namespace multistab {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void require_positive(double v, const char* name) {
  require(std::isfinite(v) && v > 0.0, std::string(name) + " must be > 0");
}

}  // namespace

void ModelParams::validate() const {
  require_positive(tau, "tau");
  require_positive(capacitance, "capacitance");
  require_positive(g_leak, "g_leak");
  require_positive(g_na, "g_na");
  require_positive(g_k, "g_k");
  require(std::isfinite(k_m) && k_m != 0.0, "k_m must be nonzero");
  require(std::isfinite(k_n) && k_n != 0.0, "k_n must be nonzero");
  for (auto [v, name] : {std::pair{e_leak, "e_leak"}, {e_na, "e_na"}, {e_k, "e_k"},
                         {m_half, "m_half"}, {n_half, "n_half"}, {current, "current"}}) {
    require(std::isfinite(v), std::string(name) + " must be finite");
  }
}

double activation(double x, double half, double slope) {
  if (!std::isfinite(x) || !std::isfinite(half) || !std::isfinite(slope))
    throw NumericalError("activation: non-finite input");
  if (slope == 0.0) throw ConfigError("activation: slope must be nonzero");
  return 1.0 / (1.0 + std::exp((half - x) / slope));
}

LocalDerivative local_rhs(double x, double y, const ModelParams& p) {
  if (!std::isfinite(x) || !std::isfinite(y)) throw NumericalError("local_rhs: non-finite input");
  const double m = 1.0 / (1.0 + std::exp((p.m_half - x) / p.k_m));
  const double n = 1.0 / (1.0 + std::exp((p.n_half - x) / p.k_n));
  const double dx = (p.current - p.g_leak * (x - p.e_leak) - p.g_na * m * (x - p.e_na) -
                     p.g_k * y * (x - p.e_k)) /
                    p.capacitance;
  return {dx, (n - y) / p.tau};
}

std::array<double, 4> local_jacobian(double x, double y, const ModelParams& p) {
  const double m = 1.0 / (1.0 + std::exp((p.m_half - x) / p.k_m));
  const double n = 1.0 / (1.0 + std::exp((p.n_half - x) / p.k_n));
  const double dm = m * (1.0 - m) / p.k_m;
  const double dn = n * (1.0 - n) / p.k_n;
  return {(-p.g_leak - p.g_na * (dm * (x - p.e_na) + m) - p.g_k * y) / p.capacitance,
          -p.g_k * (x - p.e_k) / p.capacitance, dn / p.tau, -1.0 / p.tau};
}

// ---------------------------------------------------------------------------

CouplingConfig::CouplingConfig(int n_units, std::vector<std::pair<int, int>> edges,
                               double eps_x, double eps_y)
    : n_units_(n_units), edges_(std::move(edges)), eps_x_(eps_x), eps_y_(eps_y) {
  require(n_units_ >= 1, "n_units must be >= 1");
  for (auto& [i, j] : edges_) {
    require(i >= 0 && i < n_units_ && j >= 0 && j < n_units_, "adjacency: unit index out of range");
    require(i != j, "adjacency: self-loops are not allowed");
    if (i > j) std::swap(i, j);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  rebuild();
  validate();
}

CouplingConfig CouplingConfig::pair(double eps) { return CouplingConfig(2, {{0, 1}}, eps, eps); }

CouplingConfig CouplingConfig::single() { return CouplingConfig(1, {}, 0.0, 0.0); }

CouplingConfig CouplingConfig::all_to_all(int n_units, double eps) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n_units; ++i)
    for (int j = i + 1; j < n_units; ++j) e.emplace_back(i, j);
  return CouplingConfig(n_units, std::move(e), eps, eps);
}

void CouplingConfig::rebuild() {
  neighbors_.assign(n_units_, {});
  for (auto [i, j] : edges_) {
    neighbors_[i].push_back(j);
    neighbors_[j].push_back(i);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

void CouplingConfig::set_eps(double eps_x, double eps_y) {
  eps_x_ = eps_x;
  eps_y_ = eps_y;
  validate();
}

void CouplingConfig::set_edge_override(int i, int j, double eps_ij) {
  if (i > j) std::swap(i, j);
  require(std::binary_search(edges_.begin(), edges_.end(), std::pair{i, j}),
          "edge_overrides: (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
              ") is not an edge");
  require(std::isfinite(eps_ij) && eps_ij >= 0.0, "edge_overrides: strength must be >= 0");
  overrides_[{i, j}] = eps_ij;
}

void CouplingConfig::clear_edge_overrides() { overrides_.clear(); }

std::pair<double, double> CouplingConfig::strength(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (auto it = overrides_.find({i, j}); it != overrides_.end()) return {it->second, it->second};
  return {eps_x_, eps_y_};
}

void CouplingConfig::validate() const {
  require(n_units_ >= 1, "n_units must be >= 1");
  require(std::isfinite(eps_x_) && eps_x_ >= 0.0, "eps_x must be >= 0");
  require(std::isfinite(eps_y_) && eps_y_ >= 0.0, "eps_y must be >= 0");
  for (const auto& [e, v] : overrides_) {
    require(std::binary_search(edges_.begin(), edges_.end(), e),
            "edge_overrides: override refers to a missing edge");
    require(std::isfinite(v) && v >= 0.0, "edge_overrides: strength must be >= 0");
  }
}

LocalDerivative CouplingConfig::coupling_term(std::span<const double> s, int unit) const {
  double hx = 0.0, hy = 0.0;
  const double xi = s[2 * unit], yi = s[2 * unit + 1];
  for (int j : neighbors_.at(unit)) {
    auto [wx, wy] = strength(unit, j);
    hx += wx * (s[2 * j] - xi);
    hy += wy * (s[2 * j + 1] - yi);
  }
  return {hx, hy};
}

// ---------------------------------------------------------------------------

NetworkSystem::NetworkSystem(ModelParams p, CouplingConfig c)
    : p_(p), c_(std::move(c)), n_(c_.n_units()) {
  p_.validate();
  c_.validate();
  adj_.resize(n_);
  for (int i = 0; i < n_; ++i)
    for (int j : c_.neighbors(i)) {
      auto [wx, wy] = c_.strength(i, j);
      adj_[i].push_back({j, wx, wy});
    }
}

void NetworkSystem::rhs(std::span<const double> s, std::span<double> out) const {
  const ModelParams& p = p_;
  const double inv_c = 1.0 / p.capacitance;
  const double inv_tau = 1.0 / p.tau;
  for (int i = 0; i < n_; ++i) {
    const double x = s[2 * i], y = s[2 * i + 1];
    const double m = 1.0 / (1.0 + std::exp((p.m_half - x) / p.k_m));
    const double n = 1.0 / (1.0 + std::exp((p.n_half - x) / p.k_n));
    double dx = (p.current - p.g_leak * (x - p.e_leak) - p.g_na * m * (x - p.e_na) -
                 p.g_k * y * (x - p.e_k)) *
                inv_c;
    double dy = (n - y) * inv_tau;
    for (const auto& e : adj_[i]) {
      dx += e.wx * (s[2 * e.j] - x);
      dy += e.wy * (s[2 * e.j + 1] - y);
    }
    out[2 * i] = dx;
    out[2 * i + 1] = dy;
  }
}

void NetworkSystem::jacobian(std::span<const double> s, Matrix& out) const {
  const int d = dimension();
  out.setZero(d, d);
  for (int i = 0; i < n_; ++i) {
    const auto jl = local_jacobian(s[2 * i], s[2 * i + 1], p_);
    out(2 * i, 2 * i) = jl[0];
    out(2 * i, 2 * i + 1) = jl[1];
    out(2 * i + 1, 2 * i) = jl[2];
    out(2 * i + 1, 2 * i + 1) = jl[3];
    for (const auto& e : adj_[i]) {
      out(2 * i, 2 * e.j) += e.wx;
      out(2 * i, 2 * i) -= e.wx;
      out(2 * i + 1, 2 * e.j + 1) += e.wy;
      out(2 * i + 1, 2 * i + 1) -= e.wy;
    }
  }
}

void NetworkSystem::jacobian_times(std::span<const double> s, std::span<const double> v,
                                   std::span<double> out) const {
  for (int i = 0; i < n_; ++i) {
    const auto jl = local_jacobian(s[2 * i], s[2 * i + 1], p_);
    const double vx = v[2 * i], vy = v[2 * i + 1];
    double ox = jl[0] * vx + jl[1] * vy;
    double oy = jl[2] * vx + jl[3] * vy;
    for (const auto& e : adj_[i]) {
      ox += e.wx * (v[2 * e.j] - vx);
      oy += e.wy * (v[2 * e.j + 1] - vy);
    }
    out[2 * i] = ox;
    out[2 * i + 1] = oy;
  }
}

void NetworkSystem::jacobian_times_block(std::span<const double> s, std::span<const double> v,
                                         std::span<double> out, int k) const {
  const int d = 2 * n_;
  for (int i = 0; i < n_; ++i) {
    const auto jl = local_jacobian(s[2 * i], s[2 * i + 1], p_);
    for (int col = 0; col < k; ++col) {
      const double* vc = v.data() + col * d;
      const double vx = vc[2 * i], vy = vc[2 * i + 1];
      double ox = jl[0] * vx + jl[1] * vy;
      double oy = jl[2] * vx + jl[3] * vy;
      for (const auto& e : adj_[i]) {
        ox += e.wx * (vc[2 * e.j] - vx);
        oy += e.wy * (vc[2 * e.j + 1] - vy);
      }
      out[col * d + 2 * i] = ox;
      out[col * d + 2 * i + 1] = oy;
    }
  }
}

double NetworkSystem::jacobian_trace(std::span<const double> s) const {
  double tr = 0.0;
  for (int i = 0; i < n_; ++i) {
    const auto jl = local_jacobian(s[2 * i], s[2 * i + 1], p_);
    tr += jl[0] + jl[3];
    for (const auto& e : adj_[i]) tr -= e.wx + e.wy;
  }
  return tr;
}

void check_state(const NetworkState& s, const CouplingConfig& c) {
  if (s.size() != c.dimension())
    throw ConfigError("state has length " + std::to_string(s.size()) + ", expected " +
                      std::to_string(c.dimension()));
  if (!s.allFinite()) throw ConfigError("state contains non-finite entries");
}

NetworkState network_rhs(const NetworkState& s, const ModelParams& p, const CouplingConfig& c) {
  check_state(s, c);
  NetworkSystem sys(p, c);
  NetworkState out(s.size());
  sys.rhs({s.data(), static_cast<size_t>(s.size())}, {out.data(), static_cast<size_t>(out.size())});
  return out;
}

Matrix network_jacobian(const NetworkState& s, const ModelParams& p, const CouplingConfig& c) {
  check_state(s, c);
  NetworkSystem sys(p, c);
  Matrix j;
  sys.jacobian({s.data(), static_cast<size_t>(s.size())}, j);
  return j;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys,
                    const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; }))
      throw ConfigError(std::string(what) + ": unknown key '" + k + "'");
  }
}

double number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const ModelParams& p) {
  j = {{"tau", p.tau},       {"capacitance", p.capacitance}, {"e_leak", p.e_leak},
       {"e_na", p.e_na},     {"e_k", p.e_k},                 {"g_leak", p.g_leak},
       {"g_na", p.g_na},     {"g_k", p.g_k},                 {"m_half", p.m_half},
       {"k_m", p.k_m},       {"n_half", p.n_half},           {"k_n", p.k_n},
       {"current", p.current}};
}

void from_json(const nlohmann::json& j, ModelParams& p) {
  reject_unknown(j,
                 {"tau", "capacitance", "e_leak", "e_na", "e_k", "g_leak", "g_na", "g_k",
                  "m_half", "k_m", "n_half", "k_n", "current"},
                 "model");
  ModelParams d;
  p.tau = number(j, "tau", d.tau);
  p.capacitance = number(j, "capacitance", d.capacitance);
  p.e_leak = number(j, "e_leak", d.e_leak);
  p.e_na = number(j, "e_na", d.e_na);
  p.e_k = number(j, "e_k", d.e_k);
  p.g_leak = number(j, "g_leak", d.g_leak);
  p.g_na = number(j, "g_na", d.g_na);
  p.g_k = number(j, "g_k", d.g_k);
  p.m_half = number(j, "m_half", d.m_half);
  p.k_m = number(j, "k_m", d.k_m);
  p.n_half = number(j, "n_half", d.n_half);
  p.k_n = number(j, "k_n", d.k_n);
  p.current = number(j, "current", d.current);
  p.validate();
}

void to_json(nlohmann::json& j, const CouplingConfig& c) {
  auto adj = nlohmann::json::array();
  for (auto [a, b] : c.edges()) adj.push_back({a + 1, b + 1});
  auto ov = nlohmann::json::array();
  for (const auto& [e, v] : c.edge_overrides()) ov.push_back({e.first + 1, e.second + 1, v});
  j = {{"n_units", c.n_units()}, {"adjacency", adj},       {"eps_x", c.eps_x()},
       {"eps_y", c.eps_y()},     {"edge_overrides", ov}};
}

void from_json(const nlohmann::json& j, CouplingConfig& c) {
  reject_unknown(j, {"n_units", "adjacency", "eps_x", "eps_y", "edge_overrides"}, "coupling");
  if (!j.contains("n_units") || !j.at("n_units").is_number_integer())
    throw ConfigError("coupling: n_units must be an integer");
  const int n = j.at("n_units").get<int>();
  std::vector<std::pair<int, int>> edges;
  if (j.contains("adjacency")) {
    for (const auto& e : j.at("adjacency")) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw ConfigError("adjacency: entries must be [i, j] index pairs");
      edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
    }
  }
  const double ex = number(j, "eps_x", 0.0);
  const double ey = number(j, "eps_y", 0.0);
  if (!(ex >= 0.0)) throw ConfigError("eps_x must be >= 0");
  if (!(ey >= 0.0)) throw ConfigError("eps_y must be >= 0");
  CouplingConfig out(n, std::move(edges), ex, ey);
  if (j.contains("edge_overrides")) {
    for (const auto& e : j.at("edge_overrides")) {
      if (!e.is_array() || e.size() != 3)
        throw ConfigError("edge_overrides: entries must be [i, j, eps_ij]");
      out.set_edge_override(e[0].get<int>() - 1, e[1].get<int>() - 1, e[2].get<double>());
    }
  }
  c = std::move(out);
}

}  // namespace multistab
