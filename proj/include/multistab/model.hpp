#pragma once

#include <array>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace multistab {

/// Network state laid out as interleaved pairs [x_1, y_1, x_2, y_2, ...].
using NetworkState = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Constants of the two-dimensional persistent-sodium/potassium neuron.
/// Units: ms, uF/cm^2, mV, mS/cm^2, uA/cm^2. The gating variable y is
/// dimensionless.
struct ModelParams {
  double tau = 0.16;
  double capacitance = 1.0;
  double e_leak = -80.0;
  double e_na = 60.0;
  double e_k = -90.0;
  double g_leak = 8.0;
  double g_na = 20.0;
  double g_k = 10.0;
  double m_half = -20.0;
  double k_m = 15.0;
  double n_half = -25.0;
  double k_n = 5.0;
  double current = 2.0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Local vector field of one unit.
struct LocalDerivative {
  double dx;
  double dy;
};

/// Diffusive coupling on an undirected graph.
///
/// Unit indices are 0-based in code; the JSON form uses 1-based indices to
/// match conventional unit numbering. The x-coupling strength already absorbs
/// the 1/C factor of the membrane equation: network_rhs never divides the
/// coupling term by the capacitance.
///
/// An edge override eps_ij replaces both eps_x and eps_y on that edge.
class CouplingConfig {
 public:
  CouplingConfig() = default;
  CouplingConfig(int n_units, std::vector<std::pair<int, int>> edges, double eps_x,
                 double eps_y);

  /// Two units joined by a single edge, eps_x = eps_y = eps.
  static CouplingConfig pair(double eps);
  /// A single unit, no edges.
  static CouplingConfig single();
  static CouplingConfig all_to_all(int n_units, double eps);

  int n_units() const noexcept { return n_units_; }
  int dimension() const noexcept { return 2 * n_units_; }
  double eps_x() const noexcept { return eps_x_; }
  double eps_y() const noexcept { return eps_y_; }
  const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(i); }
  int degree(int i) const { return static_cast<int>(neighbors_.at(i).size()); }
  const std::map<std::pair<int, int>, double>& edge_overrides() const noexcept {
    return overrides_;
  }

  void set_eps(double eps) { set_eps(eps, eps); }
  void set_eps(double eps_x, double eps_y);
  /// Symmetric override of the strength on an existing edge.
  void set_edge_override(int i, int j, double eps_ij);
  void clear_edge_overrides();

  /// Effective strengths on edge (i, j) for the x and y equations.
  std::pair<double, double> strength(int i, int j) const;

  void validate() const;

  /// Coupling vector (h_x, h_y) of unit i, already multiplied by the strengths.
  LocalDerivative coupling_term(std::span<const double> state, int unit) const;

 private:
  friend class NetworkSystem;
  void rebuild();

  int n_units_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
  double eps_x_ = 0.0;
  double eps_y_ = 0.0;
  std::map<std::pair<int, int>, double> overrides_;
};

/// Logistic activation 1/(1+exp((half-x)/slope)).
double activation(double x, double half, double slope);

LocalDerivative local_rhs(double x, double y, const ModelParams& p);

/// 2x2 Jacobian of local_rhs, row-major {dfx/dx, dfx/dy, dfy/dx, dfy/dy}.
std::array<double, 4> local_jacobian(double x, double y, const ModelParams& p);

/// Precomputed network vector field; evaluation allocates nothing.
class NetworkSystem {
 public:
  NetworkSystem(ModelParams p, CouplingConfig c);

  int dimension() const noexcept { return 2 * n_; }
  const ModelParams& params() const noexcept { return p_; }
  const CouplingConfig& coupling() const noexcept { return c_; }

  void rhs(std::span<const double> s, std::span<double> out) const;
  void jacobian(std::span<const double> s, Matrix& out) const;

  /// Directional derivative J(s)*v, without forming J.
  void jacobian_times(std::span<const double> s, std::span<const double> v,
                      std::span<double> out) const;

  /// J(s) applied to k vectors stored back to back in v (length k*2N).
  void jacobian_times_block(std::span<const double> s, std::span<const double> v,
                            std::span<double> out, int k) const;

  double jacobian_trace(std::span<const double> s) const;

 private:
  struct WeightedEdge {
    int j;
    double wx;
    double wy;
  };
  ModelParams p_;
  CouplingConfig c_;
  int n_;
  std::vector<std::vector<WeightedEdge>> adj_;
};

NetworkState network_rhs(const NetworkState& s, const ModelParams& p, const CouplingConfig& c);
Matrix network_jacobian(const NetworkState& s, const ModelParams& p, const CouplingConfig& c);

/// Throws ConfigError unless s has 2*n_units finite entries.
void check_state(const NetworkState& s, const CouplingConfig& c);

void to_json(nlohmann::json& j, const ModelParams& p);
void from_json(const nlohmann::json& j, ModelParams& p);
void to_json(nlohmann::json& j, const CouplingConfig& c);
void from_json(const nlohmann::json& j, CouplingConfig& c);

}  // namespace multistab
