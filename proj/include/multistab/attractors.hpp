#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "multistab/integrate.hpp"
#include "multistab/lyapunov.hpp"
#include "multistab/model.hpp"
#include "multistab/parameter.hpp"

namespace multistab {

inline constexpr double kSpikeThreshold = -40.0;
/// Oscillations at or above this amplitude (mV) count as large (LA).
inline constexpr double kLargeAmplitude = 20.0;

struct FeatureVector {
  double mean_pairwise_distance = 0.0;
  std::vector<double> per_unit_amplitude;
  std::vector<double> per_unit_frequency;
  /// Interleaved time averages x1, y1, x2, y2, ...
  std::vector<double> per_unit_mean;

  int n_units() const noexcept { return static_cast<int>(per_unit_amplitude.size()); }
  /// [mpd, amplitudes, frequencies, means]; length 1 + 4N.
  std::vector<double> flatten() const;
};

/// Streaming version of featurize: feed post-transient samples in time order.
class FeatureAccumulator {
 public:
  explicit FeatureAccumulator(int n_units, double spike_threshold = kSpikeThreshold);

  void add(double t, std::span<const double> s);
  std::size_t count() const noexcept { return count_; }
  /// Throws ConfigError with fewer than 100 samples.
  FeatureVector finish() const;

 private:
  int n_;
  double threshold_;
  std::size_t count_ = 0;
  double t_first_ = 0.0, t_last_ = 0.0, dist_sum_ = 0.0;
  std::vector<double> min_, max_, sum_, prev_x_;
  std::vector<long> spikes_;
};

FeatureVector featurize(const Trajectory& traj, double spike_threshold = kSpikeThreshold);

/// "SS", "SA" or "LA" per unit, joined by '-', e.g. "LA-SA".
std::string amplitude_label(const FeatureVector& f);

struct IcBox {
  double x_min = -90.0, x_max = 20.0;
  double y_min = 0.0, y_max = 1.0;

  void validate() const;
};

/// Uniform i.i.d. states in the box from mt19937_64(seed).
std::vector<NetworkState> sample_ics(int n_units, int n, std::uint64_t seed, const IcBox& box = {});

/// Single-linkage grouping under the max-norm after per-dimension min-max
/// normalization. Dimensions whose spread is below a physical floor (1 mV for
/// voltages, 0.01 for gating means and frequencies) are scaled by the floor.
/// Group ids are numbered by first appearance.
std::vector<int> group(const std::vector<FeatureVector>& features, double threshold = 0.05);

struct AttractorRecord {
  int group_id = 0;
  FeatureVector features;
  NetworkState representative_state;
  int basin_count = 0;
  std::string label;
  DynamicalClass dynamical_class = DynamicalClass::Unclassified;
  std::optional<LyapunovSpectrum> lyapunov;
};

struct CensusOptions {
  int n_ics = 1000;
  std::uint64_t seed = 1;
  IcBox box;
  double threshold = 0.05;
  IntegrationSettings integration;
  /// Parameter set to each grid value.
  Parameter sweep = Parameter::Eps;
  bool compute_lyapunov = true;
  LyapunovSettings lyapunov;
  /// Exponents per representative; 0 means min(2N, 4).
  int lyapunov_k = 0;
  int workers = 1;
  double spike_threshold = kSpikeThreshold;
};

struct CensusResult {
  double param_value = 0.0;
  int n_ics = 0;
  int n_diverged = 0;
  std::vector<AttractorRecord> attractors;
  /// Group of every IC, -1 for diverged ones.
  std::vector<int> ic_group;

  int n_attractors() const noexcept { return static_cast<int>(attractors.size()); }
};

CensusResult census_at(const ModelParams& p, const CouplingConfig& c,
                       const std::vector<NetworkState>& ics, const CensusOptions& opt);

/// One census per grid value with the same sampled ICs.
std::vector<CensusResult> census(const ModelParams& p, const CouplingConfig& c,
                                 const std::vector<double>& grid, const CensusOptions& opt);

struct DegreeAmplitudeRow {
  int group_id;
  int unit;  // 0-based
  int degree;
  double amplitude;
};

struct DegreeAmplitudeReport {
  std::vector<DegreeAmplitudeRow> rows;
  /// Spearman rank correlation of degree vs amplitude; NaN with < 2 rows or no spread.
  double rank_correlation;
};

/// Rows for solitary attractors: exactly one unit at or above kLargeAmplitude.
DegreeAmplitudeReport degree_amplitude_report(const std::vector<AttractorRecord>& records,
                                              const CouplingConfig& c);

double spearman(const std::vector<double>& a, const std::vector<double>& b);

void write_census_csv(std::ostream& os, const CensusResult& r);
void write_census_summary_csv(std::ostream& os, const std::vector<CensusResult>& results);
void write_degree_amplitude_csv(std::ostream& os, const DegreeAmplitudeReport& r);

}  // namespace multistab
