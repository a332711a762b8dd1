#include "multistab/attractors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "multistab/error.hpp"
#include "multistab/parallel.hpp"

namespace multistab {

std::vector<double> FeatureVector::flatten() const {
  std::vector<double> v;
  v.reserve(1 + per_unit_amplitude.size() * 4);
  v.push_back(mean_pairwise_distance);
  v.insert(v.end(), per_unit_amplitude.begin(), per_unit_amplitude.end());
  v.insert(v.end(), per_unit_frequency.begin(), per_unit_frequency.end());
  v.insert(v.end(), per_unit_mean.begin(), per_unit_mean.end());
  return v;
}

FeatureAccumulator::FeatureAccumulator(int n_units, double spike_threshold)
    : n_(n_units),
      threshold_(spike_threshold),
      min_(n_units, std::numeric_limits<double>::infinity()),
      max_(n_units, -std::numeric_limits<double>::infinity()),
      sum_(2 * n_units, 0.0),
      prev_x_(n_units, 0.0),
      spikes_(n_units, 0) {
  if (n_units < 1) throw ConfigError("FeatureAccumulator: n_units must be >= 1");
}

void FeatureAccumulator::add(double t, std::span<const double> s) {
  if (count_ == 0) t_first_ = t;
  t_last_ = t;
  double dist = 0.0;
  for (int i = 0; i < n_; ++i) {
    const double x = s[2 * i];
    min_[i] = std::min(min_[i], x);
    max_[i] = std::max(max_[i], x);
    sum_[2 * i] += x;
    sum_[2 * i + 1] += s[2 * i + 1];
    if (count_ > 0 && prev_x_[i] < threshold_ && x >= threshold_) ++spikes_[i];
    prev_x_[i] = x;
    for (int j = i + 1; j < n_; ++j)
      dist += std::hypot(x - s[2 * j], s[2 * i + 1] - s[2 * j + 1]);
  }
  if (n_ > 1) dist_sum_ += dist / (0.5 * n_ * (n_ - 1));
  ++count_;
}

FeatureVector FeatureAccumulator::finish() const {
  if (count_ < 100)
    throw ConfigError("featurize: need at least 100 samples, got " + std::to_string(count_));
  const double window = t_last_ - t_first_;
  if (!(window > 0.0)) throw ConfigError("featurize: empty time window");
  const double n = static_cast<double>(count_);
  FeatureVector f;
  f.mean_pairwise_distance = dist_sum_ / n;
  for (int i = 0; i < n_; ++i) {
    f.per_unit_amplitude.push_back(max_[i] - min_[i]);
    f.per_unit_frequency.push_back(static_cast<double>(spikes_[i]) / window);
  }
  for (double s : sum_) f.per_unit_mean.push_back(s / n);
  return f;
}

FeatureVector featurize(const Trajectory& traj, double spike_threshold) {
  if (traj.dimension() % 2 != 0 || traj.dimension() == 0)
    throw ConfigError("featurize: trajectory dimension must be 2N");
  FeatureAccumulator acc(traj.dimension() / 2, spike_threshold);
  for (std::size_t k = 0; k < traj.size(); ++k)
    acc.add(traj.times[k], {traj.states.col(static_cast<Eigen::Index>(k)).data(),
                            static_cast<std::size_t>(traj.dimension())});
  return acc.finish();
}

std::string amplitude_label(const FeatureVector& f) {
  std::string out;
  for (std::size_t i = 0; i < f.per_unit_amplitude.size(); ++i) {
    if (i) out += '-';
    const double a = f.per_unit_amplitude[i];
    out += a < kAmplitudeFloor ? "SS" : a < kLargeAmplitude ? "SA" : "LA";
  }
  return out;
}

void IcBox::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max) || !std::isfinite(x_min) || !std::isfinite(x_max) ||
      !std::isfinite(y_min) || !std::isfinite(y_max))
    throw ConfigError("IC box must be finite and nonempty");
}

std::vector<NetworkState> sample_ics(int n_units, int n, std::uint64_t seed, const IcBox& box) {
  if (n < 1) throw ConfigError("sample_ics: n must be >= 1");
  if (n_units < 1) throw ConfigError("sample_ics: n_units must be >= 1");
  box.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.x_min, box.x_max), uy(box.y_min, box.y_max);
  std::vector<NetworkState> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    NetworkState s(2 * n_units);
    for (int i = 0; i < n_units; ++i) {
      s[2 * i] = ux(rng);
      s[2 * i + 1] = uy(rng);
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::vector<double> normalization_floor(int n_units) {
  std::vector<double> floor;
  floor.push_back(1.0);
  for (int i = 0; i < n_units; ++i) floor.push_back(1.0);
  for (int i = 0; i < n_units; ++i) floor.push_back(0.01);
  for (int i = 0; i < n_units; ++i) {
    floor.push_back(1.0);
    floor.push_back(0.01);
  }
  return floor;
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<int> group(const std::vector<FeatureVector>& features, double threshold) {
  if (features.empty()) throw ConfigError("group: need at least one feature vector");
  if (!(threshold >= 0.0)) throw ConfigError("group: threshold must be >= 0");
  const int n = static_cast<int>(features.size());
  const int units = features.front().n_units();
  std::vector<std::vector<double>> v;
  v.reserve(n);
  for (const auto& f : features) {
    if (f.n_units() != units) throw ConfigError("group: feature vectors differ in unit count");
    v.push_back(f.flatten());
  }
  const std::size_t dims = v.front().size();
  const auto floor = normalization_floor(units);
  std::vector<double> scale(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    double lo = v[0][d], hi = v[0][d];
    for (const auto& row : v) {
      lo = std::min(lo, row[d]);
      hi = std::max(hi, row[d]);
    }
    scale[d] = std::max(hi - lo, floor[d]);
  }
  for (auto& row : v)
    for (std::size_t d = 0; d < dims; ++d) row[d] /= scale[d];

  DisjointSets sets(n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (sets.find(a) == sets.find(b)) continue;
      bool close = true;
      for (std::size_t d = 0; d < dims && close; ++d)
        close = std::abs(v[a][d] - v[b][d]) <= threshold;
      if (close) sets.unite(a, b);
    }
  std::vector<int> label(n), id_of_root(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = sets.find(i);
    if (id_of_root[r] < 0) id_of_root[r] = next++;
    label[i] = id_of_root[r];
  }
  return label;
}

CensusResult census_at(const ModelParams& p, const CouplingConfig& c,
                       const std::vector<NetworkState>& ics, const CensusOptions& opt) {
  if (ics.empty()) throw ConfigError("census: no initial conditions");
  opt.integration.validate();
  const NetworkSystem sys(p, c);
  const VectorField f = make_vector_field(sys);
  const int n = static_cast<int>(ics.size());
  const int units = c.n_units();

  std::vector<std::optional<FeatureVector>> feats(n);
  std::vector<NetworkState> finals(n);
  parallel_for(n, opt.workers, [&](std::size_t k) {
    check_state(ics[k], c);
    FeatureAccumulator acc(units, opt.spike_threshold);
    try {
      finals[k] = integrate(f, ics[k], opt.integration,
                            [&](double t, std::span<const double> s) { acc.add(t, s); });
      FeatureVector fv = acc.finish();
      const auto flat = fv.flatten();
      if (std::all_of(flat.begin(), flat.end(), [](double x) { return std::isfinite(x); }))
        feats[k] = std::move(fv);
    } catch (const NumericalError&) {
    }
  });

  CensusResult res;
  res.param_value = get_parameter(opt.sweep, p, c);
  res.n_ics = n;
  res.ic_group.assign(n, -1);
  std::vector<FeatureVector> ok;
  std::vector<int> ok_index;
  for (int k = 0; k < n; ++k) {
    if (feats[k]) {
      ok.push_back(*feats[k]);
      ok_index.push_back(k);
    } else {
      ++res.n_diverged;
    }
  }
  if (ok.empty()) return res;

  const auto labels = group(ok, opt.threshold);
  const int n_groups = *std::max_element(labels.begin(), labels.end()) + 1;
  res.attractors.resize(n_groups);
  std::vector<std::vector<double>> centroid(n_groups);
  for (std::size_t m = 0; m < ok.size(); ++m) {
    auto& rec = res.attractors[labels[m]];
    const auto flat = ok[m].flatten();
    auto& cen = centroid[labels[m]];
    if (rec.basin_count == 0) {
      rec.group_id = labels[m];
      rec.representative_state = finals[ok_index[m]];
      cen.assign(flat.size(), 0.0);
    }
    for (std::size_t d = 0; d < flat.size(); ++d) cen[d] += flat[d];
    ++rec.basin_count;
    res.ic_group[ok_index[m]] = labels[m];
  }
  for (int g = 0; g < n_groups; ++g) {
    auto& rec = res.attractors[g];
    const auto& cen = centroid[g];
    const double w = 1.0 / rec.basin_count;
    rec.features.mean_pairwise_distance = cen[0] * w;
    for (int i = 0; i < units; ++i) {
      rec.features.per_unit_amplitude.push_back(cen[1 + i] * w);
      rec.features.per_unit_frequency.push_back(cen[1 + units + i] * w);
    }
    for (int i = 0; i < 2 * units; ++i) rec.features.per_unit_mean.push_back(cen[1 + 2 * units + i] * w);
    rec.label = amplitude_label(rec.features);
  }

  const int k_exp = opt.lyapunov_k > 0 ? std::min(opt.lyapunov_k, 2 * units)
                                       : std::min(2 * units, 4);
  parallel_for(n_groups, opt.workers, [&](std::size_t g) {
    auto& rec = res.attractors[g];
    if (!opt.compute_lyapunov) {
      const bool still = std::all_of(rec.features.per_unit_amplitude.begin(),
                                     rec.features.per_unit_amplitude.end(),
                                     [](double a) { return a < kAmplitudeFloor; });
      rec.dynamical_class = still ? DynamicalClass::Equilibrium : DynamicalClass::Unclassified;
      return;
    }
    try {
      rec.lyapunov = spectrum(rec.representative_state, k_exp, p, c, opt.lyapunov);
      rec.dynamical_class = classify(*rec.lyapunov, rec.features);
    } catch (const NumericalError&) {
      rec.dynamical_class = DynamicalClass::Unclassified;
    }
  });
  return res;
}

std::vector<CensusResult> census(const ModelParams& p, const CouplingConfig& c,
                                 const std::vector<double>& grid, const CensusOptions& opt) {
  if (grid.empty()) throw ConfigError("census: empty parameter grid");
  const auto ics = sample_ics(c.n_units(), opt.n_ics, opt.seed, opt.box);
  std::vector<CensusResult> out;
  for (double value : grid) {
    ModelParams pp = p;
    CouplingConfig cc = c;
    set_parameter(opt.sweep, value, pp, cc);
    out.push_back(census_at(pp, cc, ics, opt));
  }
  return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("spearman: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    for (std::size_t s = 0; s < n;) {
      std::size_t e = s;
      while (e + 1 < n && v[idx[e + 1]] == v[idx[s]]) ++e;
      const double avg = 0.5 * static_cast<double>(s + e) + 1.0;
      for (std::size_t m = s; m <= e; ++m) r[idx[m]] = avg;
      s = e + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

DegreeAmplitudeReport degree_amplitude_report(const std::vector<AttractorRecord>& records,
                                              const CouplingConfig& c) {
  DegreeAmplitudeReport rep;
  for (const auto& rec : records) {
    const auto& amp = rec.features.per_unit_amplitude;
    if (static_cast<int>(amp.size()) != c.n_units())
      throw ConfigError("degree_amplitude_report: record does not match coupling");
    int large = 0, unit = -1;
    for (std::size_t i = 0; i < amp.size(); ++i)
      if (amp[i] >= kLargeAmplitude) {
        ++large;
        unit = static_cast<int>(i);
      }
    if (large == 1) rep.rows.push_back({rec.group_id, unit, c.degree(unit), amp[unit]});
  }
  std::vector<double> deg, a;
  for (const auto& r : rep.rows) {
    deg.push_back(r.degree);
    a.push_back(r.amplitude);
  }
  rep.rank_correlation = spearman(deg, a);
  return rep;
}

namespace {
void write_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}
}  // namespace

void write_census_csv(std::ostream& os, const CensusResult& r) {
  int units = 0;
  std::size_t k = 0;
  for (const auto& rec : r.attractors) {
    units = rec.features.n_units();
    if (rec.lyapunov) k = std::max(k, rec.lyapunov->exponents.size());
  }
  os << "group_id,basin_count,class,mean_pairwise_distance";
  for (int i = 1; i <= units; ++i) os << ",amp_" << i;
  for (int i = 1; i <= units; ++i) os << ",freq_" << i;
  for (int i = 1; i <= units; ++i) os << ",mean_x" << i << ",mean_y" << i;
  os << ",label";
  for (std::size_t i = 1; i <= k; ++i) os << ",lyap_" << i;
  if (k) os << ",converged";
  os << '\n';
  for (const auto& rec : r.attractors) {
    os << rec.group_id << ',' << rec.basin_count << ',' << to_string(rec.dynamical_class);
    for (double v : rec.features.flatten()) {
      os << ',';
      write_double(os, v);
    }
    os << ',' << rec.label;
    for (std::size_t i = 0; i < k; ++i) {
      os << ',';
      if (rec.lyapunov && i < rec.lyapunov->exponents.size()) write_double(os, rec.lyapunov->exponents[i]);
    }
    if (k) os << ',' << (rec.lyapunov ? (rec.lyapunov->converged ? "true" : "false") : "");
    os << '\n';
  }
}

void write_census_summary_csv(std::ostream& os, const std::vector<CensusResult>& results) {
  os << "eps,n_attractors,n_diverged\n";
  for (const auto& r : results) {
    write_double(os, r.param_value);
    os << ',' << r.n_attractors() << ',' << r.n_diverged << '\n';
  }
}

void write_degree_amplitude_csv(std::ostream& os, const DegreeAmplitudeReport& r) {
  os << "group_id,unit,degree,amplitude\n";
  for (const auto& row : r.rows) {
    os << row.group_id << ',' << row.unit + 1 << ',' << row.degree << ',';
    write_double(os, row.amplitude);
    os << '\n';
  }
}

}  // namespace multistab
