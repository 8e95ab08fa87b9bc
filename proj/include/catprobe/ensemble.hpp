#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "catprobe/accum.hpp"
#include "catprobe/errors.hpp"
#include "catprobe/qstate.hpp"
#include "catprobe/rng.hpp"

// Estimators over weighted ensembles of occupation probabilities: moments
// <P^k>, the localization correlator <P(1-P)>, averaged density matrices,
// distribution diagnostics (histogram, Kolmogorov-Smirnov against uniform),
// and synthetic ensemble generators for the degenerate collapsed/delocalized
// pair that the averaged density matrix cannot distinguish.

namespace catprobe {

inline constexpr int kHistogramBins = 50;

struct WeightedSample {
  double w;  // weight >= 0
  double p;  // probability in [0, 1]
};

inline void validate_sample(double w, double p) {
  if (!std::isfinite(w) || w < 0.0) throw data_error("weight must be finite and >= 0");
  if (!std::isfinite(p) || p < -1e-12 || p > 1.0 + 1e-12) {
    throw data_error("probability sample outside [0, 1]: p = " + std::to_string(p));
  }
}

// List of (weight, probability) pairs with sum(w) = 1 within 1e-10.
class WeightedEnsemble {
 public:
  WeightedEnsemble() = default;

  explicit WeightedEnsemble(std::vector<WeightedSample> entries)
      : entries_(std::move(entries)) {
    CompensatedSum total;
    for (auto& s : entries_) {
      validate_sample(s.w, s.p);
      s.p = std::clamp(s.p, 0.0, 1.0);
      total.add(s.w);
    }
    if (std::abs(total.value() - 1.0) > 1e-10) {
      throw data_error("ensemble weights must sum to 1 within 1e-10, got " +
                       std::to_string(total.value()));
    }
  }

  const std::vector<WeightedSample>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<WeightedSample> entries_;
};

struct MomentEstimate {
  int k = 0;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  double density = 0.0;
};

struct MomentReport {
  std::vector<MomentEstimate> moments;  // k = 1..k_max
  double correlator = 0.0;              // <P (1 - P)>
  double correlator_std_error = 0.0;
  std::vector<HistogramBin> histogram;  // kHistogramBins fixed-width bins on [0, 1]
  double ks_statistic = std::numeric_limits<double>::quiet_NaN();  // NaN below 100 samples
  std::uint64_t n_samples = 0;
  double n_eff = 0.0;                   // (sum w)^2 / sum w^2
  double evaluated_at_time = std::numeric_limits<double>::quiet_NaN();
};

// Mergeable running estimator of weighted probability moments.
//
// Holds weighted power sums for k = 1..2*k_max (the upper half feeds the
// standard errors), sum(w), sum(w^2), a fixed 50-bin histogram, and the raw
// (w, p) samples so the KS statistic comes from the exact empirical CDF.
// merge() is equivalent to accumulating the concatenated stream; callers that
// run in parallel merge block accumulators in a fixed order.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int k_max)
      : k_max_(k_max), power_sums_(static_cast<std::size_t>(2 * k_max)) {
    if (k_max < 1) throw config_error("MomentAccumulator: k_max must be >= 1");
  }

  int k_max() const { return k_max_; }
  std::uint64_t count() const { return count_; }

  void add(double w, double p) {
    validate_sample(w, p);
    p = std::clamp(p, 0.0, 1.0);
    double pk = 1.0;
    for (auto& sum : power_sums_) {
      pk *= p;
      sum.add(w * pk);
    }
    const double q = p * (1.0 - p);
    corr_sum_.add(w * q);
    corr_sq_sum_.add(w * q * q);
    weight_sum_.add(w);
    weight_sq_sum_.add(w * w);
    hist_[bin_index(p)].add(w);
    samples_.push_back({w, p});
    ++count_;
  }

  void add(const WeightedEnsemble& ens) {
    for (const auto& s : ens.entries()) add(s.w, s.p);
  }

  void merge(const MomentAccumulator& other) {
    if (other.k_max_ != k_max_) throw data_error("MomentAccumulator: k_max mismatch in merge");
    for (std::size_t k = 0; k < power_sums_.size(); ++k) power_sums_[k].merge(other.power_sums_[k]);
    corr_sum_.merge(other.corr_sum_);
    corr_sq_sum_.merge(other.corr_sq_sum_);
    weight_sum_.merge(other.weight_sum_);
    weight_sq_sum_.merge(other.weight_sq_sum_);
    for (int b = 0; b < kHistogramBins; ++b) hist_[b].merge(other.hist_[b]);
    samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
    count_ += other.count_;
  }

  // Weighted one-sample KS statistic against the uniform CDF on [0, 1].
  double ks_statistic() const {
    std::vector<WeightedSample> sorted = samples_;
    std::sort(sorted.begin(), sorted.end(),
              [](const WeightedSample& a, const WeightedSample& b) { return a.p < b.p; });
    const double total = weight_sum_.value();
    double cum = 0.0;
    double d = 0.0;
    for (const auto& s : sorted) {
      const double before = cum / total;
      cum += s.w;
      const double after = cum / total;
      d = std::max({d, std::abs(before - s.p), std::abs(after - s.p)});
    }
    return d;
  }

  MomentReport report(int k_report = 0) const {
    if (count_ < 2) throw estimation_error("moment estimation needs at least 2 samples");
    if (k_report <= 0 || k_report > k_max_) k_report = k_max_;
    const double sw = weight_sum_.value();
    if (!(sw > 0.0)) throw estimation_error("moment estimation needs positive total weight");
    const double sw2 = weight_sq_sum_.value();
    const double n_eff = sw * sw / sw2;

    MomentReport rep;
    rep.n_samples = count_;
    rep.n_eff = n_eff;
    for (int k = 1; k <= k_report; ++k) {
      const double mk = power_sums_[static_cast<std::size_t>(k - 1)].value() / sw;
      const double m2k = power_sums_[static_cast<std::size_t>(2 * k - 1)].value() / sw;
      const double var = std::max(0.0, m2k - mk * mk);
      rep.moments.push_back({k, mk, std::sqrt(var / n_eff)});
    }
    const double corr = corr_sum_.value() / sw;
    const double corr_var = std::max(0.0, corr_sq_sum_.value() / sw - corr * corr);
    rep.correlator = corr;
    rep.correlator_std_error = std::sqrt(corr_var / n_eff);

    const double width = 1.0 / kHistogramBins;
    rep.histogram.resize(kHistogramBins);
    for (int b = 0; b < kHistogramBins; ++b) {
      rep.histogram[static_cast<std::size_t>(b)] = {b * width, (b + 1) * width,
                                                    hist_[b].value() / (sw * width)};
    }
    if (count_ >= 100) rep.ks_statistic = ks_statistic();
    return rep;
  }

 private:
  static int bin_index(double p) {
    const int b = static_cast<int>(p * kHistogramBins);
    return std::min(b, kHistogramBins - 1);
  }

  int k_max_;
  std::vector<CompensatedSum> power_sums_;  // k = 1..2*k_max
  CompensatedSum corr_sum_;                 // sum w p(1-p)
  CompensatedSum corr_sq_sum_;              // sum w [p(1-p)]^2
  CompensatedSum weight_sum_;
  CompensatedSum weight_sq_sum_;
  std::array<CompensatedSum, kHistogramBins> hist_{};
  std::vector<WeightedSample> samples_;
  std::uint64_t count_ = 0;
};

inline MomentReport estimate_moments(std::span<const WeightedSample> samples, int k_max) {
  if (samples.size() < 2) throw estimation_error("estimate_moments: need at least 2 samples");
  MomentAccumulator acc(k_max);
  for (const auto& s : samples) acc.add(s.w, s.p);
  return acc.report();
}

// Localization correlator sum_n w_n P_n (1 - P_n), normalized by sum_n w_n.
// Zero signals per-state collapse; a finite value signals surviving
// delocalization that the averaged density matrix hides. Always in [0, 1/4];
// equals <P> - <P^2> from the same data.
inline double localization_correlator(const WeightedEnsemble& ens) {
  if (ens.size() == 0) throw estimation_error("localization_correlator: empty ensemble");
  CompensatedSum num;
  CompensatedSum den;
  for (const auto& s : ens.entries()) {
    num.add(s.w * (s.p * (1.0 - s.p)));
    den.add(s.w);
  }
  return num.value() / den.value();
}

// rho = sum_n w_n |psi_n><psi_n| / sum_n w_n over pure two-level states.
inline DensityMatrix2 averaged_density_matrix(
    std::span<const std::pair<double, TwoLevelState>> states) {
  if (states.empty()) throw estimation_error("averaged_density_matrix: empty stream");
  CompensatedSum ll, rr, lr_re, lr_im, wsum;
  for (const auto& [w, psi] : states) {
    if (!std::isfinite(w) || w < 0.0) throw data_error("weight must be finite and >= 0");
    require_normalized(psi);
    const cplx cross = psi.amp_L * std::conj(psi.amp_R);
    ll.add(w * std::norm(psi.amp_L));
    rr.add(w * std::norm(psi.amp_R));
    lr_re.add(w * cross.real());
    lr_im.add(w * cross.imag());
    wsum.add(w);
  }
  const double sw = wsum.value();
  if (!(sw > 0.0)) throw estimation_error("averaged_density_matrix: zero total weight");
  const cplx lr{lr_re.value() / sw, lr_im.value() / sw};
  return DensityMatrix2{cplx{ll.value() / sw, 0.0}, lr, std::conj(lr),
                        cplx{rr.value() / sw, 0.0}};
}

// KS statistic from a finished report; errors below 100 samples.
inline double uniformity_test(const MomentReport& report) {
  if (report.n_samples < 100) {
    throw estimation_error("uniformity_test: need at least 100 samples, got " +
                           std::to_string(report.n_samples));
  }
  return report.ks_statistic;
}

enum class ScenarioKind { collapsed, delocalized, uniform };

inline const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::collapsed: return "collapsed";
    case ScenarioKind::delocalized: return "delocalized";
    case ScenarioKind::uniform: return "uniform";
  }
  return "?";
}

// Synthetic ensembles realizing the two ways the thermally averaged occupation
// can sit at 1/2:
//   collapsed:   equal-weight p in {0, 1}, balanced exactly for even n;
//   delocalized: every member at p = 1/2;
//   uniform:     i.i.d. uniform p (counter-based draws from `seed`).
// All have first moment 1/2 (within sampling error for `uniform`).
inline WeightedEnsemble synthetic_scenario(ScenarioKind kind, std::size_t n,
                                           std::uint64_t seed = 0) {
  if (n < 1) throw config_error("synthetic_scenario: n must be >= 1");
  const double w = 1.0 / static_cast<double>(n);
  std::vector<WeightedSample> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double p = 0.0;
    switch (kind) {
      case ScenarioKind::collapsed: p = (i % 2 == 0) ? 1.0 : 0.0; break;
      case ScenarioKind::delocalized: p = 0.5; break;
      case ScenarioKind::uniform: p = rng::uniform(seed, 1, i); break;
    }
    entries.push_back({w, p});
  }
  return WeightedEnsemble(std::move(entries));
}

// The same scenarios lifted to pure two-level states, for feeding
// averaged_density_matrix:
//   collapsed:   alternating |L>, |R>;
//   delocalized: alternating (|L> + |R>)/sqrt(2), (|L> - |R>)/sqrt(2);
//   uniform:     amp_L = sqrt(p), amp_R = sqrt(1-p) e^{i phi}, phi uniform.
inline std::vector<std::pair<double, TwoLevelState>> synthetic_scenario_states(
    ScenarioKind kind, std::size_t n, std::uint64_t seed = 0) {
  if (n < 1) throw config_error("synthetic_scenario_states: n must be >= 1");
  const double w = 1.0 / static_cast<double>(n);
  std::vector<std::pair<double, TwoLevelState>> states;
  states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TwoLevelState psi;
    switch (kind) {
      case ScenarioKind::collapsed:
        psi = (i % 2 == 0) ? TwoLevelState::left() : TwoLevelState::right();
        break;
      case ScenarioKind::delocalized:
        psi = (i % 2 == 0) ? TwoLevelState::plus() : TwoLevelState::minus();
        break;
      case ScenarioKind::uniform: {
        const double p = rng::uniform(seed, 1, i);
        const double phi = 2.0 * M_PI * rng::uniform(seed, 2, i);
        psi = TwoLevelState{cplx{std::sqrt(p), 0.0},
                            std::polar(std::sqrt(1.0 - p), phi)};
        break;
      }
    }
    states.emplace_back(w, psi);
  }
  return states;
}

}  // namespace catprobe
