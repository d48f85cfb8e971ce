// Copyright 2026 The spiderwalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spiderwalk/analytic.hpp"
#include "spiderwalk/local_time.hpp"

namespace spiderwalk {

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace detail {

// Regularized incomplete gamma P(a,x); series for x < a+1, Lentz continued
// fraction otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace detail

/// Upper-tail probability of a chi-square variable with df degrees of freedom.
inline double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return 1.0 - detail::gamma_p(0.5 * df, 0.5 * x);
}

/// Kolmogorov limit survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 l^2}.
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  if (lambda < 1.18) {
    // Dual theta-series form, accurate where the alternating series is slow.
    double t = std::exp(-kPi * kPi / (8.0 * lambda * lambda));
    double sum = t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0);
    return std::max(0.0, 1.0 - std::sqrt(2.0 * kPi) / lambda * sum);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

// ---------------------------------------------------------------------------
// Test results
// ---------------------------------------------------------------------------

struct TestResult {
  enum class Mode { pvalue_above, stat_below, stat_at_least };

  std::string name;
  double statistic = 0.0;
  double p_value = 1.0;
  std::int64_t n_samples = 0;
  double threshold = 0.0;
  Mode mode = Mode::pvalue_above;
  bool pass = false;

  static TestResult by_pvalue(std::string name, double stat, double p,
                              std::int64_t n, double alpha) {
    TestResult r{std::move(name), stat, p, n, alpha, Mode::pvalue_above, p > alpha};
    return r;
  }
  static TestResult by_bound(std::string name, double stat, std::int64_t n,
                             double bound, double p = 1.0) {
    TestResult r{std::move(name), stat, p, n, bound, Mode::stat_below, stat <= bound};
    return r;
  }
  static TestResult by_floor(std::string name, double stat, std::int64_t n,
                             double floor) {
    TestResult r{std::move(name), stat, 1.0, n, floor, Mode::stat_at_least, stat >= floor};
    return r;
  }
};

// ---------------------------------------------------------------------------
// Empirical CDFs and Kolmogorov-Smirnov tests
// ---------------------------------------------------------------------------

/// Right-continuous empirical CDF over a frozen sample.
class Ecdf {
 public:
  explicit Ecdf(std::span<const double> samples)
      : sorted_(samples.begin(), samples.end()) {
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double x) const {
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// sup |ECDF - cdf| over sorted samples, evaluated on both sides of every tie
/// group. cdf_values[i] must equal cdf(sorted[i]).
inline double ks_statistic_sorted(std::span<const double> sorted,
                                  std::span<const double> cdf_values) {
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    double f = cdf_values[i];
    d = std::max(d, static_cast<double>(j + 1) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
    i = j + 1;
  }
  return d;
}

inline double ks_statistic(std::span<const double> samples,
                           const std::function<double(double)>& cdf) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cdf_values(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) cdf_values[i] = cdf(sorted[i]);
  return ks_statistic_sorted(sorted, cdf_values);
}

inline double ks_pvalue(double d, double n_effective) {
  double sq = std::sqrt(n_effective);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}

/// One-sample KS test against a continuous CDF, asymptotic p-value.
inline TestResult ks_one_sample(std::span<const double> samples,
                                const std::function<double(double)>& cdf,
                                double alpha = 1e-3, std::string name = "ks") {
  if (samples.size() < 10) throw std::invalid_argument("ks_one_sample: need >= 10 samples");
  double d = ks_statistic(samples, cdf);
  double p = ks_pvalue(d, static_cast<double>(samples.size()));
  return TestResult::by_pvalue(std::move(name), d, p,
                               static_cast<std::int64_t>(samples.size()), alpha);
}

inline double ks_statistic_two(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  while (i < sa.size() && j < sb.size()) {
    double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline TestResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                                double alpha = 1e-3, std::string name = "ks2") {
  if (a.size() < 10 || b.size() < 10)
    throw std::invalid_argument("ks_two_sample: need >= 10 samples in each");
  double d = ks_statistic_two(a, b);
  double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
              static_cast<double>(a.size() + b.size());
  return TestResult::by_pvalue(std::move(name), d, ks_pvalue(d, ne),
                               static_cast<std::int64_t>(a.size() + b.size()), alpha);
}

// ---------------------------------------------------------------------------
// Chi-square goodness of fit for discrete pmfs
// ---------------------------------------------------------------------------

/// Pearson chi-square of observed counts against total*pmf(m). Bins at and
/// beyond tail_cut are pooled; bins are further merged from the tail down
/// until every expected count reaches 5, and the test refuses to run when
/// that fails.
inline TestResult chi_square_pmf(const std::map<std::int64_t, std::int64_t>& counts,
                                 const std::function<double(std::int64_t)>& pmf,
                                 std::int64_t tail_cut, double alpha = 1e-3,
                                 std::string name = "chi_square") {
  if (tail_cut < 1) throw std::invalid_argument("chi_square_pmf: tail_cut must be >= 1");
  std::int64_t total = 0;
  for (const auto& [m, c] : counts) {
    if (m < 0 || c < 0) throw std::invalid_argument("chi_square_pmf: bad counts");
    total += c;
  }
  if (total < 1000) throw std::invalid_argument("chi_square_pmf: need >= 1000 samples");

  std::vector<double> expected;
  std::vector<std::int64_t> observed;
  double head_mass = 0.0;
  for (std::int64_t m = 0; m < tail_cut; ++m) {
    double pm = pmf(m);
    head_mass += pm;
    expected.push_back(pm * static_cast<double>(total));
    auto it = counts.find(m);
    observed.push_back(it == counts.end() ? 0 : it->second);
  }
  // Pooled tail bin m >= tail_cut.
  double tail_mass = std::max(0.0, 1.0 - head_mass);
  expected.push_back(tail_mass * static_cast<double>(total));
  std::int64_t tail_obs = 0;
  for (const auto& [m, c] : counts) {
    if (m >= tail_cut) tail_obs += c;
  }
  observed.push_back(tail_obs);

  // Merge from the tail toward the head until all expected counts reach 5.
  while (expected.size() > 1 && expected.back() < 5.0) {
    expected[expected.size() - 2] += expected.back();
    observed[observed.size() - 2] += observed.back();
    expected.pop_back();
    observed.pop_back();
  }
  for (double e : expected) {
    if (e < 5.0)
      throw std::invalid_argument("chi_square_pmf: cannot pool to expected counts >= 5");
  }
  if (expected.size() < 2) throw std::invalid_argument("chi_square_pmf: too few bins");

  double stat = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    double diff = static_cast<double>(observed[i]) - expected[i];
    stat += diff * diff / expected[i];
  }
  double df = static_cast<double>(expected.size()) - 1.0;
  return TestResult::by_pvalue(std::move(name), stat, chi_square_sf(stat, df), total, alpha);
}

// ---------------------------------------------------------------------------
// Moments and summaries
// ---------------------------------------------------------------------------

inline double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double variance_of(std::span<const double> xs) {
  double m = mean_of(xs), s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median_of: empty");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// z-score of the sample mean against a target, using the sample SE.
inline TestResult mean_within_se(std::span<const double> xs, double target,
                                 double max_z, std::string name) {
  double m = mean_of(xs);
  double se = std::sqrt(variance_of(xs) / static_cast<double>(xs.size()));
  double z = se > 0.0 ? std::abs(m - target) / se : (m == target ? 0.0 : 1e18);
  return TestResult::by_bound(std::move(name), z, static_cast<std::int64_t>(xs.size()), max_z);
}

/// z-score of the sample variance against a target, with the asymptotic
/// SE sqrt((m4 - m2^2)/n) from the fourth central moment.
inline TestResult variance_within_se(std::span<const double> xs, double target,
                                     double max_z, std::string name) {
  double m = mean_of(xs);
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(xs.size());
  m4 /= static_cast<double>(xs.size());
  double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(xs.size()));
  double z = se > 0.0 ? std::abs(m2 - target) / se : (m2 == target ? 0.0 : 1e18);
  return TestResult::by_bound(std::move(name), z, static_cast<std::int64_t>(xs.size()), max_z);
}

/// 99 evenly spaced ECDF quantiles (1%..99%), enough to replot a distribution
/// without raw samples.
inline std::vector<double> quantiles_99(std::vector<double> xs) {
  if (xs.empty()) return {};
  std::sort(xs.begin(), xs.end());
  std::vector<double> q(99);
  for (int i = 1; i <= 99; ++i) {
    double pos = static_cast<double>(i) / 100.0 * static_cast<double>(xs.size() - 1);
    auto lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    q[static_cast<std::size_t>(i - 1)] =
        lo + 1 < xs.size() ? xs[lo] * (1.0 - frac) + xs[lo + 1] * frac : xs[lo];
  }
  return q;
}

// ---------------------------------------------------------------------------
// Min/max occupation aggregation
// ---------------------------------------------------------------------------

/// Occupation snapshots of one replication at dyadic horizons 2^k.
struct DyadicOccupation {
  std::vector<int> ks;
  std::vector<OccupationVector> snapshots;
};

struct MinMaxSummary {
  std::vector<double> max_fraction_final;
  std::vector<double> min_fraction_final;
  std::int64_t sandwich_checks = 0;
  std::int64_t sandwich_violations = 0;
  std::int64_t reps_entering_upper_band = 0;
  std::int64_t reps_entering_lower_band = 0;
  std::vector<std::int64_t> io_dip_counts;  // per rep, only when f is given
};

/// Per-replication extreme occupation fractions plus dyadic diagnostics: the
/// exact min <= mean <= max sandwich against (n - xi(0,n))/N, entry of
/// T_M/2^k and T_m/2^k into the band of half-width `band` around 1/N, and
/// counts of checkpoints with T_m(2^k) < 2^k / f(2^k) when a test function is
/// supplied.
inline MinMaxSummary minmax_occupation(std::span<const DyadicOccupation> reps,
                                       int num_legs, double band = 0.05,
                                       const IntegralTestFunction* f = nullptr) {
  if (num_legs < 2) throw std::invalid_argument("minmax_occupation: need N >= 2");
  MinMaxSummary out;
  const double inv_n = 1.0 / static_cast<double>(num_legs);
  for (const auto& rep : reps) {
    bool upper = false, lower = false;
    std::int64_t dips = 0;
    for (std::size_t i = 0; i < rep.snapshots.size(); ++i) {
      const auto& occ = rep.snapshots[i];
      const double horizon = static_cast<double>(occ.horizon);
      const double t_max = static_cast<double>(occ.max_leg());
      const double t_min = static_cast<double>(occ.min_leg());
      const double leg_mean =
          static_cast<double>(occ.horizon - occ.origin_time) / num_legs;
      ++out.sandwich_checks;
      if (!(t_min <= leg_mean && leg_mean <= t_max)) ++out.sandwich_violations;
      double fm = t_max / horizon, fm_low = t_min / horizon;
      if (fm >= inv_n && fm <= inv_n + band) upper = true;
      if (fm_low >= inv_n - band && fm_low <= inv_n) lower = true;
      if (f != nullptr) {
        double x = horizon;
        if (x >= f->x_min && t_min < x / (*f)(x)) ++dips;
      }
    }
    if (upper) ++out.reps_entering_upper_band;
    if (lower) ++out.reps_entering_lower_band;
    if (f != nullptr) out.io_dip_counts.push_back(dips);
    if (!rep.snapshots.empty()) {
      const auto& last = rep.snapshots.back();
      out.max_fraction_final.push_back(static_cast<double>(last.max_leg()) /
                                       static_cast<double>(last.horizon));
      out.min_fraction_final.push_back(static_cast<double>(last.min_leg()) /
                                       static_cast<double>(last.horizon));
    }
  }
  return out;
}

}  // namespace spiderwalk
