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
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spiderwalk/rng.hpp"
#include "spiderwalk/spider.hpp"

namespace spiderwalk {

inline constexpr double kPi = 3.14159265358979323846;

/// Two-leg (skew) parameters: p is the probability of stepping onto the
/// positive leg from the origin, q = 1 - p.
struct SkewParams {
  double p = 0.5;
  double q = 0.5;

  explicit SkewParams(double p_) : p(p_), q(1.0 - p_) {
    if (!(p_ >= 0.0 && p_ <= 1.0))
      throw std::invalid_argument("SkewParams: p outside [0,1]");
  }
};

/// Origin-asymmetry factor: 2p on the positive side, 2q on the negative side.
inline double c_of(double x, const SkewParams& params) {
  if (x == 0.0) throw std::invalid_argument("c_of: x must be nonzero");
  return x > 0.0 ? 2.0 * params.p : 2.0 * params.q;
}

/// Distribution of the number of visits to site x during one excursion of a
/// skew walk from the origin: mass 1 - c(x)/(2|x|) at zero and a geometric
/// tail c(x)/(4x^2) * ((2|x|-1)/(2|x|))^(m-1) for m >= 1.
inline double excursion_pmf(std::int32_t x, const SkewParams& params, std::int64_t m) {
  if (x == 0) throw std::invalid_argument("excursion_pmf: x must be nonzero");
  if (m < 0) throw std::invalid_argument("excursion_pmf: m must be >= 0");
  const double ax = std::abs(static_cast<double>(x));
  const double c = c_of(x, params);
  if (m == 0) return 1.0 - c / (2.0 * ax);
  return c / (4.0 * ax * ax) * std::pow((2.0 * ax - 1.0) / (2.0 * ax), static_cast<double>(m - 1));
}

/// Mean c(x) and variance c(x)(4|x|-1) - c(x)^2 of the excursion visit count.
inline std::pair<double, double> excursion_moments(std::int32_t x, const SkewParams& params) {
  if (x == 0) throw std::invalid_argument("excursion_moments: x must be nonzero");
  const double ax = std::abs(static_cast<double>(x));
  const double c = c_of(x, params);
  return {c, c * (4.0 * ax - 1.0) - c * c};
}

/// Laplace transform E exp(-beta * L) of the skew Brownian local time L at x
/// accumulated until the origin local time reaches one:
/// exp(-c(x) beta / (1 + 2 beta |x|)). Mean c(x), variance 4 c(x) |x|.
inline double sbm_excursion_laplace(double x, double beta, const SkewParams& params) {
  if (x == 0.0) throw std::invalid_argument("sbm_excursion_laplace: x must be nonzero");
  if (!(beta > 0.0)) throw std::invalid_argument("sbm_excursion_laplace: beta must be > 0");
  const double c = c_of(x, params);
  return std::exp(-c * beta / (1.0 + 2.0 * beta * std::abs(x)));
}

/// Limit density of the positive-side occupation fraction of a skew walk:
/// pq / (pi sqrt(u(1-u)) (p^2(1-u) + q^2 u)). Reduces to the arcsine density
/// at p = 1/2.
inline double lamperti_pdf(double u, const SkewParams& params) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("lamperti_pdf: u outside (0,1)");
  if (!(params.p > 0.0 && params.p < 1.0))
    throw std::invalid_argument("lamperti_pdf: degenerate p");
  const double p = params.p, q = params.q;
  return p * q / (kPi * std::sqrt(u * (1.0 - u)) * (p * p * (1.0 - u) + q * q * u));
}

/// CDF of the occupation-fraction limit law. The substitution u = sin^2(t)
/// turns the density into a trigonometric rational with the elementary
/// antiderivative (2/pi) atan((q/p) tan t); tests cross-check this against
/// direct quadrature in the substituted variable.
inline double lamperti_cdf(double u, const SkewParams& params) {
  if (!(params.p > 0.0 && params.p < 1.0))
    throw std::invalid_argument("lamperti_cdf: degenerate p");
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double ratio = params.q / params.p;
  return 2.0 / kPi * std::atan(ratio * std::sqrt(u / (1.0 - u)));
}

namespace detail {

// Adaptive Simpson with explicit midpoint reuse.
template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-11, int depth = 40) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace detail

/// CDF of U sqrt(|V|) with U, V independent standard normals, the common
/// limit law of the scaled local-time contrasts and of scaled iterated
/// Brownian motion. Computed by quadrature over the mixing variable with the
/// substitution v = s^2, which keeps the integrand smooth at the origin;
/// negative arguments use the exact symmetry F(-z) = 1 - F(z).
inline double dobrushin_cdf(double z) {
  if (z == 0.0) return 0.5;
  if (z < 0.0) return 1.0 - dobrushin_cdf(-z);
  const double scale = std::sqrt(2.0 / kPi);
  auto integrand = [z](double s) {
    return std::erf(z / (s * std::sqrt(2.0))) * std::exp(-0.5 * s * s * s * s) * s;
  };
  double val = 0.5 + scale * detail::integrate(integrand, 0.0, 3.4, 1e-12, 48);
  return std::min(1.0, std::max(0.0, val));
}

/// Draw of the leg-occupation fraction vector of the Brownian spider at any
/// fixed time: (p_j^2 U_j) / sum_k p_k^2 U_k with U_k independent one-sided
/// stable-1/2 variables. Requires every leg probability positive.
inline std::vector<double> sample_joint_occupation(const SpiderConfig& config, Rng& rng) {
  config.validate();
  for (double p : config.leg_probs) {
    if (!(p > 0.0))
      throw std::invalid_argument("sample_joint_occupation: all leg probabilities must be > 0");
  }
  std::vector<double> fractions(config.leg_probs.size());
  double total = 0.0;
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    double w = config.leg_probs[j] * config.leg_probs[j] * rng.levy_stable_half();
    fractions[j] = w;
    total += w;
  }
  for (double& f : fractions) f /= total;
  return fractions;
}

/// Iterated Brownian motion at time t: W evaluated at an independent Brownian
/// local time at zero. Sampled exactly as sqrt(eta) * N2 with
/// eta = sqrt(t) |N1|; Z(t)/t^{1/4} then has the U sqrt(|V|) law for every t.
inline double sample_ibm(double t, Rng& rng) {
  if (!(t > 0.0)) throw std::invalid_argument("sample_ibm: t must be > 0");
  double eta = std::sqrt(t) * std::abs(rng.normal());
  return std::sqrt(eta) * rng.normal();
}

/// Test function for the occupation-time integral criterion. Must be positive
/// and nondecreasing with x/f(x) nondecreasing on [x_min, inf); violations
/// beyond 1e-9 relative on a log grid are rejected.
struct IntegralTestFunction {
  std::function<double(double)> f;
  double x_min = 1.0;

  double operator()(double x) const { return f(x); }

  void validate(double x_max = 1.152921504606847e18 /* 2^60 */) const {
    if (!f) throw std::invalid_argument("IntegralTestFunction: empty function");
    if (!(x_min >= 1.0)) throw std::invalid_argument("IntegralTestFunction: x_min must be >= 1");
    const int grid = 512;
    double prev_f = -1.0, prev_ratio = -1.0;
    for (int i = 0; i <= grid; ++i) {
      double x = x_min * std::pow(x_max / x_min, static_cast<double>(i) / grid);
      double fx = f(x);
      if (!(fx > 0.0) || !std::isfinite(fx))
        throw std::invalid_argument("IntegralTestFunction: f must be positive and finite");
      if (i > 0 && fx < prev_f * (1.0 - 1e-9))
        throw std::invalid_argument("IntegralTestFunction: f must be nondecreasing");
      double ratio = x / fx;
      if (i > 0 && ratio < prev_ratio * (1.0 - 1e-9))
        throw std::invalid_argument("IntegralTestFunction: x/f(x) must be nondecreasing");
      prev_f = fx;
      prev_ratio = ratio;
    }
  }

  /// f(x) = (log x)^a on its admissible domain [e^max(1,a), inf): below that
  /// x/f(x) is decreasing and the function would fail its own invariants.
  static IntegralTestFunction log_power(double a) {
    IntegralTestFunction fn;
    fn.f = [a](double x) { return std::pow(std::log(x), a); };
    fn.x_min = std::exp(std::max(1.0, a));
    return fn;
  }

  static IntegralTestFunction constant(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("constant test function must be > 0");
    IntegralTestFunction fn;
    fn.f = [c](double) { return c; };
    fn.x_min = 1.0;
    return fn;
  }
};

enum class IntegralVerdict { convergent, divergent, inconclusive };

inline const char* to_string(IntegralVerdict v) {
  switch (v) {
    case IntegralVerdict::convergent: return "convergent";
    case IntegralVerdict::divergent: return "divergent";
    default: return "inconclusive";
  }
}

struct ChungErdosResult {
  double dyadic_sum = 0.0;
  IntegralVerdict verdict = IntegralVerdict::inconclusive;
  int k_start = 1;
  int k_max = 0;
  double tail_exponent = 0.0;  // fitted decay exponent of the dyadic terms
};

/// Numeric stand-in for the convergence test of I(f) = int dx / (x sqrt(f)):
/// the integral converges exactly when the dyadic sum over 1/sqrt(f(2^k))
/// does. The verdict fits the decay exponent of the dyadic terms over the
/// last quarter of checkpoints: summable decay (faster than 1/k) reads
/// convergent, sub-1/k decay divergent, and the 1/k boundary stays
/// inconclusive since no finite sample of f can settle it.
inline ChungErdosResult chung_erdos_test(const IntegralTestFunction& fn, int k_max) {
  if (k_max < 10) throw std::invalid_argument("chung_erdos_test: k_max must be >= 10");
  fn.validate(std::pow(2.0, k_max));
  ChungErdosResult result;
  result.k_max = k_max;
  while (std::pow(2.0, result.k_start) < fn.x_min) ++result.k_start;
  if (k_max - result.k_start < 8)
    throw std::invalid_argument("chung_erdos_test: too few checkpoints in domain");

  std::vector<double> terms;
  for (int k = result.k_start; k <= k_max; ++k) {
    double t = 1.0 / std::sqrt(fn(std::pow(2.0, k)));
    terms.push_back(t);
    result.dyadic_sum += t;
  }

  const int window = std::max(4, static_cast<int>(terms.size()) / 4);
  double tail_sum = 0.0;
  for (int i = 0; i < window; ++i) tail_sum += terms[terms.size() - 1 - static_cast<std::size_t>(i)];
  if (tail_sum < 1e-9) {
    result.verdict = IntegralVerdict::convergent;
    result.tail_exponent = std::numeric_limits<double>::infinity();
    return result;
  }

  // Least-squares slope of log(term) against log(k) over the tail window.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < window; ++i) {
    int k = k_max - window + 1 + i;
    double lx = std::log(static_cast<double>(k));
    double ly = std::log(terms[static_cast<std::size_t>(k - result.k_start)]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  double slope = (window * sxy - sx * sy) / (window * sxx - sx * sx);
  result.tail_exponent = -slope;

  const double margin = 0.05;
  if (result.tail_exponent > 1.0 + margin) {
    result.verdict = IntegralVerdict::convergent;
  } else if (result.tail_exponent < 1.0 - margin) {
    result.verdict = IntegralVerdict::divergent;
  } else {
    result.verdict = IntegralVerdict::inconclusive;
  }
  return result;
}

}  // namespace spiderwalk
