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

#include <cmath>
#include <map>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "spiderwalk/analytic.hpp"
#include "spiderwalk/rng.hpp"
#include "spiderwalk/stats.hpp"

using namespace spiderwalk;
using Catch::Approx;

TEST_CASE("chi-square survival function against frozen reference values") {
  struct Spec {
    double stat;
    double df;
    double sf;
  };
  const Spec table[] = {
      {0.5, 1, 0.479500122187},    {3.84, 1, 0.0500435212487},
      {28.32, 23, 0.203922263464}, {999.0, 999, 0.494049877959},
      {12.63, 7, 0.0816532105697}, {583.1234, 579, 0.444145838566},
      {138.2, 130, 0.294814329746}, {7972.52, 7834, 0.134471384549},
      {1.0, 4, 0.909795989569},
  };
  for (const auto& s : table) CHECK(chi_square_sf(s.stat, s.df) == Approx(s.sf).margin(1e-9));
  CHECK(chi_square_sf(0.0, 5) == 1.0);
}

TEST_CASE("kolmogorov survival function against frozen reference values") {
  struct Spec {
    double lambda;
    double q;
  };
  const Spec table[] = {
      {0.3, 0.999990694199},  {0.5, 0.963945243665},   {0.8284, 0.498701181238},
      {1.0, 0.269999671677},  {1.2, 0.112249666671},   {1.3581, 0.0499996304317},
      {2.0, 0.00067092525578}, {3.0, 3.04599594894e-08},
  };
  for (const auto& s : table) CHECK(kolmogorov_q(s.lambda) == Approx(s.q).epsilon(1e-8));
}

TEST_CASE("normal cdf spot values") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(-2.0) == Approx(0.0227501319481792).margin(1e-12));
  CHECK(normal_cdf(1.0) == Approx(0.841344746068543).margin(1e-12));
  CHECK(normal_cdf(1.959963984540054) == Approx(0.975).margin(1e-12));
}

TEST_CASE("one-sample KS statistic") {
  SECTION("single-point hand value") {
    // one sample at 0.5 against the uniform CDF: sup gap is 0.5 on both sides
    std::vector<double> s = {0.5};
    CHECK(ks_statistic(s, [](double x) { return std::clamp(x, 0.0, 1.0); }) == Approx(0.5));
  }

  SECTION("needs at least ten samples") {
    std::vector<double> s = {0.1, 0.2, 0.3};
    CHECK_THROWS_AS(ks_one_sample(s, [](double x) { return x; }), std::invalid_argument);
  }

  SECTION("null calibration: rejection rate at 5% stays near 5%") {
    Rng rng(SeedSpec{51, 0});
    int rejects = 0;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
      std::vector<double> s(100'000);
      for (auto& v : s) v = rng.uniform01();
      auto t = ks_one_sample(s, [](double x) { return std::clamp(x, 0.0, 1.0); });
      rejects += t.p_value < 0.05 ? 1 : 0;
    }
    double rate = static_cast<double>(rejects) / reps;
    CHECK(rate >= 0.01);
    CHECK(rate <= 0.12);
  }

  SECTION("power: Exp(1) samples against the Exp(2) CDF") {
    Rng rng(SeedSpec{51, 1});
    std::vector<double> s(10'000);
    for (auto& v : s) v = rng.exponential(1.0);
    auto t = ks_one_sample(s, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-2.0 * x); });
    CHECK(t.p_value < 1e-6);
  }
}

TEST_CASE("two-sample KS") {
  SECTION("identical samples give zero distance") {
    Rng rng(SeedSpec{52, 0});
    std::vector<double> s(500);
    for (auto& v : s) v = rng.normal();
    CHECK(ks_statistic_two(s, s) == 0.0);
  }

  SECTION("a sample has zero KS distance to its own ECDF") {
    Rng rng(SeedSpec{52, 3});
    std::vector<double> s(1'000);
    for (auto& v : s) v = std::floor(rng.normal() * 4.0);  // heavy ties on purpose
    CHECK(ks_statistic_two(s, s) == 0.0);
  }

  SECTION("null calibration at 1e4 vs 1e4") {
    Rng rng(SeedSpec{52, 1});
    int rejects = 0;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
      std::vector<double> a(10'000), b(10'000);
      for (auto& v : a) v = rng.normal();
      for (auto& v : b) v = rng.normal();
      auto t = ks_two_sample(a, b);
      rejects += t.p_value < 0.05 ? 1 : 0;
    }
    double rate = static_cast<double>(rejects) / reps;
    CHECK(rate >= 0.01);
    CHECK(rate <= 0.12);
  }

  SECTION("power: arcsine versus uniform") {
    Rng rng(SeedSpec{52, 2});
    std::vector<double> arcsine(10'000), uniform(10'000);
    for (auto& v : arcsine) {
      double u = rng.uniform01();
      v = std::sin(kPi * u / 2.0) * std::sin(kPi * u / 2.0);
    }
    for (auto& v : uniform) v = rng.uniform01();
    auto t = ks_two_sample(arcsine, uniform);
    CHECK(t.p_value < 1e-6);
  }
}

TEST_CASE("ECDF is a right-continuous step function with full range") {
  Rng rng(SeedSpec{53, 0});
  std::vector<double> s(1'000);
  for (auto& v : s) v = rng.normal();
  Ecdf ecdf(s);
  CHECK(ecdf(-1e18) == 0.0);
  CHECK(ecdf(1e18) == 1.0);
  double prev = 0.0;
  for (double x = -4.0; x <= 4.0; x += 0.01) {
    double v = ecdf(x);
    CHECK(v >= prev);
    prev = v;
  }
  // right continuity at a sample point
  double at = ecdf(ecdf.sorted()[500]);
  double above = ecdf(std::nextafter(ecdf.sorted()[500], 1e30));
  CHECK(at == above);
}

TEST_CASE("chi-square pmf test") {
  SECTION("counts exactly proportional to the pmf give statistic zero") {
    std::map<std::int64_t, std::int64_t> counts{{0, 5000}, {1, 2500}, {2, 1250}, {3, 1250}};
    auto pmf = [](std::int64_t m) {
      switch (m) {
        case 0: return 0.5;
        case 1: return 0.25;
        case 2: return 0.125;
        case 3: return 0.125;
        default: return 0.0;
      }
    };
    auto t = chi_square_pmf(counts, pmf, 4);
    CHECK(t.statistic == Approx(0.0).margin(1e-9));
    CHECK(t.p_value == Approx(1.0).margin(1e-9));
  }

  SECTION("inverse-transform samples of the excursion pmf pass") {
    SkewParams params(0.5);
    const std::int32_t x = 1;
    Rng rng(SeedSpec{54, 0});
    std::map<std::int64_t, std::int64_t> counts;
    for (int i = 0; i < 1'000'000; ++i) {
      double u = rng.uniform01();
      std::int64_t m = 0;
      double acc = excursion_pmf(x, params, 0);
      while (u >= acc && m < 100'000) {
        ++m;
        acc += excursion_pmf(x, params, m);
      }
      ++counts[m];
    }
    auto t = chi_square_pmf(counts, [&](std::int64_t m) { return excursion_pmf(x, params, m); }, 64);
    CHECK(t.p_value > 1e-3);
  }

  SECTION("power: samples from x=1 against the x=2 pmf") {
    SkewParams params(0.5);
    Rng rng(SeedSpec{54, 1});
    std::map<std::int64_t, std::int64_t> counts;
    for (int i = 0; i < 1'000'000; ++i) {
      double u = rng.uniform01();
      std::int64_t m = 0;
      double acc = excursion_pmf(1, params, 0);
      while (u >= acc && m < 100'000) {
        ++m;
        acc += excursion_pmf(1, params, m);
      }
      ++counts[m];
    }
    auto t = chi_square_pmf(counts, [&](std::int64_t m) { return excursion_pmf(2, params, m); }, 64);
    CHECK(t.p_value < 1e-6);
  }

  SECTION("rejects when pooling cannot reach expected counts of five") {
    std::map<std::int64_t, std::int64_t> tiny{{0, 600}, {1, 400}};
    auto pmf = [](std::int64_t m) { return m == 0 ? 0.999999 : (m == 1 ? 0.000001 : 0.0); };
    CHECK_THROWS_AS(chi_square_pmf(tiny, pmf, 2), std::invalid_argument);
  }

  SECTION("rejects tiny totals") {
    std::map<std::int64_t, std::int64_t> tiny{{0, 400}};
    CHECK_THROWS_AS(chi_square_pmf(tiny, [](std::int64_t) { return 1.0; }, 2),
                    std::invalid_argument);
  }
}

TEST_CASE("moment helpers") {
  std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  CHECK(mean_of(xs) == Approx(2.5));
  CHECK(variance_of(xs) == Approx(5.0 / 3.0));
  CHECK(median_of({3.0, 1.0, 2.0}) == Approx(2.0));
  CHECK(median_of({4.0, 1.0, 2.0, 3.0}) == Approx(2.5));

  auto t = mean_within_se(xs, 2.5, 3.0, "exact_mean");
  CHECK(t.pass);
  CHECK(t.statistic == Approx(0.0));
}

TEST_CASE("quantile grid") {
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(static_cast<double>(i));
  auto q = quantiles_99(xs);
  REQUIRE(q.size() == 99);
  CHECK(q[49] == Approx(499.5).margin(1.0));  // median of 0..999
  CHECK(q[0] <= q[98]);
}

TEST_CASE("minmax occupation aggregation") {
  SECTION("extreme path pins the min at zero and the max at the leg total") {
    DyadicOccupation rep;
    OccupationVector occ;
    occ.per_leg = {6, 0};
    occ.origin_time = 2;
    occ.horizon = 8;
    rep.ks = {3};
    rep.snapshots = {occ};
    MinMaxSummary s = minmax_occupation(std::vector<DyadicOccupation>{rep}, 2, 0.05);
    CHECK(s.sandwich_violations == 0);
    CHECK(s.max_fraction_final[0] == Approx(0.75));
    CHECK(s.min_fraction_final[0] == Approx(0.0));
  }

  SECTION("band entries are recorded") {
    DyadicOccupation rep;
    OccupationVector occ;
    occ.per_leg = {34, 34, 32};
    occ.origin_time = 0;
    occ.horizon = 100;
    rep.ks = {5};
    rep.snapshots = {occ};
    MinMaxSummary s = minmax_occupation(std::vector<DyadicOccupation>{rep}, 3, 0.05);
    CHECK(s.reps_entering_upper_band == 1);  // 0.34 in [1/3, 1/3+0.05]
    CHECK(s.reps_entering_lower_band == 1);  // 0.32 in [1/3-0.05, 1/3]
  }

  SECTION("dip counting against a test function") {
    DyadicOccupation rep;
    OccupationVector occ;
    occ.per_leg = {1, 50, 49};  // T_m = 1
    occ.origin_time = 0;
    occ.horizon = 100;
    rep.ks = {7};
    rep.snapshots = {occ};
    auto fn = IntegralTestFunction::constant(25.0);  // threshold 100/25 = 4 > 1
    MinMaxSummary s = minmax_occupation(std::vector<DyadicOccupation>{rep}, 3, 0.05, &fn);
    REQUIRE(s.io_dip_counts.size() == 1);
    CHECK(s.io_dip_counts[0] == 1);
  }
}
