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

#include "spiderwalk/coupling.hpp"
#include "spiderwalk/local_time.hpp"
#include "spiderwalk/rng.hpp"
#include "spiderwalk/spider.hpp"
#include "spiderwalk/stats.hpp"

using namespace spiderwalk;
using Catch::Approx;

namespace {

CoupledPair make_pair(const SpiderConfig& config, int m, double horizon, SeedSpec seed,
                      std::int64_t min_steps = 0) {
  Rng rng(seed);
  double dt = 1.0 / (static_cast<double>(m) * m);
  auto fine = simulate_bms_lattice(config, horizon, dt, rng);
  return skorokhod_embed(std::move(fine), min_steps);
}

// Naive ledger-based local-time discrepancy for small pairs: rebuild both
// ledgers from scratch at every k.
double naive_localtime_discrepancy(const CoupledPair& pair, std::int64_t n) {
  double best = 0.0;
  const std::int64_t mm = std::int64_t{pair.m} * pair.m;
  for (std::int64_t k = 1; k <= n; ++k) {
    std::map<std::pair<std::int32_t, std::int32_t>, double> xi, eta;
    for (std::int64_t i = 1; i <= k; ++i) {
      const auto& pt = pair.walk.at_step(i);
      xi[{pt.leg, pt.radius}] += 1.0;
    }
    for (std::int64_t i = 1; i <= k * mm; ++i) {
      const auto& pt = pair.fine_path.at_step(i);
      if (pt.radius % pair.m == 0)
        eta[{pt.radius == 0 ? 0 : pt.leg, pt.radius / pair.m}] += 1.0 / pair.m;
    }
    std::map<std::pair<std::int32_t, std::int32_t>, double> sites = xi;
    for (const auto& [site, v] : eta) sites[site] += 0.0;
    for (const auto& [site, unused] : sites) {
      double a = xi.count(site) ? xi[site] : 0.0;
      double b = eta.count(site) ? eta[site] : 0.0;
      best = std::max(best, std::abs(a - b));
    }
  }
  return best;
}

double naive_walk_discrepancy(const CoupledPair& pair, std::int64_t n) {
  double best = 0.0;
  const std::int64_t mm = std::int64_t{pair.m} * pair.m;
  for (std::int64_t k = 1; k <= n; ++k) {
    const auto& w = pair.walk.at_step(k);
    const auto& b = pair.fine_path.at_step(k * mm);
    double d = static_cast<double>(fine_distance(w.leg, std::int64_t{w.radius} * pair.m,
                                                 b.leg, b.radius)) /
               pair.m;
    best = std::max(best, d);
  }
  return best;
}

double naive_occupation_discrepancy(const CoupledPair& pair, std::int64_t n) {
  const std::int64_t mm = std::int64_t{pair.m} * pair.m;
  std::map<std::int32_t, double> t_leg, z_leg;
  for (std::int64_t i = 1; i <= n; ++i) {
    const auto& pt = pair.walk.at_step(i);
    if (!pt.is_origin()) t_leg[pt.leg] += 1.0;
  }
  for (std::int64_t i = 1; i <= n * mm; ++i) {
    const auto& pt = pair.fine_path.at_step(i);
    if (!pt.is_origin()) z_leg[pt.leg] += 1.0 / static_cast<double>(mm);
  }
  double best = 0.0;
  for (const auto& [leg, unused] : t_leg) best = std::max(best, std::abs(t_leg[leg] - z_leg[leg]));
  for (const auto& [leg, unused] : z_leg) best = std::max(best, std::abs(t_leg[leg] - z_leg[leg]));
  return best;
}

}  // namespace

TEST_CASE("lattice refinement validation") {
  CHECK(lattice_refinement(1.0 / 32) == 32);
  CHECK(lattice_refinement(1.0) == 1);
  CHECK_THROWS_AS(lattice_refinement(0.3), std::invalid_argument);
}

TEST_CASE("embedded walk takes unit spider steps at the stopping times") {
  SpiderConfig config{3, {0.2, 0.3, 0.5}};
  auto pair = make_pair(config, 8, 40.0, SeedSpec{61, 0});
  REQUIRE(pair.walk.num_steps() >= 10);
  for (std::int64_t k = 1; k <= pair.walk.num_steps(); ++k) {
    CHECK(spider_distance(pair.walk.at_step(k), pair.walk.at_step(k - 1)) == 1);
    // the fine path at tau_k sits exactly at the embedded position
    const auto& fine_pt = pair.fine_path.at_step(pair.tau[static_cast<std::size_t>(k)]);
    CHECK(fine_distance(fine_pt.leg, fine_pt.radius, pair.walk.at_step(k).leg,
                        std::int64_t{pair.walk.at_step(k).radius} * pair.m) == 0);
  }
  CHECK(std::is_sorted(pair.tau.begin(), pair.tau.end()));
}

TEST_CASE("embedding requires the lattice to hit levels exactly") {
  SpiderConfig config{2, {0.5, 0.5}};
  Rng rng(SeedSpec{61, 5});
  auto fine = simulate_bms_lattice(config, 5.0, 0.03, rng);  // sqrt(dt) does not divide 1
  CHECK_THROWS_AS(skorokhod_embed(std::move(fine)), std::invalid_argument);
}

TEST_CASE("horizon exhaustion is signalled") {
  SpiderConfig config{2, {0.5, 0.5}};
  CHECK_THROWS_AS(make_pair(config, 8, 2.0, SeedSpec{61, 1}, 1'000), std::runtime_error);
}

TEST_CASE("streamed pair matches materialize-and-scan with the same stream") {
  SpiderConfig config{2, {0.3, 0.7}};
  const int m = 8;
  SeedSpec seed{62, 0};
  auto pair = make_pair(config, m, 200.0, seed);

  std::vector<std::int64_t> stream_tau;
  std::vector<SpiderPoint> stream_walk;
  struct Obs {
    std::vector<std::int64_t>* tau;
    std::vector<SpiderPoint>* walk;
    void on_fine(std::int64_t, std::int32_t, std::int64_t) {}
    void on_crossing(std::int64_t, SpiderPoint pos, std::int64_t fine) {
      tau->push_back(fine);
      walk->push_back(pos);
    }
  } obs{&stream_tau, &stream_walk};
  Rng rng(seed);
  run_coupled_fine(config, m, pair.walk.num_steps(),
                   pair.fine_path.num_steps(), rng, obs);

  REQUIRE(stream_tau.size() >= static_cast<std::size_t>(pair.walk.num_steps()));
  for (std::int64_t k = 1; k <= pair.walk.num_steps(); ++k) {
    CHECK(stream_tau[static_cast<std::size_t>(k - 1)] == pair.tau[static_cast<std::size_t>(k)]);
    CHECK(stream_walk[static_cast<std::size_t>(k - 1)] == pair.walk.at_step(k));
  }
}

TEST_CASE("stopping-time increments have unit mean and report their variance") {
  SpiderConfig config{2, {0.3, 0.7}};
  Rng rng(SeedSpec{63, 0});
  auto samples = collect_tau_samples(config, 16, 100'000, rng);
  REQUIRE(samples.size() == 100'000);
  std::vector<double> increments;
  increments.reserve(samples.size());
  for (const auto& s : samples) increments.push_back(s.increment_time);
  auto t = mean_within_se(increments, 1.0, 3.0, "tau_mean");
  CHECK(t.pass);
  double var = variance_of(increments);
  CHECK(var > 0.5);  // lattice value 2/3, continuum value 1
  CHECK(var < 1.1);
}

TEST_CASE("origin departures pick legs with the configured probabilities") {
  SpiderConfig config{3, {0.2, 0.3, 0.5}};
  Rng rng(SeedSpec{63, 1});
  auto samples = collect_tau_samples(config, 8, 200'000, rng);
  std::vector<std::int64_t> counts(4, 0);
  std::int64_t departures = 0;
  for (const auto& s : samples) {
    if (s.from_origin) {
      ++counts[static_cast<std::size_t>(s.leg)];
      ++departures;
    }
  }
  REQUIRE(departures > 1'000);
  for (std::size_t j = 1; j <= 3; ++j) {
    double p = config.leg_probs[j - 1];
    double freq = static_cast<double>(counts[j]) / static_cast<double>(departures);
    CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(departures)));
  }
}

TEST_CASE("stopping-time increments are uncorrelated with the chosen leg") {
  SpiderConfig config{2, {0.3, 0.7}};
  Rng rng(SeedSpec{63, 2});
  auto samples = collect_tau_samples(config, 8, 100'000, rng);
  std::vector<double> inc, leg_one;
  for (const auto& s : samples) {
    if (!s.from_origin) continue;
    inc.push_back(s.increment_time);
    leg_one.push_back(s.leg == 1 ? 1.0 : 0.0);
  }
  REQUIRE(inc.size() > 1'000);
  double mi = mean_of(inc), ml = mean_of(leg_one);
  double cov = 0.0, vi = 0.0, vl = 0.0;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    cov += (inc[i] - mi) * (leg_one[i] - ml);
    vi += (inc[i] - mi) * (inc[i] - mi);
    vl += (leg_one[i] - ml) * (leg_one[i] - ml);
  }
  double corr = cov / std::sqrt(vi * vl);
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(static_cast<double>(inc.size())));
}

TEST_CASE("a-increment extraction on hand-checkable pairs") {
  SpiderConfig config{2, {0.5, 0.5}};
  auto pair = make_pair(config, 4, 400.0, SeedSpec{64, 0});

  SECTION("rejects x = 0 and returns empty when the walk misses x") {
    CHECK_THROWS_AS(extract_a_increments(pair, 0), std::invalid_argument);
    CHECK(extract_a_increments(pair, 3'000).empty());
  }

  SECTION("all increments are positive (the arrival visit counts)") {
    auto a1 = extract_a_increments(pair, 1);
    REQUIRE(!a1.empty());
    for (double a : a1) CHECK(a > 0.0);
  }

  SECTION("matches the streaming extractor on the same stream") {
    SeedSpec seed{64, 1};
    auto pair2 = make_pair(config, 4, 400.0, seed);
    auto direct = extract_a_increments(pair2, -1);
    std::vector<double> streamed;
    Rng rng(seed);
    stream_a_increments(0.5, -1, 4, pair2.walk.num_steps(), rng, streamed);
    CHECK(direct == streamed);
  }
}

TEST_CASE("a-increments follow the lattice geometric law and approach Exp(1)") {
  // Between embedded visits to x the fine walk revisits the site a
  // geometric(1/m) number of times (success = exiting the +-m strip without a
  // return, gambler's-ruin probability 1/m from either neighbor). That gives
  // mean exactly one after the sqrt(dt) scaling and Exp(1) in the limit.
  const double p = 0.3;
  const std::int32_t x = 1;
  const int m = 8;
  std::vector<double> increments;
  Rng rng(SeedSpec{65, 0});
  while (increments.size() < 100'000)
    stream_a_increments(p, x, m, 4'096, rng, increments);
  increments.resize(100'000);

  auto t = mean_within_se(increments, 1.0, 3.0, "a_mean");
  CHECK(t.pass);

  std::map<std::int64_t, std::int64_t> counts;
  for (double a : increments) ++counts[static_cast<std::int64_t>(std::llround(a * m))];
  auto geometric = [&](std::int64_t v) {
    if (v < 1) return 0.0;
    double q = 1.0 - 1.0 / m;
    return std::pow(q, static_cast<double>(v - 1)) / m;
  };
  auto chi = chi_square_pmf(counts, geometric, 64, 1e-3, "lattice_geometric");
  CHECK(chi.p_value > 1e-3);

  // the distance to Exp(1) is dominated by the atom spacing 1/m
  double d = ks_statistic(increments, [](double v) { return v <= 0 ? 0.0 : 1.0 - std::exp(-v); });
  CHECK(d <= 1.5 / m);
  CHECK(d >= 0.5 / m);
}

TEST_CASE("discrepancy trackers agree with naive recomputation on small pairs") {
  SpiderConfig config{2, {0.3, 0.7}};
  for (int trial = 0; trial < 5; ++trial) {
    auto pair = make_pair(config, 4, 2'000.0, SeedSpec{66, static_cast<std::uint64_t>(trial)});
    std::int64_t n = std::min<std::int64_t>(pair.walk.num_steps(), 64);
    // the tracker needs fine coverage up to n*m^2
    while (n > 0 && pair.fine_path.num_steps() < n * 16) --n;
    REQUIRE(n >= 8);
    CHECK(discrepancy_walk(pair, n) == Approx(naive_walk_discrepancy(pair, n)).margin(1e-12));
    CHECK(discrepancy_localtime(pair, n) ==
          Approx(naive_localtime_discrepancy(pair, n)).margin(1e-12));
    CHECK(discrepancy_occupation(pair, n) ==
          Approx(naive_occupation_discrepancy(pair, n)).margin(1e-12));
  }
}

TEST_CASE("discrepancies vanish at n = 0 and grow with n") {
  SpiderConfig config{2, {0.5, 0.5}};
  auto pair = make_pair(config, 4, 3'000.0, SeedSpec{67, 0});
  CHECK(discrepancy_walk(pair, 0) == 0.0);
  CHECK(discrepancy_localtime(pair, 0) == 0.0);
  CHECK(discrepancy_occupation(pair, 0) == 0.0);

  std::int64_t n = std::min<std::int64_t>(pair.walk.num_steps(), 100);
  while (n > 0 && pair.fine_path.num_steps() < n * 16) --n;
  REQUIRE(n >= 20);
  double prev = 0.0;
  for (std::int64_t k = 1; k <= n; k += 7) {
    double d = discrepancy_walk(pair, k);
    CHECK(d >= prev);
    prev = d;
  }
  CHECK(discrepancy_occupation(pair, n) <= static_cast<double>(n));
  CHECK_THROWS_AS(discrepancy_walk(pair, pair.walk.num_steps() + 1'000'000),
                  std::runtime_error);
}

TEST_CASE("streamed discrepancy rows match the materialized functions") {
  SpiderConfig config{2, {0.3, 0.7}};
  SeedSpec seed{68, 0};
  const int m = 4;
  Rng rng(seed);
  auto rows = coupled_discrepancy_rows(config, m, {16, 32, 64}, rng);
  REQUIRE(rows.size() == 3);

  // rebuild the same pair from the same stream and compare
  Rng rng2(seed);
  struct Collect {
    SpiderPath fine;
    std::vector<std::int64_t> tau{0};
    SpiderPath walk;
    void on_fine(std::int64_t, std::int32_t leg, std::int64_t fr) {
      fine.points.push_back(SpiderPoint{fr == 0 ? 0 : leg, static_cast<std::int32_t>(fr)});
    }
    void on_crossing(std::int64_t, SpiderPoint pos, std::int64_t fine_idx) {
      tau.push_back(fine_idx);
      walk.points.push_back(pos);
    }
  } collect;
  collect.fine.points.push_back(kOrigin);
  collect.fine.step_scale = 1.0 / m;
  collect.fine.time_scale = 1.0 / (m * m);
  collect.walk.points.push_back(kOrigin);
  run_coupled_fine(config, m, 64, 64 * m * m, rng2, collect);
  CoupledPair pair{std::move(collect.fine), std::move(collect.tau), std::move(collect.walk), m};

  for (const auto& row : rows) {
    CHECK(row.walk == Approx(discrepancy_walk(pair, row.n)).margin(1e-12));
    CHECK(row.local_time == Approx(discrepancy_localtime(pair, row.n)).margin(1e-12));
    CHECK(row.occupation == Approx(discrepancy_occupation(pair, row.n)).margin(1e-12));
  }
}

TEST_CASE("embedded walk functionals match direct markov simulation") {
  SpiderConfig config{2, {0.3, 0.7}};
  const int m = 8;
  const std::int64_t n = 128;
  const int reps = 10'000;
  std::vector<double> emb_frac, emb_end, markov_frac, markov_end;
  Rng rng(SeedSpec{69, 0});
  for (int r = 0; r < reps; ++r) {
    struct Obs {
      std::int64_t leg1 = 0;
      SpiderPoint last{};
      void on_fine(std::int64_t, std::int32_t, std::int64_t) {}
      void on_crossing(std::int64_t, SpiderPoint pos, std::int64_t) {
        leg1 += (!pos.is_origin() && pos.leg == 1) ? 1 : 0;
        last = pos;
      }
    } obs;
    run_coupled_fine(config, m, n, 0, rng, obs);
    emb_frac.push_back(static_cast<double>(obs.leg1) / n);
    emb_end.push_back(obs.last.radius);
  }
  Rng rng2(SeedSpec{69, 1});
  for (int r = 0; r < reps; ++r) {
    std::int64_t leg1 = 0;
    SpiderPoint last{};
    run_rws(config, n, rng2, [&](std::int64_t, SpiderPoint pos) {
      leg1 += (!pos.is_origin() && pos.leg == 1) ? 1 : 0;
      last = pos;
    });
    markov_frac.push_back(static_cast<double>(leg1) / n);
    markov_end.push_back(last.radius);
  }
  CHECK(ks_two_sample(emb_frac, markov_frac).p_value > 1e-3);
  CHECK(ks_two_sample(emb_end, markov_end).p_value > 1e-3);
}
