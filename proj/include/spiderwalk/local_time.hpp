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

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "spiderwalk/rng.hpp"
#include "spiderwalk/spider.hpp"

namespace spiderwalk {

/// Visit counts of a walk path over steps 1..horizon, sparse over sites.
/// Counting starts at step 1: the initial origin point is not a visit.
struct LocalTimeLedger {
  std::int64_t origin_count = 0;
  std::unordered_map<std::uint64_t, std::int64_t> leg_counts;
  std::int64_t horizon = 0;

  static std::uint64_t key(std::int32_t leg, std::int32_t radius) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(leg)) << 32) |
           static_cast<std::uint32_t>(radius);
  }

  std::int64_t count(std::int32_t leg, std::int32_t radius) const {
    if (radius == 0) return origin_count;
    auto it = leg_counts.find(key(leg, radius));
    return it == leg_counts.end() ? 0 : it->second;
  }

  std::int64_t total() const {
    std::int64_t sum = origin_count;
    for (const auto& [k, v] : leg_counts) sum += v;
    return sum;
  }
};

/// Steps spent on each leg (1..N) plus steps at the origin, over 1..horizon.
struct OccupationVector {
  std::vector<std::int64_t> per_leg;
  std::int64_t origin_time = 0;
  std::int64_t horizon = 0;

  std::int64_t max_leg() const {
    std::int64_t m = per_leg.empty() ? 0 : per_leg.front();
    for (auto v : per_leg) m = std::max(m, v);
    return m;
  }
  std::int64_t min_leg() const {
    std::int64_t m = per_leg.empty() ? 0 : per_leg.front();
    for (auto v : per_leg) m = std::min(m, v);
    return m;
  }
};

inline LocalTimeLedger local_time(const SpiderPath& path) {
  LocalTimeLedger ledger;
  ledger.horizon = path.num_steps();
  for (std::int64_t i = 1; i <= ledger.horizon; ++i) {
    const auto& pt = path.at_step(i);
    if (pt.is_origin()) {
      ++ledger.origin_count;
    } else {
      ++ledger.leg_counts[LocalTimeLedger::key(pt.leg, pt.radius)];
    }
  }
  return ledger;
}

inline OccupationVector occupation_times(const SpiderPath& path, int num_legs = 0) {
  OccupationVector occ;
  occ.horizon = path.num_steps();
  std::int32_t max_leg = static_cast<std::int32_t>(num_legs);
  for (const auto& pt : path.points) max_leg = std::max(max_leg, pt.leg);
  occ.per_leg.assign(static_cast<std::size_t>(max_leg), 0);
  for (std::int64_t i = 1; i <= occ.horizon; ++i) {
    const auto& pt = path.at_step(i);
    if (pt.is_origin()) {
      ++occ.origin_time;
    } else {
      ++occ.per_leg[static_cast<std::size_t>(pt.leg - 1)];
    }
  }
  return occ;
}

/// Steps i >= 1 at which the path sits at the origin, in increasing order.
inline std::vector<std::int64_t> return_times(const SpiderPath& path) {
  if (path.points.empty() || !path.points.front().is_origin())
    throw std::invalid_argument("return_times: path must start at the origin");
  std::vector<std::int64_t> rho;
  for (std::int64_t i = 1; i <= path.num_steps(); ++i) {
    if (path.at_step(i).is_origin()) rho.push_back(i);
  }
  return rho;
}

inline std::vector<std::int64_t> return_times(std::span<const std::int32_t> path) {
  if (path.empty() || path.front() != 0)
    throw std::invalid_argument("return_times: path must start at 0");
  std::vector<std::int64_t> rho;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i] == 0) rho.push_back(static_cast<std::int64_t>(i));
  }
  return rho;
}

/// Per-excursion visit counts to site x of a signed walk: V_i is the number
/// of steps at x strictly inside the i-th completed zero-to-zero stretch.
/// Only completed excursions yield samples.
inline std::vector<std::int64_t> excursion_local_time_samples(
    std::span<const std::int32_t> path, std::int32_t x) {
  if (x == 0) throw std::invalid_argument("excursion_local_time_samples: x must be nonzero");
  auto rho = return_times(path);
  if (rho.empty())
    throw std::invalid_argument("excursion_local_time_samples: no complete excursion");
  std::vector<std::int64_t> samples;
  samples.reserve(rho.size());
  std::int64_t prev = 0;
  for (std::int64_t r : rho) {
    std::int64_t visits = 0;
    for (std::int64_t i = prev + 1; i <= r; ++i) {
      if (path[static_cast<std::size_t>(i)] == x) ++visits;
    }
    samples.push_back(visits);
    prev = r;
  }
  return samples;
}

/// Running contrast of the local time at (x, leg) against 2*p_leg times the
/// origin local time, for k = 1..n. The final entry, scaled by
/// (2p(4x-1) - 4p^2)^{1/2} n^{1/4}, is the statistic whose limit law is an
/// independent-normal product U*sqrt(|V|).
inline std::vector<double> contrast_process(const SpiderPath& path, std::int32_t x,
                                            std::int32_t leg, double p_leg) {
  if (x < 1) throw std::invalid_argument("contrast_process: x must be >= 1");
  if (leg < 1) throw std::invalid_argument("contrast_process: leg must be >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(path.num_steps()));
  std::int64_t site_count = 0;
  std::int64_t origin_count = 0;
  for (std::int64_t i = 1; i <= path.num_steps(); ++i) {
    const auto& pt = path.at_step(i);
    if (pt.is_origin()) ++origin_count;
    if (pt.leg == leg && pt.radius == x) ++site_count;
    out.push_back(static_cast<double>(site_count) -
                  2.0 * p_leg * static_cast<double>(origin_count));
  }
  return out;
}

/// Lattice estimate of the Brownian-spider local time at radius x on a leg:
/// visits to the nearest grid site times sqrt(dt). At x = 0 origin visits on
/// all legs count, matching the summed local time at the body.
inline double brownian_local_time_estimate(const SpiderPath& path, double x,
                                           std::int32_t leg) {
  if (x < 0.0) throw std::invalid_argument("brownian_local_time_estimate: x must be >= 0");
  const double spacing = path.step_scale;
  auto site = static_cast<std::int32_t>(std::llround(x / spacing));
  std::int64_t visits = 0;
  for (std::int64_t i = 1; i <= path.num_steps(); ++i) {
    const auto& pt = path.at_step(i);
    if (site == 0) {
      if (pt.is_origin()) ++visits;
    } else if (pt.leg == leg && pt.radius == site) {
      ++visits;
    }
  }
  return static_cast<double>(visits) * spacing;
}

/// Exact draw of one excursion's visit count to site x for a skew walk with
/// upward origin probability p.
///
/// Simulating whole excursions step by step is not an option for mass
/// sampling: the return time to the origin has infinite mean, so the work per
/// completed excursion is heavy-tailed. Instead the excursion is decomposed
/// at first passages. Segments on the gambler's-ruin strip between the origin
/// and x are simulated coin by coin (their expected length is at most x^2),
/// and the two segments that cannot affect the count are resolved by exact
/// facts about the symmetric walk: an excursion on the far side of the origin
/// never visits x, and a walk above x returns to x with probability one.
/// The draw is distributed exactly as the per-excursion count of a full
/// simulation (see the cross-check against path extraction in the tests).
inline std::int64_t sample_excursion_visits(double p, std::int32_t x, Rng& rng) {
  if (x == 0) throw std::invalid_argument("sample_excursion_visits: x must be nonzero");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("sample_excursion_visits: p outside [0,1]");
  const std::int32_t ax = std::abs(x);
  // Excursion side: toward x with probability p (x > 0) or 1-p (x < 0).
  const double toward = x > 0 ? p : 1.0 - p;
  if (!(rng.uniform01() < toward)) return 0;

  // Walk on {0,..,ax} absorbing at both ends; returns true when z hits ax.
  auto reaches_site = [&](std::int32_t z) {
    while (z != 0 && z != ax) z += rng.fair_bit() ? 1 : -1;
    return z == ax;
  };

  if (!reaches_site(1)) return 0;
  std::int64_t visits = 1;
  for (;;) {
    if (rng.fair_bit()) {
      // Step away from the origin; the walk is recurrent above the site and
      // must pass through it again before the excursion can end.
      ++visits;
    } else if (ax > 1 && reaches_site(ax - 1)) {
      ++visits;
    } else {
      return visits;  // absorbed at the origin, excursion over
    }
  }
}

}  // namespace spiderwalk
