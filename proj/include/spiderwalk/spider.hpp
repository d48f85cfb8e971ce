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
#include <cstdlib>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "spiderwalk/rng.hpp"

namespace spiderwalk {

/// Spider graph: num_legs half-lines glued at the origin, with the walk
/// leaving the origin to leg j (1-based) with probability leg_probs[j-1].
struct SpiderConfig {
  int num_legs = 0;
  std::vector<double> leg_probs;

  static SpiderConfig uniform(int n) {
    if (n < 1) throw std::invalid_argument("SpiderConfig: need at least one leg");
    return SpiderConfig{n, std::vector<double>(n, 1.0 / n)};
  }

  void validate() const {
    if (num_legs < 1) throw std::invalid_argument("SpiderConfig: need at least one leg");
    if (static_cast<int>(leg_probs.size()) != num_legs)
      throw std::invalid_argument("SpiderConfig: leg_probs size mismatch");
    validate_probability_vector(leg_probs);
  }
};

/// A lattice position: the origin (leg 0, radius 0) or radius >= 1 on a leg.
/// Radii are in step units; physical positions are radius * step_scale of the
/// owning path.
struct SpiderPoint {
  std::int32_t leg = 0;
  std::int32_t radius = 0;

  bool is_origin() const { return radius == 0; }

  friend bool operator==(const SpiderPoint&, const SpiderPoint&) = default;
};

inline constexpr SpiderPoint kOrigin{0, 0};

/// Path metric: |x-y| along a shared leg, x+y through the origin otherwise.
/// Returned in step units.
inline std::int64_t spider_distance(SpiderPoint a, SpiderPoint b) {
  if (a.is_origin()) return b.radius;
  if (b.is_origin()) return a.radius;
  if (a.leg == b.leg) return std::abs(std::int64_t{a.radius} - b.radius);
  return std::int64_t{a.radius} + b.radius;
}

/// Step-indexed path on the spider starting at the origin. step_scale is the
/// spatial lattice spacing (1 for walks, sqrt(dt) for Brownian approximants)
/// and time_scale the duration of one step (1, respectively dt).
struct SpiderPath {
  std::vector<SpiderPoint> points;
  double step_scale = 1.0;
  double time_scale = 1.0;

  std::int64_t num_steps() const {
    return static_cast<std::int64_t>(points.size()) - 1;
  }
  const SpiderPoint& at_step(std::int64_t i) const {
    return points[static_cast<std::size_t>(i)];
  }
};

/// One excursion of a walk away from zero: the path is nonzero exactly on
/// (start, end). An incomplete final excursion is kept with complete=false and
/// end equal to the horizon. label is the assigned leg, 0 when unlabeled.
struct ExcursionInterval {
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool complete = true;
  std::int32_t label = 0;
};

/// Drives a spider walk for n steps and hands every step to `on(i, point)`,
/// i = 1..n. One uniform is consumed at each origin departure and one fair bit
/// per interior step, which makes every kernel built on this core replayable
/// against any other given the same stream.
template <class OnPoint>
void run_rws(const SpiderConfig& config, std::int64_t n, Rng& rng, OnPoint&& on) {
  config.validate();
  if (n < 0) throw std::invalid_argument("run_rws: negative step count");
  CategoricalDist leg_dist(config.leg_probs);
  SpiderPoint pos = kOrigin;
  for (std::int64_t i = 1; i <= n; ++i) {
    if (pos.radius == 0) {
      pos.leg = static_cast<std::int32_t>(leg_dist(rng)) + 1;
      pos.radius = 1;
    } else {
      pos.radius += rng.fair_bit() ? 1 : -1;
      if (pos.radius == 0) pos.leg = 0;
    }
    on(i, pos);
  }
}

/// Skew-walk core: the N=2 spider in signed coordinates (leg 1 positive,
/// leg 2 negative). Draw-for-draw identical to run_rws with probs {p, 1-p}.
template <class OnPos>
void run_skew(double p, std::int64_t n, Rng& rng, OnPos&& on) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("run_skew: p outside [0,1]");
  if (n < 0) throw std::invalid_argument("run_skew: negative step count");
  std::int64_t pos = 0;
  for (std::int64_t i = 1; i <= n; ++i) {
    if (pos == 0) {
      pos = rng.uniform01() < p ? 1 : -1;
    } else if (pos > 0) {
      pos += rng.fair_bit() ? 1 : -1;
    } else {
      pos -= rng.fair_bit() ? 1 : -1;
    }
    on(i, pos);
  }
}

/// Direct Markov simulation of the spider walk: from the origin to v(1,j)
/// with probability p_j, symmetric +-1 steps on a leg otherwise.
inline SpiderPath simulate_rws_markov(const SpiderConfig& config, std::int64_t n,
                                      Rng& rng) {
  SpiderPath path;
  path.points.reserve(static_cast<std::size_t>(n) + 1);
  path.points.push_back(kOrigin);
  run_rws(config, n, rng, [&](std::int64_t, SpiderPoint p) { path.points.push_back(p); });
  return path;
}

/// Simple symmetric random walk on Z, S(0) = 0.
inline std::vector<std::int32_t> simulate_ssrw(std::int64_t n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("simulate_ssrw: negative step count");
  std::vector<std::int32_t> path(static_cast<std::size_t>(n) + 1, 0);
  std::int32_t pos = 0;
  for (std::int64_t i = 1; i <= n; ++i) {
    pos += rng.fair_bit() ? 1 : -1;
    path[static_cast<std::size_t>(i)] = pos;
  }
  return path;
}

/// Maximal intervals on which the walk is away from zero, in path order.
/// The trailing excursion is included with complete=false when the path ends
/// before returning to zero.
inline std::vector<ExcursionInterval> decompose_excursions(
    std::span<const std::int32_t> path) {
  if (path.empty() || path.front() != 0)
    throw std::invalid_argument("decompose_excursions: path must start at 0");
  std::vector<ExcursionInterval> out;
  std::int64_t n = static_cast<std::int64_t>(path.size()) - 1;
  std::int64_t i = 0;
  while (i < n) {
    if (path[static_cast<std::size_t>(i + 1)] == 0) {
      ++i;
      continue;
    }
    ExcursionInterval exc;
    exc.start = i;
    std::int64_t j = i + 1;
    while (j <= n && path[static_cast<std::size_t>(j)] != 0) ++j;
    if (j > n) {
      exc.end = n;
      exc.complete = false;
    } else {
      exc.end = j;
      exc.complete = true;
    }
    out.push_back(exc);
    i = exc.end;
    if (!exc.complete) break;
  }
  return out;
}

/// Deterministic core of the excursion relabeling: excursion m of |ssrw| is
/// placed on legs[m]. Incomplete final excursions are labeled like complete
/// ones.
inline SpiderPath build_rws_from_ssrw_labeled(const SpiderConfig& config,
                                              std::span<const std::int32_t> ssrw,
                                              std::span<const std::int32_t> legs) {
  config.validate();
  auto excursions = decompose_excursions(ssrw);
  if (legs.size() < excursions.size())
    throw std::invalid_argument("build_rws_from_ssrw_labeled: not enough labels");
  SpiderPath path;
  path.points.assign(ssrw.size(), kOrigin);
  for (std::size_t m = 0; m < excursions.size(); ++m) {
    std::int32_t leg = legs[m];
    if (leg < 1 || leg > config.num_legs)
      throw std::invalid_argument("build_rws_from_ssrw_labeled: label out of range");
    const auto& exc = excursions[m];
    for (std::int64_t i = exc.start + 1; i <= exc.end; ++i) {
      std::int32_t r = std::abs(ssrw[static_cast<std::size_t>(i)]);
      if (r != 0) path.points[static_cast<std::size_t>(i)] = SpiderPoint{leg, r};
    }
  }
  return path;
}

/// Excursion relabeling of a simple walk into a spider walk: each excursion
/// of |ssrw| lands on an independently chosen leg.
inline SpiderPath build_rws_from_ssrw(const SpiderConfig& config,
                                      std::span<const std::int32_t> ssrw, Rng& rng) {
  config.validate();
  auto excursions = decompose_excursions(ssrw);
  CategoricalDist leg_dist(config.leg_probs);
  std::vector<std::int32_t> legs(excursions.size());
  for (auto& leg : legs) leg = static_cast<std::int32_t>(leg_dist(rng)) + 1;
  return build_rws_from_ssrw_labeled(config, ssrw, legs);
}

/// Excursion sign-flipping of a simple walk into a skew walk: each excursion
/// keeps its modulus and gets an independent sign, + with probability p.
inline std::vector<std::int32_t> build_skew_from_ssrw(
    double p, std::span<const std::int32_t> ssrw, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("build_skew_from_ssrw: p outside [0,1]");
  auto excursions = decompose_excursions(ssrw);
  std::vector<std::int32_t> out(ssrw.begin(), ssrw.end());
  for (const auto& exc : excursions) {
    std::int32_t sign = rng.uniform01() < p ? 1 : -1;
    for (std::int64_t i = exc.start + 1; i <= exc.end; ++i) {
      auto& v = out[static_cast<std::size_t>(i)];
      v = sign * std::abs(v);
    }
  }
  return out;
}

/// Lattice Brownian spider approximant: a spider walk on a sqrt(dt) grid with
/// floor(t/dt) steps. Exact level crossings on this grid are what the
/// Skorokhod embedding in coupling.hpp relies on.
inline SpiderPath simulate_bms_lattice(const SpiderConfig& config, double t,
                                       double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_bms_lattice: dt must be > 0");
  if (!(t >= 0.0)) throw std::invalid_argument("simulate_bms_lattice: t must be >= 0");
  auto steps = static_cast<std::int64_t>(std::floor(t / dt));
  SpiderPath path = simulate_rws_markov(config, steps, rng);
  path.step_scale = std::sqrt(dt);
  path.time_scale = dt;
  return path;
}

/// Signed view of a two-leg path: leg 1 maps to +radius, leg 2 to -radius.
inline std::vector<std::int32_t> signed_from_spider(const SpiderPath& path) {
  std::vector<std::int32_t> out;
  out.reserve(path.points.size());
  for (const auto& pt : path.points) {
    if (pt.is_origin()) {
      out.push_back(0);
    } else if (pt.leg == 1) {
      out.push_back(pt.radius);
    } else if (pt.leg == 2) {
      out.push_back(-pt.radius);
    } else {
      throw std::invalid_argument("signed_from_spider: path has more than two legs");
    }
  }
  return out;
}

inline SpiderPath spider_from_signed(std::span<const std::int32_t> signed_path,
                                     double step_scale = 1.0, double time_scale = 1.0) {
  SpiderPath path;
  path.step_scale = step_scale;
  path.time_scale = time_scale;
  path.points.reserve(signed_path.size());
  for (std::int32_t v : signed_path) {
    if (v == 0) {
      path.points.push_back(kOrigin);
    } else if (v > 0) {
      path.points.push_back(SpiderPoint{1, v});
    } else {
      path.points.push_back(SpiderPoint{2, -v});
    }
  }
  return path;
}

/// Debug dump, one "step leg radius" record per line (leg 0 at the origin).
inline void write_path_dump(const SpiderPath& path, std::ostream& os) {
  os << "step\tleg\tradius\n";
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    os << i << '\t' << path.points[i].leg << '\t' << path.points[i].radius << '\n';
  }
}

}  // namespace spiderwalk
