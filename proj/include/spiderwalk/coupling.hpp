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
#include <deque>
#include <stdexcept>
#include <vector>

#include "spiderwalk/local_time.hpp"
#include "spiderwalk/rng.hpp"
#include "spiderwalk/spider.hpp"

namespace spiderwalk {

/// A fine lattice Brownian path (spacing 1/m, dt = 1/m^2) together with its
/// Skorokhod stopping times and the unit walk read off at them. tau holds
/// fine step indices; tau[0] = 0.
struct CoupledPair {
  SpiderPath fine_path;
  std::vector<std::int64_t> tau;
  SpiderPath walk;
  int m = 0;
};

inline std::int64_t fine_distance(std::int32_t leg_a, std::int64_t fr_a,
                                  std::int32_t leg_b, std::int64_t fr_b) {
  if (fr_a == 0) return fr_b;
  if (fr_b == 0) return fr_a;
  return leg_a == leg_b ? std::abs(fr_a - fr_b) : fr_a + fr_b;
}

/// Extracts the integer lattice refinement m = 1/sqrt(dt); level-1 crossings
/// are exact grid events only when sqrt(dt) divides 1.
inline int lattice_refinement(double step_scale) {
  double inv = 1.0 / step_scale;
  int m = static_cast<int>(std::llround(inv));
  if (m < 1 || std::abs(inv - m) > 1e-9 * inv)
    throw std::invalid_argument("lattice step must be 1/m for integer m (dt = 1/m^2)");
  return m;
}

/// Streams a fine spider walk and its embedded unit walk. Every fine step is
/// reported through obs.on_fine(i, leg, fine_radius); each Skorokhod crossing
/// k = 1..max_embedded through obs.on_crossing(k, walk_point, fine_index).
/// Runs until max_embedded crossings have occurred and at least min_fine fine
/// steps have been taken.
///
/// A crossing is the first time the path sits at spider distance one (m fine
/// steps) from its position at the previous crossing. Between crossings the
/// path cannot change legs without triggering, so the test below needs no leg
/// comparison.
template <class Obs>
void run_coupled_fine(const SpiderConfig& config, int m, std::int64_t max_embedded,
                      std::int64_t min_fine, Rng& rng, Obs&& obs) {
  config.validate();
  if (m < 1) throw std::invalid_argument("run_coupled_fine: m must be >= 1");
  CategoricalDist leg_dist(config.leg_probs);
  std::int32_t leg = 0;
  std::int64_t fr = 0;
  std::int64_t anchor_fr = 0;
  std::int64_t fine = 0, k = 0;
  while (k < max_embedded || fine < min_fine) {
    if (fr == 0) {
      leg = static_cast<std::int32_t>(leg_dist(rng)) + 1;
      fr = 1;
    } else {
      fr += rng.fair_bit() ? 1 : -1;
      if (fr == 0) leg = 0;
    }
    ++fine;
    obs.on_fine(fine, leg, fr);
    const bool crossed =
        anchor_fr == 0 ? fr == m : (fr == anchor_fr + m || fr == anchor_fr - m);
    if (crossed) {
      ++k;
      anchor_fr = fr;
      if (k <= max_embedded) {
        SpiderPoint pos = fr == 0 ? kOrigin
                                  : SpiderPoint{leg, static_cast<std::int32_t>(fr / m)};
        obs.on_crossing(k, pos, fine);
      }
    }
  }
}

/// Reads the Skorokhod stopping times and the embedded unit walk off an
/// existing fine lattice path. Throws when the path holds fewer than
/// min_steps crossings.
inline CoupledPair skorokhod_embed(SpiderPath fine, std::int64_t min_steps = 0) {
  CoupledPair pair;
  pair.m = lattice_refinement(fine.step_scale);
  const int m = pair.m;
  pair.tau.push_back(0);
  pair.walk.points.push_back(kOrigin);
  std::int64_t anchor_fr = 0;
  for (std::int64_t i = 1; i <= fine.num_steps(); ++i) {
    const auto& pt = fine.at_step(i);
    const std::int64_t fr = pt.radius;
    const bool crossed =
        anchor_fr == 0 ? fr == m : (fr == anchor_fr + m || fr == anchor_fr - m);
    if (crossed) {
      anchor_fr = fr;
      pair.tau.push_back(i);
      pair.walk.points.push_back(
          fr == 0 ? kOrigin : SpiderPoint{pt.leg, static_cast<std::int32_t>(fr / m)});
    }
  }
  if (pair.walk.num_steps() < min_steps)
    throw std::runtime_error("skorokhod_embed: path horizon exhausted before requested steps");
  pair.fine_path = std::move(fine);
  return pair;
}

/// Local-time increments a_i(x) of the fine path at signed integer site x
/// (two-leg pairs): fine visits to the site over [tau_nu, tau_nu+1), scaled
/// by sqrt(dt), where nu runs over the embedded walk's visits to x. The
/// window starts at the arrival step, so each increment is positive and its
/// lattice mean is exactly one. Empty when the walk never visits x.
inline std::vector<double> extract_a_increments(const CoupledPair& pair, std::int32_t x) {
  if (x == 0) throw std::invalid_argument("extract_a_increments: x must be nonzero");
  const std::int32_t leg = x > 0 ? 1 : 2;
  const std::int32_t radius = std::abs(x);
  const SpiderPoint site{leg, radius};
  const std::int64_t fine_site = std::int64_t{radius} * pair.m;
  std::vector<double> out;
  for (std::int64_t k = 0; k + 1 <= pair.walk.num_steps(); ++k) {
    if (!(pair.walk.at_step(k) == site)) continue;
    std::int64_t visits = 0;
    for (std::int64_t i = pair.tau[static_cast<std::size_t>(k)];
         i < pair.tau[static_cast<std::size_t>(k + 1)]; ++i) {
      const auto& pt = pair.fine_path.at_step(i);
      if (pt.leg == leg && pt.radius == fine_site) ++visits;
    }
    out.push_back(static_cast<double>(visits) / pair.m);
  }
  return out;
}

/// Streams the walk/path coupling and the three ledger comparisons behind it.
///
/// The comparison pairs the walk after k unit steps with the fine path after
/// k*m^2 fine steps; those two clocks drift apart by O(sqrt(k)), so fine-step
/// events are buffered per unit-time window and consumed together with
/// crossing k once both are available. Running maxima only need refreshing at
/// sites touched by the consumed window or step.
class DiscrepancyTracker {
 public:
  struct Row {
    std::int64_t n = 0;
    double walk = 0.0;        // max_{k<=n} |walk_k - path(k)|
    double local_time = 0.0;  // max_{k<=n} max_site |xi(site,k) - eta(site,k)|
    double occupation = 0.0;  // max_leg |T(j,n) - Z(j,n)|
  };

  DiscrepancyTracker(int num_legs, int m, std::vector<std::int64_t> checkpoints)
      : num_legs_(num_legs), m_(m), mm_(std::int64_t{m} * m), next_window_end_(mm_) {
    if (num_legs < 1 || m < 1) throw std::invalid_argument("DiscrepancyTracker: bad shape");
    for (auto c : checkpoints) {
      if (c < 0) throw std::invalid_argument("DiscrepancyTracker: negative checkpoint");
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    for (auto c : checkpoints) {
      if (c == 0) {
        rows_.push_back(Row{0, 0.0, 0.0, 0.0});
      } else {
        pending_checkpoints_.push_back(c);
      }
    }
    xi_.assign(static_cast<std::size_t>(num_legs) + 1, {});
    eta_.assign(static_cast<std::size_t>(num_legs) + 1, {});
    walk_occ_.assign(static_cast<std::size_t>(num_legs) + 1, 0);
    fine_occ_.assign(static_cast<std::size_t>(num_legs) + 1, 0);
  }

  std::int64_t last_checkpoint() const {
    return pending_checkpoints_.empty() ? 0 : pending_checkpoints_.back();
  }

  void on_fine(std::int64_t i, std::int32_t leg, std::int64_t fr) {
    const std::int64_t delta = fr - prev_fr_;
    prev_fr_ = fr;
    rem_ = delta > 0 ? (rem_ + 1 == m_ ? 0 : rem_ + 1) : (rem_ == 0 ? m_ - 1 : rem_ - 1);
    if (fr == 0) {
      ++window_.origin_visits;
    } else {
      ++fine_occ_[static_cast<std::size_t>(leg)];
      if (rem_ == 0)
        window_.site_visits.push_back(
            Site{leg, static_cast<std::int32_t>(fr / m_)});
    }
    if (i == next_window_end_) {
      window_.end_leg = leg;
      window_.end_fr = fr;
      std::int64_t w = i / mm_;
      if (!pending_checkpoints_.empty() &&
          std::find(pending_checkpoints_.begin(), pending_checkpoints_.end(), w) !=
              pending_checkpoints_.end()) {
        window_.occ.assign(fine_occ_.begin(), fine_occ_.end());
      }
      windows_.push_back(std::move(window_));
      window_ = Window{};
      next_window_end_ += mm_;
      advance();
    }
  }

  void on_crossing(std::int64_t /*k*/, SpiderPoint pos, std::int64_t /*fine_index*/) {
    crossings_.push_back(pos);
    advance();
  }

  const std::vector<Row>& rows() const { return rows_; }
  bool done() const { return pending_checkpoints_.empty(); }

 private:
  struct Site {
    std::int32_t leg;
    std::int32_t radius;
  };
  struct Window {
    std::vector<Site> site_visits;
    std::int64_t origin_visits = 0;
    std::int32_t end_leg = 0;
    std::int64_t end_fr = 0;
    std::vector<std::int64_t> occ;  // cumulative fine per-leg steps, checkpoints only
  };

  static void bump(std::vector<std::int32_t>& v, std::int32_t r) {
    if (static_cast<std::size_t>(r) >= v.size()) v.resize(static_cast<std::size_t>(r) * 2 + 2, 0);
    ++v[static_cast<std::size_t>(r)];
  }
  static std::int64_t get(const std::vector<std::int32_t>& v, std::int32_t r) {
    return static_cast<std::size_t>(r) < v.size() ? v[static_cast<std::size_t>(r)] : 0;
  }

  void refresh_site(std::int32_t leg, std::int32_t radius) {
    double xi, eta;
    if (radius == 0) {
      xi = static_cast<double>(xi0_);
      eta = static_cast<double>(eta0_);
    } else {
      xi = static_cast<double>(get(xi_[static_cast<std::size_t>(leg)], radius));
      eta = static_cast<double>(get(eta_[static_cast<std::size_t>(leg)], radius));
    }
    double diff = std::abs(xi - eta / m_);
    if (diff > lt_max_) lt_max_ = diff;
  }

  void advance() {
    while (!windows_.empty() && !crossings_.empty() && !pending_checkpoints_.empty()) {
      Window w = std::move(windows_.front());
      windows_.pop_front();
      SpiderPoint pos = crossings_.front();
      crossings_.pop_front();
      ++k_eval_;

      if (pos.is_origin()) {
        ++xi0_;
      } else {
        bump(xi_[static_cast<std::size_t>(pos.leg)], pos.radius);
        ++walk_occ_[static_cast<std::size_t>(pos.leg)];
      }
      eta0_ += w.origin_visits;
      for (const Site& s : w.site_visits)
        bump(eta_[static_cast<std::size_t>(s.leg)], s.radius);

      if (w.origin_visits > 0 || pos.is_origin()) refresh_site(0, 0);
      for (const Site& s : w.site_visits) refresh_site(s.leg, s.radius);
      if (!pos.is_origin()) refresh_site(pos.leg, pos.radius);

      double wd = static_cast<double>(fine_distance(pos.leg, std::int64_t{pos.radius} * m_,
                                                    w.end_leg, w.end_fr)) /
                  static_cast<double>(m_);
      if (wd > walk_max_) walk_max_ = wd;

      if (k_eval_ == pending_checkpoints_.front()) {
        pending_checkpoints_.erase(pending_checkpoints_.begin());
        double occ_disc = 0.0;
        const double dt = 1.0 / static_cast<double>(mm_);
        for (int j = 1; j <= num_legs_; ++j) {
          double z = static_cast<double>(w.occ[static_cast<std::size_t>(j)]) * dt;
          double t = static_cast<double>(walk_occ_[static_cast<std::size_t>(j)]);
          occ_disc = std::max(occ_disc, std::abs(t - z));
        }
        rows_.push_back(Row{k_eval_, walk_max_, lt_max_, occ_disc});
      }
    }
  }

  int num_legs_;
  int m_;
  std::int64_t mm_;
  std::vector<std::int64_t> pending_checkpoints_;
  std::vector<Row> rows_;

  // production side
  Window window_;
  std::int64_t next_window_end_ = 0;
  std::int64_t prev_fr_ = 0;
  std::int32_t rem_ = 0;
  std::vector<std::int64_t> fine_occ_;
  std::deque<Window> windows_;
  std::deque<SpiderPoint> crossings_;

  // evaluation side
  std::int64_t k_eval_ = 0;
  std::int64_t xi0_ = 0;
  std::int64_t eta0_ = 0;
  std::vector<std::vector<std::int32_t>> xi_;
  std::vector<std::vector<std::int32_t>> eta_;
  std::vector<std::int64_t> walk_occ_;
  double walk_max_ = 0.0;
  double lt_max_ = 0.0;
};

/// Streams one coupled pair and returns the discrepancy rows at the given
/// checkpoints (walk and local-time maxima are running up to each n, the
/// occupation discrepancy is evaluated at n).
inline std::vector<DiscrepancyTracker::Row> coupled_discrepancy_rows(
    const SpiderConfig& config, int m, std::vector<std::int64_t> checkpoints, Rng& rng) {
  DiscrepancyTracker tracker(config.num_legs, m, std::move(checkpoints));
  struct Obs {
    DiscrepancyTracker* t;
    void on_fine(std::int64_t i, std::int32_t leg, std::int64_t fr) { t->on_fine(i, leg, fr); }
    void on_crossing(std::int64_t k, SpiderPoint pos, std::int64_t fine) {
      t->on_crossing(k, pos, fine);
    }
  } obs{&tracker};
  const std::int64_t n = tracker.last_checkpoint();
  run_coupled_fine(config, m, n, n * std::int64_t{m} * m, rng, obs);
  return tracker.rows();
}

namespace detail {

inline DiscrepancyTracker replay_pair(const CoupledPair& pair, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("discrepancy: n must be >= 0");
  if (pair.walk.num_steps() < n)
    throw std::runtime_error("discrepancy: pair holds fewer embedded steps than requested");
  const std::int64_t mm = std::int64_t{pair.m} * pair.m;
  if (pair.fine_path.num_steps() < n * mm)
    throw std::runtime_error("discrepancy: fine path shorter than n*m^2 steps");
  DiscrepancyTracker tracker(
      [&] {
        std::int32_t legs = 1;
        for (const auto& pt : pair.fine_path.points) legs = std::max(legs, pt.leg);
        return static_cast<int>(legs);
      }(),
      pair.m, {n});
  std::size_t next_tau = 1;
  for (std::int64_t i = 1; i <= pair.fine_path.num_steps() && !tracker.done(); ++i) {
    const auto& pt = pair.fine_path.at_step(i);
    tracker.on_fine(i, pt.leg, pt.radius);
    if (next_tau < pair.tau.size() && pair.tau[next_tau] == i) {
      tracker.on_crossing(static_cast<std::int64_t>(next_tau),
                          pair.walk.at_step(static_cast<std::int64_t>(next_tau)), i);
      ++next_tau;
    }
  }
  return tracker;
}

}  // namespace detail

inline double discrepancy_walk(const CoupledPair& pair, std::int64_t n) {
  if (n == 0) return 0.0;
  return detail::replay_pair(pair, n).rows().back().walk;
}

inline double discrepancy_localtime(const CoupledPair& pair, std::int64_t n) {
  if (n == 0) return 0.0;
  return detail::replay_pair(pair, n).rows().back().local_time;
}

inline double discrepancy_occupation(const CoupledPair& pair, std::int64_t n) {
  if (n == 0) return 0.0;
  return detail::replay_pair(pair, n).rows().back().occupation;
}

/// Mass production of a_i(x) increments from one coupled two-leg pair,
/// without materializing the fine path. Increments whose window is cut by the
/// horizon are dropped.
inline void stream_a_increments(double p, std::int32_t x, int m,
                                std::int64_t embedded_steps, Rng& rng,
                                std::vector<double>& out) {
  if (x == 0) throw std::invalid_argument("stream_a_increments: x must be nonzero");
  SpiderConfig config{2, {p, 1.0 - p}};
  const std::int32_t leg = x > 0 ? 1 : 2;
  const std::int64_t fine_site = std::int64_t{std::abs(x)} * m;
  const SpiderPoint site{leg, std::abs(x)};
  struct Obs {
    std::int32_t leg;
    std::int64_t fine_site;
    SpiderPoint site;
    int m;
    bool collecting = false;
    std::int64_t count = 0;
    std::vector<double>* out;
    void on_fine(std::int64_t, std::int32_t l, std::int64_t fr) {
      if (collecting && l == leg && fr == fine_site) ++count;
    }
    void on_crossing(std::int64_t, SpiderPoint pos, std::int64_t) {
      if (collecting) {
        out->push_back(static_cast<double>(count) / m);
        collecting = false;
      }
      if (pos == site) {
        collecting = true;
        count = 1;  // the arrival step itself
      }
    }
  } obs{leg, fine_site, site, m, false, 0, &out};
  run_coupled_fine(config, m, embedded_steps, 0, rng, obs);
}

/// One embedded step's worth of bookkeeping for the stopping-time tests.
struct TauSample {
  double increment_time = 0.0;  // tau_i - tau_{i-1} in time units
  std::int32_t leg = 0;         // leg of the embedded position after the step
  bool from_origin = false;     // step departed from the origin
};

inline std::vector<TauSample> collect_tau_samples(const SpiderConfig& config, int m,
                                                  std::int64_t embedded_steps, Rng& rng) {
  std::vector<TauSample> samples;
  samples.reserve(static_cast<std::size_t>(embedded_steps));
  struct Obs {
    std::vector<TauSample>* out;
    double dt;
    std::int64_t prev_fine = 0;
    bool prev_origin = true;
    void on_fine(std::int64_t, std::int32_t, std::int64_t) {}
    void on_crossing(std::int64_t, SpiderPoint pos, std::int64_t fine) {
      out->push_back(TauSample{static_cast<double>(fine - prev_fine) * dt, pos.leg,
                               prev_origin});
      prev_fine = fine;
      prev_origin = pos.is_origin();
    }
  } obs{&samples, 1.0 / (static_cast<double>(m) * m), 0, true};
  run_coupled_fine(config, m, embedded_steps, 0, rng, obs);
  return samples;
}

}  // namespace spiderwalk
