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
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spiderwalk/rng.hpp"
#include "spiderwalk/stats.hpp"

namespace spiderwalk {

// ---------------------------------------------------------------------------
// Deterministic parallel execution
// ---------------------------------------------------------------------------

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) on a worker pool. Results must go into
/// preallocated per-index slots so the outcome is independent of scheduling.
template <class Fn>
void parallel_for_index(std::int64_t count, int threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Chunked replication driver: chunk c covers replications [c*chunk,
/// min((c+1)*chunk, total)) and owns the child stream derive_stream(base, c).
/// Content is a pure function of (seed, chunking), never of the thread count.
template <class Fn>
void for_each_stream_chunk(std::int64_t total, std::int64_t chunk_size,
                           std::uint64_t master_seed, std::uint64_t stream_group,
                           int threads, Fn&& fn) {
  if (chunk_size < 1) throw std::invalid_argument("chunk_size must be >= 1");
  const std::int64_t chunks = (total + chunk_size - 1) / chunk_size;
  SeedSpec group = derive_stream(SeedSpec{master_seed, 0}, stream_group);
  parallel_for_index(chunks, threads, [&](std::int64_t c) {
    Rng rng(derive_stream(group, static_cast<std::uint64_t>(c)));
    std::int64_t begin = c * chunk_size;
    std::int64_t end = std::min(total, begin + chunk_size);
    fn(c, begin, end, rng);
  });
}

/// KS distance with the CDF evaluated in parallel (the quadrature-backed CDFs
/// dominate the cost at 10^6 samples). Deterministic: evaluation only.
inline double ks_distance_parallel(std::vector<double> samples,
                                   const std::function<double(double)>& cdf,
                                   int threads) {
  std::sort(samples.begin(), samples.end());
  std::vector<double> values(samples.size());
  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  const std::int64_t block = 4096;
  parallel_for_index((n + block - 1) / block, threads, [&](std::int64_t b) {
    std::int64_t lo = b * block, hi = std::min(n, lo + block);
    for (std::int64_t i = lo; i < hi; ++i)
      values[static_cast<std::size_t>(i)] = cdf(samples[static_cast<std::size_t>(i)]);
  });
  return ks_statistic_sorted(samples, values);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string experiment;
  int num_legs = 2;
  std::vector<double> leg_probs;
  std::int64_t walk_length = 0;
  std::int64_t replications = 0;
  std::uint64_t seed = 12345;
  double dt = 1.0 / 1024.0;
  std::int32_t x = 1;
  std::int32_t leg = 1;
  std::string output_path;
  int threads = 0;

  SpiderConfig spider() const { return SpiderConfig{num_legs, leg_probs}; }

  /// p of the positive leg for two-leg experiments.
  double skew_p() const {
    if (num_legs != 2) throw std::invalid_argument("skew_p: experiment needs two legs");
    return leg_probs.at(0);
  }
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  return nlohmann::json{{"experiment", c.experiment},
                        {"num_legs", c.num_legs},
                        {"leg_probs", c.leg_probs},
                        {"walk_length", c.walk_length},
                        {"replications", c.replications},
                        {"seed", c.seed},
                        {"dt", c.dt},
                        {"x", c.x},
                        {"leg", c.leg},
                        {"output_path", c.output_path},
                        {"threads", c.threads}};
}

/// Overlays a JSON document onto defaults. Unknown keys are rejected so a
/// config file always means what it says.
inline ExperimentConfig config_from_json(const nlohmann::json& j,
                                         ExperimentConfig base = {}) {
  static const std::vector<std::string> known = {
      "experiment", "num_legs", "leg_probs", "walk_length", "replications",
      "seed",       "dt",       "x",         "leg",         "output_path",
      "threads"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown config field: " + key);
  }
  ExperimentConfig c = std::move(base);
  if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
  if (j.contains("num_legs")) c.num_legs = j.at("num_legs").get<int>();
  if (j.contains("leg_probs")) c.leg_probs = j.at("leg_probs").get<std::vector<double>>();
  if (j.contains("walk_length")) c.walk_length = j.at("walk_length").get<std::int64_t>();
  if (j.contains("replications")) c.replications = j.at("replications").get<std::int64_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("dt")) c.dt = j.at("dt").get<double>();
  if (j.contains("x")) c.x = j.at("x").get<std::int32_t>();
  if (j.contains("leg")) c.leg = j.at("leg").get<std::int32_t>();
  if (j.contains("output_path")) c.output_path = j.at("output_path").get<std::string>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  return c;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SampleSeries {
  std::string name;
  std::vector<double> values;
};

struct StatisticSummary {
  std::string name;
  std::int64_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> quantiles;  // 1%..99%
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string description;
  std::vector<SampleSeries> samples;
  std::vector<StatisticSummary> summaries;
  std::vector<TestResult> tests;
  std::vector<std::string> notes;
  bool pass = false;
  double wall_seconds = 0.0;

  void add_series(std::string name, std::vector<double> values) {
    summaries.push_back(summarize(name, values));
    samples.push_back(SampleSeries{std::move(name), std::move(values)});
  }

  void add_test(TestResult t) { tests.push_back(std::move(t)); }

  void finalize() {
    pass = true;
    for (const auto& t : tests) pass = pass && t.pass;
  }

  static StatisticSummary summarize(const std::string& name,
                                    const std::vector<double>& values) {
    StatisticSummary s;
    s.name = name;
    s.count = static_cast<std::int64_t>(values.size());
    if (values.empty()) return s;
    s.min = values.front();
    s.max = values.front();
    double sum = 0.0;
    for (double v : values) {
      sum += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = values.size() > 1
                   ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                   : 0.0;
    s.quantiles = quantiles_99(values);
    return s;
  }
};

inline const char* to_string(TestResult::Mode m) {
  switch (m) {
    case TestResult::Mode::pvalue_above: return "pvalue_above";
    case TestResult::Mode::stat_below: return "stat_below";
    default: return "stat_at_least";
  }
}

inline TestResult::Mode test_mode_from_string(const std::string& s) {
  if (s == "pvalue_above") return TestResult::Mode::pvalue_above;
  if (s == "stat_below") return TestResult::Mode::stat_below;
  if (s == "stat_at_least") return TestResult::Mode::stat_at_least;
  throw std::invalid_argument("bad test mode: " + s);
}

inline nlohmann::json report_to_json(const ExperimentReport& r) {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : r.tests) {
    tests.push_back({{"name", t.name},
                     {"statistic", t.statistic},
                     {"p_value", t.p_value},
                     {"n_samples", t.n_samples},
                     {"threshold", t.threshold},
                     {"mode", to_string(t.mode)},
                     {"pass", t.pass}});
  }
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& s : r.summaries) {
    summaries.push_back({{"name", s.name},
                         {"count", s.count},
                         {"mean", s.mean},
                         {"stddev", s.stddev},
                         {"min", s.min},
                         {"max", s.max},
                         {"quantiles", s.quantiles}});
  }
  return nlohmann::json{{"config", config_to_json(r.config)},
                        {"description", r.description},
                        {"summaries", summaries},
                        {"tests", tests},
                        {"notes", r.notes},
                        {"pass", r.pass},
                        {"timing", {{"wall_seconds", r.wall_seconds}}}};
}

/// Rebuilds the summary-level report (everything but raw samples and timing)
/// from its JSON form.
inline ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.config = config_from_json(j.at("config"));
  r.description = j.at("description").get<std::string>();
  for (const auto& s : j.at("summaries")) {
    StatisticSummary sum;
    sum.name = s.at("name").get<std::string>();
    sum.count = s.at("count").get<std::int64_t>();
    sum.mean = s.at("mean").get<double>();
    sum.stddev = s.at("stddev").get<double>();
    sum.min = s.at("min").get<double>();
    sum.max = s.at("max").get<double>();
    sum.quantiles = s.at("quantiles").get<std::vector<double>>();
    r.summaries.push_back(std::move(sum));
  }
  for (const auto& t : j.at("tests")) {
    TestResult tr;
    tr.name = t.at("name").get<std::string>();
    tr.statistic = t.at("statistic").get<double>();
    tr.p_value = t.at("p_value").get<double>();
    tr.n_samples = t.at("n_samples").get<std::int64_t>();
    tr.threshold = t.at("threshold").get<double>();
    tr.mode = test_mode_from_string(t.at("mode").get<std::string>());
    tr.pass = t.at("pass").get<bool>();
    r.tests.push_back(std::move(tr));
  }
  r.notes = j.at("notes").get<std::vector<std::string>>();
  r.pass = j.at("pass").get<bool>();
  return r;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Delimited per-replication samples: header then one row per value.
inline void write_samples_csv(const ExperimentReport& r, std::ostream& os) {
  os << "rep,statistic_name,value\n";
  for (const auto& series : r.samples) {
    for (std::size_t i = 0; i < series.values.size(); ++i) {
      os << i << ',' << series.name << ',' << detail::format_double(series.values[i])
         << '\n';
    }
  }
}

inline void write_summary_text(const ExperimentReport& r, std::ostream& os) {
  os << "experiment: " << r.config.experiment << '\n';
  os << "law: " << r.description << '\n';
  os << "seed: " << r.config.seed << "  replications: " << r.config.replications
     << "  walk_length: " << r.config.walk_length << '\n';
  os << "wall_seconds: " << r.wall_seconds << '\n';
  os << '\n';
  for (const auto& s : r.summaries) {
    os << "  " << s.name << ": n=" << s.count << " mean=" << s.mean
       << " sd=" << s.stddev << " min=" << s.min << " max=" << s.max << '\n';
  }
  os << '\n';
  for (const auto& t : r.tests) {
    os << (t.pass ? "  [pass] " : "  [FAIL] ") << t.name << "  stat=" << t.statistic;
    if (t.mode == TestResult::Mode::pvalue_above) {
      os << "  p=" << t.p_value << " (need > " << t.threshold << ")";
    } else if (t.mode == TestResult::Mode::stat_below) {
      os << " (need <= " << t.threshold << ")";
    } else {
      os << " (need >= " << t.threshold << ")";
    }
    os << '\n';
  }
  for (const auto& n : r.notes) os << "  note: " << n << '\n';
  os << '\n' << "verdict: " << (r.pass ? "PASS" : "FAIL") << '\n';
}

/// Writes summary.txt, report.json and (optionally) samples.csv under the
/// report's output path.
inline void emit_report(const ExperimentReport& r, bool emit_samples) {
  namespace fs = std::filesystem;
  fs::path dir = r.config.output_path.empty() ? fs::path("out") / r.config.experiment
                                              : fs::path(r.config.output_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string());
  auto open = [&](const char* name) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw std::runtime_error(std::string("cannot write ") + (dir / name).string());
    return os;
  };
  {
    auto os = open("summary.txt");
    write_summary_text(r, os);
  }
  {
    auto os = open("report.json");
    os << report_to_json(r).dump(2) << '\n';
  }
  if (emit_samples) {
    auto os = open("samples.csv");
    write_samples_csv(r, os);
  }
}

}  // namespace spiderwalk
