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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "spiderwalk/catalog.hpp"
#include "spiderwalk/experiment.hpp"

using namespace spiderwalk;

namespace {

ExperimentConfig small_lamperti() {
  auto cfg = find_experiment("lamperti")->defaults;
  cfg.replications = 500;
  cfg.walk_length = 512;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  SECTION("unknown fields are rejected") {
    auto j = nlohmann::json{{"experiment", "lamperti"}, {"walk_lenght", 100}};
    CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
  }

  SECTION("fields overlay defaults") {
    auto base = find_experiment("lamperti")->defaults;
    auto j = nlohmann::json{{"seed", 999}, {"replications", 77}};
    auto cfg = config_from_json(j, base);
    CHECK(cfg.seed == 999);
    CHECK(cfg.replications == 77);
    CHECK(cfg.walk_length == base.walk_length);
  }

  SECTION("config JSON round-trips") {
    auto cfg = find_experiment("joint-occupation")->defaults;
    auto cfg2 = config_from_json(config_to_json(cfg));
    CHECK(cfg2.experiment == cfg.experiment);
    CHECK(cfg2.leg_probs == cfg.leg_probs);
    CHECK(cfg2.seed == cfg.seed);
    CHECK(cfg2.walk_length == cfg.walk_length);
  }
}

TEST_CASE("invalid configs are refused before any simulation") {
  auto cfg = small_lamperti();
  cfg.replications = 0;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  auto bad_probs = small_lamperti();
  bad_probs.leg_probs = {0.4, 0.4};
  CHECK_THROWS_AS(run_experiment(bad_probs), std::invalid_argument);

  ExperimentConfig unknown;
  unknown.experiment = "no-such-thing";
  CHECK_THROWS_AS(run_experiment(unknown), std::invalid_argument);
}

TEST_CASE("catalog lists every documented experiment") {
  const char* names[] = {"excursion-pmf", "dobrushin",      "lamperti",
                         "joint-occupation", "coupling-rate", "exp-increments",
                         "minmax",        "chung-erdos",    "ibm-law"};
  for (const char* name : names) {
    const auto* def = find_experiment(name);
    REQUIRE(def != nullptr);
    CHECK(!def->description.empty());
    CHECK(def->defaults.experiment == name);
  }
  CHECK(find_experiment("nope") == nullptr);
}

TEST_CASE("reports are deterministic in the seed and thread count") {
  auto cfg = small_lamperti();
  cfg.threads = 1;
  auto r1 = run_experiment(cfg);
  cfg.threads = 8;
  auto r2 = run_experiment(cfg);
  REQUIRE(r1.samples.size() == r2.samples.size());
  for (std::size_t i = 0; i < r1.samples.size(); ++i) {
    CHECK(r1.samples[i].name == r2.samples[i].name);
    CHECK(r1.samples[i].values == r2.samples[i].values);
  }

  std::ostringstream csv1, csv2;
  write_samples_csv(r1, csv1);
  write_samples_csv(r2, csv2);
  CHECK(csv1.str() == csv2.str());

  cfg.seed += 1;
  auto r3 = run_experiment(cfg);
  CHECK(r3.samples[0].values != r1.samples[0].values);
}

TEST_CASE("sample CSV layout") {
  auto cfg = small_lamperti();
  auto report = run_experiment(cfg);
  std::ostringstream os;
  write_samples_csv(report, os);
  std::istringstream in(os.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "rep,statistic_name,value");
  std::int64_t rows = 0;
  while (std::getline(in, line)) ++rows;
  std::int64_t expected = 0;
  for (const auto& s : report.samples) expected += static_cast<std::int64_t>(s.values.size());
  CHECK(rows == expected);
  CHECK(rows == cfg.replications);  // one statistic per replication here
}

TEST_CASE("report JSON round-trips its summary fields") {
  auto cfg = small_lamperti();
  auto report = run_experiment(cfg);
  auto parsed = report_from_json(report_to_json(report));

  CHECK(parsed.config.experiment == report.config.experiment);
  CHECK(parsed.config.seed == report.config.seed);
  CHECK(parsed.config.leg_probs == report.config.leg_probs);
  CHECK(parsed.pass == report.pass);
  CHECK(parsed.notes == report.notes);
  REQUIRE(parsed.summaries.size() == report.summaries.size());
  for (std::size_t i = 0; i < parsed.summaries.size(); ++i) {
    CHECK(parsed.summaries[i].name == report.summaries[i].name);
    CHECK(parsed.summaries[i].count == report.summaries[i].count);
    CHECK(parsed.summaries[i].mean == report.summaries[i].mean);
    CHECK(parsed.summaries[i].quantiles == report.summaries[i].quantiles);
  }
  REQUIRE(parsed.tests.size() == report.tests.size());
  for (std::size_t i = 0; i < parsed.tests.size(); ++i) {
    CHECK(parsed.tests[i].name == report.tests[i].name);
    CHECK(parsed.tests[i].statistic == report.tests[i].statistic);
    CHECK(parsed.tests[i].pass == report.tests[i].pass);
  }
}

TEST_CASE("emit_report writes the three documents") {
  namespace fs = std::filesystem;
  auto cfg = small_lamperti();
  cfg.output_path = (fs::temp_directory_path() / "spiderwalk_emit_test").string();
  auto report = run_experiment(cfg);
  emit_report(report, true);
  CHECK(fs::exists(fs::path(cfg.output_path) / "summary.txt"));
  CHECK(fs::exists(fs::path(cfg.output_path) / "report.json"));
  CHECK(fs::exists(fs::path(cfg.output_path) / "samples.csv"));
  {
    std::ifstream in(fs::path(cfg.output_path) / "summary.txt");
    std::ostringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().find("experiment: lamperti") != std::string::npos);
    CHECK(ss.str().find("verdict:") != std::string::npos);
  }
  fs::remove_all(cfg.output_path);
}

TEST_CASE("summaries carry the 99-point quantile grid") {
  auto cfg = small_lamperti();
  auto report = run_experiment(cfg);
  REQUIRE(!report.summaries.empty());
  CHECK(report.summaries[0].quantiles.size() == 99);
}

TEST_CASE("quick distributional smoke of the small experiments") {
  SECTION("excursion-pmf at reduced scale passes its own tests") {
    auto cfg = find_experiment("excursion-pmf")->defaults;
    cfg.replications = 100'000;
    auto report = run_experiment(cfg);
    CHECK(report.pass);
  }

  SECTION("chung-erdos classifier part") {
    auto cfg = find_experiment("chung-erdos")->defaults;
    cfg.replications = 0;  // skip the walk diagnostic
    auto report = run_experiment(cfg);
    CHECK(report.pass);
  }

  SECTION("ibm-law at reduced scale") {
    auto cfg = find_experiment("ibm-law")->defaults;
    cfg.replications = 50'000;
    auto report = run_experiment(cfg);
    // at 5e4 draws the MC noise alone is ~0.006, so only sanity-check
    // the statistic, not the full-scale 0.002 bound
    for (const auto& t : report.tests) CHECK(t.statistic < 0.02);
  }
}

// The full selftest battery (1e6 draws per sampler) runs in the acceptance
// suite; the unit scope here stops at the experiment plumbing.
