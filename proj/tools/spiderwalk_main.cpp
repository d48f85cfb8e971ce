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

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spiderwalk/catalog.hpp"
#include "spiderwalk/experiment.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitTestFailure = 1;
constexpr int kExitConfigError = 2;

int cmd_list() {
  for (const auto& def : spiderwalk::experiment_catalog()) {
    std::cout << def.name << "\n    " << def.description << "\n    defaults: "
              << spiderwalk::config_to_json(def.defaults).dump() << "\n";
  }
  return kExitPass;
}

int cmd_selftest(std::uint64_t seed, int threads) {
  auto results = spiderwalk::run_selftests(seed, threads);
  bool pass = true;
  for (const auto& t : results) {
    pass = pass && t.pass;
    std::cout << (t.pass ? "[pass] " : "[FAIL] ") << t.name << " stat=" << t.statistic
              << (t.mode == spiderwalk::TestResult::Mode::pvalue_above
                      ? " p=" + std::to_string(t.p_value)
                      : "")
              << '\n';
  }
  std::cout << (pass ? "selftest: PASS" : "selftest: FAIL") << '\n';
  return pass ? kExitPass : kExitTestFailure;
}

int cmd_run(const std::string& name, const std::string& config_path, bool have_seed,
            std::uint64_t seed, bool have_threads, int threads, bool emit_samples) {
  const auto* def = spiderwalk::find_experiment(name);
  if (def == nullptr) {
    std::cerr << "error: unknown experiment '" << name << "' (see `spiderwalk list`)\n";
    return kExitConfigError;
  }
  spiderwalk::ExperimentConfig cfg = def->defaults;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config file " << config_path << '\n';
      return kExitConfigError;
    }
    nlohmann::json j = nlohmann::json::parse(in);
    cfg = spiderwalk::config_from_json(j, cfg);
    if (!cfg.experiment.empty() && cfg.experiment != name) {
      std::cerr << "error: config names experiment '" << cfg.experiment
                << "' but --experiment is '" << name << "'\n";
      return kExitConfigError;
    }
    cfg.experiment = name;
  }
  if (have_seed) cfg.seed = seed;
  if (have_threads) cfg.threads = threads;

  auto report = spiderwalk::run_experiment(cfg);
  spiderwalk::emit_report(report, emit_samples);
  spiderwalk::write_summary_text(report, std::cout);
  return report.pass ? kExitPass : kExitTestFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for walks and Brownian motion on a spider graph"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment from the catalog");
  std::string experiment, config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  bool emit_samples = false;
  run->add_option("--experiment", experiment, "catalog experiment name")->required();
  run->add_option("--config", config_path, "JSON config file overlaying the defaults");
  auto* seed_opt = run->add_option("--seed", seed, "master seed override");
  auto* threads_opt = run->add_option("--threads", threads, "worker count (0 = hardware)");
  run->add_flag("--emit-samples", emit_samples, "also write per-replication samples.csv");

  auto* list = app.add_subcommand("list", "print the experiment catalog");

  auto* selftest = app.add_subcommand("selftest", "distributional self-tests of the samplers");
  std::uint64_t selftest_seed = 987654321;
  int selftest_threads = 0;
  selftest->add_option("--seed", selftest_seed, "self-test seed");
  selftest->add_option("--threads", selftest_threads, "worker count (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfigError;
  }

  try {
    if (list->parsed()) return cmd_list();
    if (selftest->parsed()) return cmd_selftest(selftest_seed, selftest_threads);
    return cmd_run(experiment, config_path, seed_opt->count() > 0, seed,
                   threads_opt->count() > 0, threads, emit_samples);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}
