/*
 * Copyright 2026 The nrfbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// nrfbench command line. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 numerical failure.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nrfbench/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int ExitCodeOf(nrfbench::ErrorCategory c) {
  switch (c) {
    case nrfbench::ErrorCategory::kConfig: return kExitConfig;
    case nrfbench::ErrorCategory::kData: return kExitData;
    case nrfbench::ErrorCategory::kNumerical: return kExitNumerical;
  }
  return 1;
}

void Log(const std::string& phase, const std::string& what, bool ran) {
  std::cerr << "[nrfbench] " << phase << " " << what << (ran ? ": done" : ": up to date")
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-class classifier robustness and non-robust-feature benchmark"};
  app.require_subcommand(1);

  std::string config_path = "config.json";
  bool force = false;
  std::vector<std::string> tms;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", config_path, "experiment config (JSON)")
        ->capture_default_str();
    sub->add_flag("--force", force, "rerun phases even when their artifacts validate");
  };
  auto* train = app.add_subcommand("train", "train one classifier per seed");
  auto* attack = app.add_subcommand("attack-eval", "one-class attacks on the test split");
  auto* gen = app.add_subcommand("gen-nrf", "build NRF datasets");
  auto* train_nrf = app.add_subcommand("train-nrf", "train and evaluate NRF models");
  auto* report = app.add_subcommand("report", "write CSV and SVG reports");
  auto* all = app.add_subcommand("all", "run the full loop and report");
  for (auto* sub : {train, attack, gen, train_nrf, report, all}) add_common(sub);
  for (auto* sub : {attack, gen, train_nrf}) {
    sub->add_option("--tm", tms, "threat model name(s); default: all configured");
  }
  report->add_option("--out,-o", out_dir, "output directory (default <output_dir>/reports)");

  CLI11_PARSE(app, argc, argv);

  try {
    nrfbench::ExperimentConfig cfg = nrfbench::LoadExperimentConfig(config_path);
    nrfbench::ApplySeedOverride(cfg, std::getenv("NRFBENCH_SEED"));
    nrfbench::Experiment exp(std::move(cfg));
    const auto& c = exp.config();
    auto names = [&](const std::vector<std::string>& fallback) {
      return tms.empty() ? fallback : tms;
    };
    std::vector<std::filesystem::path> written;
    if (*train) {
      Log("train", "", exp.Train(force));
    } else if (*attack) {
      for (const auto& n : names(c.eval_tms)) Log("attack-eval", n, exp.AttackEval(n, force));
    } else if (*gen) {
      for (const auto& n : names(c.nrf_tms)) Log("gen-nrf", n, exp.GenNrf(n, force));
    } else if (*train_nrf) {
      for (const auto& n : names(c.nrf_tms)) Log("train-nrf", n, exp.TrainNrf(n, force));
    } else if (*report) {
      written = exp.Report(out_dir.empty() ? c.output_dir / "reports" : std::filesystem::path(out_dir));
    } else if (*all) {
      written = exp.All(force);
    }
    for (const auto& p : written) std::cout << p.string() << "\n";
  } catch (const nrfbench::Error& e) {
    std::cerr << "nrfbench: " << e.what() << "\n";
    return ExitCodeOf(e.category());
  } catch (const std::exception& e) {
    std::cerr << "nrfbench: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
