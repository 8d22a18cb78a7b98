/*
 * Copyright 2026 The Hallu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hallu/error.hpp"
#include "hallu/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Prompting-strategy and agent evaluation harness"};
  app.require_subcommand(1);

  std::string config;
  bool force = false;
  std::string only;
  std::optional<std::size_t> limit;
  std::optional<int> parallelism;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Execute an experiment plan and write the report");
  run->add_option("--config", config, "Plan file (JSON)")->required()->check(CLI::ExistingFile);
  run->add_flag("--force", force, "Discard persisted results and start over");
  run->add_option("--only", only, "Restrict to e.g. strategy=cp,benchmark=triviaqa");
  run->add_option("--limit", limit, "Use at most N items per benchmark")->check(CLI::PositiveNumber);
  run->add_option("--parallelism", parallelism, "Concurrent queries")->check(CLI::PositiveNumber);
  run->add_flag("-q,--quiet", quiet, "No progress output");

  std::string dir;
  auto* report = app.add_subcommand("report", "Regenerate report files from persisted results");
  report->add_option("--dir", dir, "Output directory of a run")->required()->check(CLI::ExistingDirectory);

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "Check a plan without executing it");
  validate->add_option("--config", validate_config, "Plan file (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      hallu::ExperimentPlan plan = hallu::load_plan(config);
      hallu::RunOptions options;
      options.force = force;
      if (!only.empty()) options.only = hallu::parse_filter(only);
      options.limit = limit;
      options.parallelism = parallelism;
      if (!quiet) options.log = [](const std::string& line) { std::cerr << line << "\n"; };
      auto summary = hallu::run_plan(plan, options);
      for (const auto& [cell, error] : summary.failed_cells) std::cerr << "failed: " << cell << ": " << error << "\n";
      if (!quiet) std::cout << "report written to " << plan.output_dir.string() << "\n";
      return summary.failed_cells.empty() ? 0 : 3;
    }
    if (*report) {
      hallu::write_report(dir);
      std::cout << hallu::format_report_csv(hallu::build_report_rows(dir));
      return 0;
    }
    if (*validate) {
      hallu::ExperimentPlan plan = hallu::load_plan(validate_config);
      std::cout << plan.to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const hallu::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const hallu::MissingResults& e) {
    std::cerr << "missing results: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
