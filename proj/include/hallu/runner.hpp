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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hallu/agents.hpp"
#include "hallu/bench.hpp"
#include "hallu/gateway.hpp"
#include "hallu/mock_backend.hpp"
#include "hallu/strategies.hpp"
#include "hallu/tools.hpp"

namespace hallu {

struct BenchmarkSource {
  Benchmark benchmark = Benchmark::gsm8k;
  std::filesystem::path path;
  std::optional<std::size_t> limit;
};

// An empty benchmark list means every benchmark of the plan.
struct StrategyEntry {
  StrategyConfig config;
  std::vector<Benchmark> benchmarks;
};

struct AgentEntry {
  AgentConfig config;
  std::vector<Benchmark> benchmarks;
};

struct ToolSettings {
  bool live = false;
  std::optional<std::filesystem::path> fixtures;
  SandboxOptions sandbox;
  LiveClientOptions client;
};

// The experiment grid, read from one JSON document. Relative paths are
// resolved against the plan file's directory. See README.md for the schema.
struct ExperimentPlan {
  BackendConfig backend;
  std::optional<MockScript> mock;
  std::vector<StrategyEntry> strategies;
  std::vector<AgentEntry> agents;
  std::vector<BenchmarkSource> benchmarks;
  std::vector<double> temperatures{0.2, 0.5, 0.8};
  int runs = 3;
  int parallelism = 4;
  std::filesystem::path output_dir = "out";
  std::uint64_t rng_seed = 0;
  ToolSettings tools;
  std::optional<std::filesystem::path> templates_dir;

  static ExperimentPlan from_json(const json& j, const std::filesystem::path& base_dir = {});
  json to_json() const;

  // Throws ConfigError, including for (strategy, benchmark) pairs outside the matrix.
  void validate() const;

  // Benchmarks an entry runs on.
  std::vector<Benchmark> targets(const StrategyEntry& entry) const;
  std::vector<Benchmark> targets(const AgentEntry& entry) const;
};

// Reads and validates a plan file. HARNESS_BACKEND_URL overrides backend.base_url.
ExperimentPlan load_plan(const std::filesystem::path& path);

std::string format_temperature(double t);

// "{benchmark}/{method}/t{temperature}/r{run}"
std::string cell_key(Benchmark benchmark, std::string_view method, double temperature, int run);

std::uint64_t query_seed(std::uint64_t rng_seed, Benchmark benchmark, std::string_view query_id,
                         std::string_view method, double temperature, int run);

struct RunFilter {
  std::optional<std::string> method;
  std::optional<Benchmark> benchmark;
};

// Parses "strategy=cp,benchmark=triviaqa". Throws ConfigError.
RunFilter parse_filter(std::string_view text);

struct RunOptions {
  bool force = false;
  RunFilter only;
  std::optional<std::size_t> limit;
  std::optional<int> parallelism;
  // Stop (as if killed) once this many new results have been persisted.
  std::optional<std::size_t> stop_after;
  // Overrides the transport of HTTP backends and live tool clients.
  std::optional<net::HttpTransport> transport;
  std::function<void(const std::string&)> log;
  bool write_report = true;
};

struct RunSummary {
  std::size_t executed = 0;
  std::size_t skipped = 0;  // already persisted
  std::map<std::string, std::string> failed_cells;  // cell key -> error
  bool interrupted = false;
};

RunSummary run_plan(const ExperimentPlan& plan, const RunOptions& options = {});

// Regenerates report.csv, report.json and plots/*.tsv from the persisted
// results.jsonl and traces.jsonl. Throws MissingResults.
void write_report(const std::filesystem::path& output_dir);

struct ReportRow {
  Benchmark benchmark = Benchmark::gsm8k;
  double temperature = 0;
  std::string method;
  bool agent = false;
  std::size_t runs = 0;
  RunAggregate mean;
  std::vector<RunAggregate> per_run;
};

// Rows in report order, built from persisted results. Throws MissingResults.
std::vector<ReportRow> build_report_rows(const std::filesystem::path& output_dir);

std::string format_report_csv(const std::vector<ReportRow>& rows);

}  // namespace hallu
