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

#include <atomic>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hallu/error.hpp"
#include "hallu/net.hpp"
#include "hallu/runner.hpp"
#include "support.hpp"

using namespace hallu;
namespace fs = std::filesystem;

namespace {

json small_plan(const fs::path& out) {
  return {{"backend", {{"kind", "mock"}}},
          {"mock", "mock_script.json"},
          {"benchmarks",
           {{{"benchmark", "gsm8k"}, {"path", "gsm8k.jsonl"}, {"limit", 3}},
            {{"benchmark", "triviaqa"}, {"path", "triviaqa.json"}, {"limit", 3}}}},
          {"strategies", {"control", "sc"}},
          {"temperatures", {0.2, 0.8}},
          {"runs", 2},
          {"parallelism", 3},
          {"rng_seed", 11},
          {"output_dir", out.string()},
          {"tools", {{"mode", "fixture"}, {"fixtures", "tools.json"}}}};
}

ExperimentPlan plan_from(const json& j) { return ExperimentPlan::from_json(j, test::toy_dir()); }

std::vector<std::string> report_files() {
  return {"report.csv", "report.json", "plots/histogram.tsv", "plots/top_n.tsv", "plots/subject_accuracy.tsv",
          "plots/tool_usage.tsv"};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  return out;
}

}  // namespace

TEST_SUITE("runner") {
  TEST_CASE("the toy plan validates") {
    auto plan = load_plan(test::toy_dir() / "plan.json");
    CHECK(plan.runs == 3);
    CHECK(plan.temperatures == std::vector<double>{0.2, 0.5, 0.8});
    CHECK(plan.strategies.size() == 12);
    CHECK(plan.agents.size() == 3);
    CHECK(plan.mock.has_value());
    CHECK(plan.benchmarks[2].path == test::toy_dir() / "mmlu");
  }

  TEST_CASE("illegal plans are rejected before execution") {
    test::TempDir dir;
    auto base = small_plan(dir.path() / "out");

    auto j = base;
    j["strategies"] = {{{"name", "cove2"}, {"benchmarks", {"gsm8k"}}}};
    CHECK_THROWS_AS(plan_from(j).validate(), ConfigError);

    j = base;
    j["strategies"] = {"cove2"};
    CHECK_THROWS_AS(plan_from(j).validate(), ConfigError);

    j = base;
    j["strategies"] = json::array();
    j["agents"] = {"react_ddg"};
    CHECK_THROWS_AS(plan_from(j).validate(), ConfigError);

    for (auto [key, value] : {std::pair{"runs", json(0)}, std::pair{"parallelism", json(0)},
                              std::pair{"temperatures", json::array()}, std::pair{"temperatures", json({3.0})}}) {
      j = base;
      j[key] = value;
      CAPTURE(key);
      CHECK_THROWS_AS(plan_from(j).validate(), ConfigError);
    }

    j = base;
    j.erase("mock");
    CHECK_THROWS_AS(plan_from(j).validate(), ConfigError);
    j = base;
    j["benchmarks"].push_back(j["benchmarks"][0]);
    CHECK_THROWS_AS(plan_from(j).validate(), ConfigError);
    j = base;
    j["strategies"] = {"control", "control"};
    CHECK_THROWS_AS(plan_from(j).validate(), ConfigError);
    j = base;
    j["strategies"] = {{{"name", "kgr"}, {"benchmarks", {"mmlu"}}}};
    CHECK_THROWS_AS(plan_from(j).validate(), ConfigError);

    CHECK_NOTHROW(plan_from(base).validate());
    CHECK_THROWS_AS(run_plan(plan_from(j)), ConfigError);
    CHECK_FALSE(fs::exists(dir.path() / "out"));
  }

  TEST_CASE("plan json round trip") {
    test::TempDir dir;
    auto plan = plan_from(small_plan(dir.path() / "out"));
    auto again = ExperimentPlan::from_json(plan.to_json());
    CHECK(again.to_json() == plan.to_json());
  }

  TEST_CASE("filters, keys and seeds") {
    auto f = parse_filter("strategy=cp,benchmark=triviaqa");
    CHECK(f.method == "cp");
    CHECK(f.benchmark == Benchmark::triviaqa);
    CHECK_THROWS_AS(parse_filter("colour=red"), ConfigError);
    CHECK_THROWS_AS(parse_filter("strategy"), ConfigError);

    CHECK(cell_key(Benchmark::gsm8k, "control", 0.2, 0) == "gsm8k/control/t0.2/r0");
    auto s = query_seed(1, Benchmark::gsm8k, "gsm8k-0", "sc", 0.5, 0);
    CHECK(s == query_seed(1, Benchmark::gsm8k, "gsm8k-0", "sc", 0.5, 0));
    CHECK(s != query_seed(1, Benchmark::gsm8k, "gsm8k-0", "sc", 0.5, 1));
    CHECK(s != query_seed(1, Benchmark::gsm8k, "gsm8k-0", "cp", 0.5, 0));
    CHECK(s != query_seed(1, Benchmark::gsm8k, "gsm8k-1", "sc", 0.5, 0));
    CHECK(s != query_seed(1, Benchmark::gsm8k, "gsm8k-0", "sc", 0.8, 0));
    CHECK(s != query_seed(2, Benchmark::gsm8k, "gsm8k-0", "sc", 0.5, 0));
  }

  TEST_CASE("a small grid runs and reports") {
    test::TempDir dir;
    auto plan = plan_from(small_plan(dir.path() / "out"));
    auto summary = run_plan(plan);
    CHECK(summary.executed == 2 * 2 * 2 * 2 * 3);
    CHECK(summary.failed_cells.empty());
    CHECK_FALSE(summary.interrupted);

    auto csv = lines_of(test::read_file(dir.path() / "out" / "report.csv"));
    REQUIRE(csv.size() == 1 + 2 * 2 * 2);
    auto header = split(csv[0]);
    for (const char* col : {"Strategy", "Cost", "Graded", "Hallucinated", "Correct", "Accuracy"}) {
      CHECK(std::find(header.begin(), header.end(), col) != header.end());
    }
    for (const char* f : {"results.jsonl", "transcripts.jsonl", "state.json", "report.json", "plots/top_n.tsv"}) {
      CHECK(fs::exists(dir.path() / "out" / f));
    }

    std::map<std::string, std::pair<double, int>> cost;  // (benchmark,method,temp) -> sum,count
    for (const auto& line : lines_of(test::read_file(dir.path() / "out" / "results.jsonl"))) {
      auto r = json::parse(line);
      std::string k = r["benchmark"].get<std::string>() + "," + format_temperature(r["temperature"].get<double>()) +
                      "," + r["method"].get<std::string>();
      cost[k].first += r["prompt_count"].get<int>();
      cost[k].second += 1;
    }
    auto col = [&](const char* name) {
      return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    for (std::size_t i = 1; i < csv.size(); ++i) {
      auto f = split(csv[i]);
      std::string k = f[col("Benchmark")] + "," + f[col("Temperature")] + "," + f[col("Strategy")];
      REQUIRE(cost.contains(k));
      CHECK(std::stod(f[col("Cost")]) == doctest::Approx(cost[k].first / cost[k].second).epsilon(0.005));
      CHECK(std::stod(f[col("Graded")]) + std::stod(f[col("Abstained")]) + std::stod(f[col("Invalid")]) ==
            doctest::Approx(std::stod(f[col("Total")])));
    }

    auto state = json::parse(test::read_file(dir.path() / "out" / "state.json"));
    CHECK(state["completed_cells"].size() == 2 * 2 * 2 * 2);

    auto rerun = run_plan(plan);
    CHECK(rerun.executed == 0);
    CHECK(rerun.skipped == 48);
  }

  TEST_CASE("reports are a pure function of persisted results") {
    test::TempDir dir;
    auto out = dir.path() / "out";
    CHECK_THROWS_AS(write_report(dir.path()), MissingResults);
    CHECK_THROWS_AS(build_report_rows(dir.path()), MissingResults);
    run_plan(plan_from(small_plan(out)));
    std::map<std::string, std::string> before;
    for (const auto& f : report_files()) before[f] = test::read_file(out / f);
    fs::remove(out / "report.csv");
    write_report(out);
    for (const auto& f : report_files()) CHECK(test::read_file(out / f) == before[f]);
  }

  TEST_CASE("interrupted runs resume to the same report") {
    test::TempDir dir;
    auto clean_out = dir.path() / "clean";
    auto resumed_out = dir.path() / "resumed";
    run_plan(plan_from(small_plan(clean_out)));

    auto plan = plan_from(small_plan(resumed_out));
    RunOptions stop;
    stop.stop_after = 10;
    auto first = run_plan(plan, stop);
    CHECK(first.interrupted);
    CHECK_FALSE(fs::exists(resumed_out / "report.csv"));
    {
      std::ofstream torn(resumed_out / "results.jsonl", std::ios::app);
      torn << "{\"key\": \"gsm8k/control/t0.2/r0/gsm8k-2\", \"outc";
    }
    auto second = run_plan(plan);
    CHECK_FALSE(second.interrupted);
    CHECK(second.skipped >= 10);
    CHECK(first.executed + second.executed == 48);
    for (const auto& f : report_files()) {
      CAPTURE(f);
      CHECK(test::read_file(resumed_out / f) == test::read_file(clean_out / f));
    }
  }

  TEST_CASE("a different plan in the same directory needs force") {
    test::TempDir dir;
    auto j = small_plan(dir.path() / "out");
    run_plan(plan_from(j));
    j["rng_seed"] = 12;
    CHECK_THROWS_AS(run_plan(plan_from(j)), ConfigError);
    RunOptions force;
    force.force = true;
    CHECK(run_plan(plan_from(j), force).executed == 48);
  }

  TEST_CASE("filters and limits narrow the grid") {
    test::TempDir dir;
    RunOptions only;
    only.only = parse_filter("strategy=sc,benchmark=triviaqa");
    only.limit = 2;
    auto s = run_plan(plan_from(small_plan(dir.path() / "out")), only);
    CHECK(s.executed == 2 * 2 * 2);
    auto csv = lines_of(test::read_file(dir.path() / "out" / "report.csv"));
    CHECK(csv.size() == 1 + 2);
  }

  TEST_CASE("a failing backend fails only the affected cells") {
    test::TempDir dir;
    auto j = small_plan(dir.path() / "out");
    j["backend"] = {{"kind", "openai_http"}, {"base_url", "http://llm.test"}, {"max_retries", 1}, {"retry_backoff_ms", 0}};
    j.erase("mock");
    std::atomic<int> requests{0};
    RunOptions options;
    options.transport = [&](const net::HttpRequest& req) {
      ++requests;
      net::HttpResponse r;
      if (req.body.find("grade school") != std::string::npos) {
        r.status = 503;
        r.body = "busy";
        return r;
      }
      r.status = 200;
      r.body = json({{"choices", {{{"message", {{"role", "assistant"}, {"content", "FINAL ANSWER: Paris"}}},
                                   {"finish_reason", "stop"}}}}})
                   .dump();
      return r;
    };
    auto s = run_plan(plan_from(j), options);
    CHECK(s.failed_cells.size() == 2 * 2 * 2);
    for (const auto& [cell, error] : s.failed_cells) {
      CHECK(cell.rfind("gsm8k/", 0) == 0);
      CHECK(error.find("attempts") != std::string::npos);
    }
    CHECK(s.executed == 2 * 2 * 2 * 3);
    auto csv = lines_of(test::read_file(dir.path() / "out" / "report.csv"));
    CHECK(csv.size() == 1 + 2 * 2);
    auto state = json::parse(test::read_file(dir.path() / "out" / "state.json"));
    CHECK(state["failed_cells"].size() == 8);
    CHECK(requests > 0);
  }

  TEST_CASE("mock runs with agents never touch the network") {
    test::TempDir dir;
    auto j = small_plan(dir.path() / "out");
    j["benchmarks"] = {{{"benchmark", "triviaqa"}, {"path", "triviaqa.json"}, {"limit", 2}}};
    j["strategies"] = {"ddga", "kgr"};
    j["agents"] = {"chain", "react", "react_ddg"};
    j["temperatures"] = {0.5};
    j["runs"] = 1;
    net::NetworkDenyGuard deny;
    auto before = net::network_attempts();
    auto s = run_plan(plan_from(j));
    CHECK(s.failed_cells.empty());
    CHECK(s.executed == 5 * 2);
    CHECK(net::network_attempts() == before);
    auto report = json::parse(test::read_file(dir.path() / "out" / "report.json"));
    CHECK(report["rows"].size() == 5);
  }
}
