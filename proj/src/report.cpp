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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "hallu/error.hpp"
#include "hallu/runner.hpp"

namespace hallu {

namespace fs = std::filesystem;

namespace {

struct Record {
  Benchmark benchmark;
  double temperature;
  std::string method;
  bool agent;
  int run;
  std::string query_id;
  std::string key;
  std::optional<std::string> subject;
  Grade grade;
  int prompt_count;
  std::vector<bool> sample_correct;
};

int method_rank(const std::string& method) {
  int i = 0;
  for (auto s : all_strategies()) {
    if (to_string(s) == method) return i;
    ++i;
  }
  for (auto a : {AgentArchitecture::chain, AgentArchitecture::react, AgentArchitecture::react_ddg}) {
    if (to_string(a) == method) return i;
    ++i;
  }
  return i;
}

using RowKey = std::tuple<Benchmark, double, int, std::string>;  // benchmark, temperature, rank, method

RowKey row_key(const Record& r) { return {r.benchmark, r.temperature, method_rank(r.method), r.method}; }

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    try {
      auto j = json::parse(line);
      if (j.is_object()) out.push_back(std::move(j));
    } catch (const json::exception&) {
    }
  }
  return out;
}

std::vector<Record> load_records(const fs::path& dir) {
  const fs::path path = dir / "results.jsonl";
  if (!fs::exists(path)) throw MissingResults("no results.jsonl in " + dir.string());
  std::vector<Record> records;
  std::set<std::string> seen;
  for (const auto& j : read_jsonl(path)) {
    try {
      Record r;
      r.key = j.at("key").get<std::string>();
      if (!seen.insert(r.key).second) continue;
      r.benchmark = benchmark_from_string(j.at("benchmark").get<std::string>());
      r.temperature = j.at("temperature").get<double>();
      r.method = j.at("method").get<std::string>();
      r.agent = j.value("kind", "strategy") == "agent";
      r.run = j.at("run").get<int>();
      r.query_id = j.at("query_id").get<std::string>();
      if (j.contains("subject")) r.subject = j["subject"].get<std::string>();
      r.grade = grade_from_string(j.at("grade").get<std::string>());
      r.prompt_count = j.at("prompt_count").get<int>();
      r.sample_correct = j.value("sample_correct", std::vector<bool>{});
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError("results.jsonl: bad record: " + std::string(e.what()));
    }
  }
  if (records.empty()) throw MissingResults("results.jsonl in " + dir.string() + " holds no results");
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    return std::tie(a.benchmark, a.temperature, a.method, a.run, a.query_id) <
           std::tie(b.benchmark, b.temperature, b.method, b.run, b.query_id);
  });
  return records;
}

double round_to(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(v * scale) / scale;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

json aggregate_json(const RunAggregate& a) {
  return {{"cost", round_to(a.avg_cost, 4)},         {"total", round_to(a.total, 4)},
          {"graded", round_to(a.graded, 4)},         {"hallucinated", round_to(a.hallucinated, 4)},
          {"correct", round_to(a.correct, 4)},       {"abstained", round_to(a.abstained, 4)},
          {"invalid", round_to(a.invalid, 4)},       {"accuracy", round_to(a.accuracy, 4)}};
}

json row_json(const ReportRow& row) {
  json j = {{"benchmark", to_string(row.benchmark)},
            {"temperature", row.temperature},
            {"strategy", row.method},
            {"kind", row.agent ? "agent" : "strategy"},
            {"runs", row.runs}};
  j.update(aggregate_json(row.mean));
  json per_run = json::array();
  for (const auto& r : row.per_run) per_run.push_back(aggregate_json(r));
  j["per_run"] = per_run;
  return j;
}

}  // namespace

std::vector<ReportRow> build_report_rows(const fs::path& output_dir) {
  auto records = load_records(output_dir);
  std::map<RowKey, std::map<int, std::vector<const Record*>>> grouped;
  for (const auto& r : records) grouped[row_key(r)][r.run].push_back(&r);

  std::vector<ReportRow> rows;
  for (const auto& [key, runs] : grouped) {
    ReportRow row;
    row.benchmark = std::get<0>(key);
    row.temperature = std::get<1>(key);
    row.method = std::get<3>(key);
    row.agent = runs.begin()->second.front()->agent;
    for (const auto& [run, recs] : runs) {
      std::vector<Grade> grades;
      std::vector<int> costs;
      for (const auto* r : recs) {
        grades.push_back(r->grade);
        costs.push_back(r->prompt_count);
      }
      RunAggregate agg = aggregate(grades, costs);
      if (!accounting_holds(agg)) {
        throw Error("accounting identity violated in " + cell_key(row.benchmark, row.method, row.temperature, run));
      }
      double cost_sum = 0;
      for (int c : costs) cost_sum += c;
      if (std::abs(agg.avg_cost * static_cast<double>(costs.size()) - cost_sum) > 1e-6) {
        throw Error("cost column does not match persisted prompt counts");
      }
      row.per_run.push_back(agg);
    }
    row.runs = row.per_run.size();
    row.mean = average_runs(row.per_run);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_report_csv(const std::vector<ReportRow>& rows) {
  std::string csv = "Benchmark,Temperature,Strategy,Cost,Total,Graded,Hallucinated,Correct,Abstained,Invalid,Accuracy\n";
  for (const auto& row : rows) {
    const auto& m = row.mean;
    csv += std::string(to_string(row.benchmark)) + "," + format_temperature(row.temperature) + "," + row.method + "," +
           fixed2(m.avg_cost) + "," + fixed2(m.total) + "," + fixed2(m.graded) + "," + fixed2(m.hallucinated) + "," +
           fixed2(m.correct) + "," + fixed2(m.abstained) + "," + fixed2(m.invalid) + "," + fixed2(m.accuracy) + "\n";
  }
  return csv;
}

void write_report(const fs::path& output_dir) {
  const auto rows = build_report_rows(output_dir);
  const auto records = load_records(output_dir);

  // Pooled per-row extras: sample ledgers, subject grades, tool usage.
  std::map<RowKey, SampleLedger> ledgers;
  std::map<RowKey, std::vector<std::pair<std::string, Grade>>> subjects;
  for (const auto& r : records) {
    if (!r.sample_correct.empty()) ledgers[row_key(r)].push_back(r.sample_correct);
    if (r.subject) subjects[row_key(r)].emplace_back(*r.subject, r.grade);
  }

  std::set<std::string> keys;
  for (const auto& r : records) keys.insert(r.key);
  std::map<RowKey, std::vector<std::pair<Benchmark, AgentTrace>>> traces;
  std::map<std::pair<Benchmark, std::string>, std::vector<std::pair<Benchmark, AgentTrace>>> traces_by_method;
  std::set<std::string> seen_traces;
  const fs::path traces_path = output_dir / "traces.jsonl";
  if (fs::exists(traces_path)) {
    for (const auto& j : read_jsonl(traces_path)) {
      std::string key = j.value("key", "");
      if (!keys.contains(key) || !seen_traces.insert(key).second) continue;
      Benchmark b = benchmark_from_string(j.at("benchmark").get<std::string>());
      AgentTrace trace = agent_trace_from_json(j);
      std::string method(to_string(trace.architecture));
      traces[{b, j.at("temperature").get<double>(), method_rank(method), method}].emplace_back(b, trace);
      traces_by_method[{b, method}].emplace_back(b, std::move(trace));
    }
  }

  json report_rows = json::array();
  json compat = json::array();
  std::string histogram_tsv = "benchmark\ttemperature\tstrategy\tcorrect_samples\tqueries\n";
  std::string top_n_tsv = "benchmark\ttemperature\tstrategy\tn\taccuracy\n";
  std::string subject_tsv = "temperature\tstrategy\tsubject\taccuracy\n";
  for (const auto& row : rows) {
    const RowKey key{row.benchmark, row.temperature, method_rank(row.method), row.method};
    json j = row_json(row);
    const std::string prefix =
        std::string(to_string(row.benchmark)) + "\t" + format_temperature(row.temperature) + "\t" + row.method + "\t";
    if (auto it = ledgers.find(key); it != ledgers.end()) {
      const std::size_t width = it->second.front().size();
      auto top_n = top_n_accuracy(it->second);
      auto hist = occurrence_histogram(it->second, width);
      json top_json = json::array();
      for (std::size_t n = 0; n < top_n.size(); ++n) {
        top_json.push_back(round_to(top_n[n], 4));
        top_n_tsv += prefix + std::to_string(n + 1) + "\t" + fixed2(top_n[n]) + "\n";
      }
      for (std::size_t k = 0; k < hist.size(); ++k) histogram_tsv += prefix + std::to_string(k) + "\t" + std::to_string(hist[k]) + "\n";
      j["top_n"] = top_json;
      j["histogram"] = hist;
    }
    if (auto it = subjects.find(key); it != subjects.end()) {
      json per = json::object();
      for (const auto& [subject, acc] : per_subject(it->second)) {
        per[subject] = round_to(acc, 4);
        subject_tsv += format_temperature(row.temperature) + "\t" + row.method + "\t" + subject + "\t" + fixed2(acc) + "\n";
      }
      j["per_subject"] = per;
    }
    if (auto it = traces.find(key); it != traces.end()) {
      json stats = json::object();
      for (const auto& [bt, tally] : tool_usage(it->second)) {
        stats[bt.second] = {{"successful", tally.successful}, {"unsuccessful", tally.unsuccessful}};
      }
      j["tool_stats"] = stats;
    }
    report_rows.push_back(j);

    if (row.benchmark == Benchmark::gsm8k) {
      ReportRow folded = row;
      for (auto& r : folded.per_run) r = invalid_as_hallucinated(r);
      folded.mean = average_runs(folded.per_run);
      compat.push_back(row_json(folded));
    }
  }

  std::string tool_tsv = "benchmark\tmethod\ttool\tsuccessful\tunsuccessful\n";
  json tool_json = json::array();
  for (const auto& [bm, list] : traces_by_method) {
    for (const auto& [bt, tally] : tool_usage(list)) {
      tool_tsv += bt.first + "\t" + bm.second + "\t" + bt.second + "\t" + std::to_string(tally.successful) + "\t" +
                  std::to_string(tally.unsuccessful) + "\n";
      tool_json.push_back({{"benchmark", bt.first},
                           {"method", bm.second},
                           {"tool", bt.second},
                           {"successful", tally.successful},
                           {"unsuccessful", tally.unsuccessful}});
    }
  }

  json report = {{"rows", report_rows}, {"gsm8k_invalid_as_hallucinated", compat}, {"tool_usage", tool_json}};
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("cannot write " + p.string());
  };
  write(output_dir / "report.csv", format_report_csv(rows));
  write(output_dir / "report.json", report.dump(2) + "\n");
  fs::create_directories(output_dir / "plots");
  write(output_dir / "plots" / "histogram.tsv", histogram_tsv);
  write(output_dir / "plots" / "top_n.tsv", top_n_tsv);
  write(output_dir / "plots" / "subject_accuracy.tsv", subject_tsv);
  write(output_dir / "plots" / "tool_usage.tsv", tool_tsv);
}

}  // namespace hallu
