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

#include "hallu/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "hallu/error.hpp"
#include "hallu/hashing.hpp"
#include "hallu/transcript.hpp"
#include "hallu/wire.hpp"

namespace hallu {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

std::vector<Benchmark> benchmark_list(const json& j) {
  std::vector<Benchmark> out;
  for (const auto& b : j) out.push_back(benchmark_from_string(b.get<std::string>()));
  return out;
}

json benchmark_list_json(const std::vector<Benchmark>& list) {
  json out = json::array();
  for (auto b : list) out.push_back(to_string(b));
  return out;
}

StrategyEntry strategy_entry_from_json(const json& j) {
  StrategyEntry e;
  if (j.is_string()) {
    e.config.name = strategy_from_string(j.get<std::string>());
    return e;
  }
  e.config.name = strategy_from_string(j.at("name").get<std::string>());
  e.config.sample_count = j.value("sample_count", e.config.sample_count);
  e.config.max_debate_rounds = j.value("max_debate_rounds", e.config.max_debate_rounds);
  e.config.debater_count = j.value("debater_count", e.config.debater_count);
  e.config.tolerance = j.value("tolerance", e.config.tolerance);
  if (j.contains("benchmarks")) e.benchmarks = benchmark_list(j["benchmarks"]);
  return e;
}

AgentEntry agent_entry_from_json(const json& j) {
  AgentEntry e;
  std::string arch = j.is_string() ? j.get<std::string>() : j.at("architecture").get<std::string>();
  e.config = AgentConfig::defaults(agent_architecture_from_string(arch));
  if (j.is_object()) {
    if (j.contains("tools")) e.config.tool_names = j["tools"].get<std::vector<std::string>>();
    e.config.max_steps = j.value("max_steps", e.config.max_steps);
    e.config.tolerance = j.value("tolerance", e.config.tolerance);
    if (j.contains("benchmarks")) e.benchmarks = benchmark_list(j["benchmarks"]);
  }
  return e;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

// Keeps complete, parseable lines (dropping a line torn by an interrupted
// write) and, when `keep` is given, only those whose key it accepts.
std::vector<json> repair_jsonl(const fs::path& path, const std::function<bool(const json&)>& keep = nullptr) {
  std::vector<json> records;
  if (!fs::exists(path)) return records;
  bool dropped = false;
  std::string rewritten;
  for (const auto& line : read_lines(path)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      dropped = true;
      continue;
    }
    if (!j.is_object() || (keep && !keep(j))) {
      dropped = true;
      continue;
    }
    rewritten += line + "\n";
    records.push_back(std::move(j));
  }
  if (dropped) write_text(path, rewritten);
  return records;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string plan_hash(const ExperimentPlan& plan) {
  json j = plan.to_json();
  j.erase("parallelism");
  return hex(stable_hash(j.dump()));
}

struct Task {
  Benchmark benchmark;
  const BenchmarkItem* item;
  const StrategyEntry* strategy = nullptr;
  const AgentEntry* agent = nullptr;
  double temperature;
  int run;
  std::string method;
  std::string cell;
  std::string key;
};

}  // namespace

// ---------------------------------------------------------------------------

std::string format_temperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

std::string cell_key(Benchmark benchmark, std::string_view method, double temperature, int run) {
  return std::string(to_string(benchmark)) + "/" + std::string(method) + "/t" + format_temperature(temperature) +
         "/r" + std::to_string(run);
}

std::uint64_t query_seed(std::uint64_t rng_seed, Benchmark benchmark, std::string_view query_id,
                         std::string_view method, double temperature, int run) {
  std::uint64_t h = hash_combine(rng_seed, to_string(benchmark));
  h = hash_combine(h, query_id);
  h = hash_combine(h, method);
  h = hash_combine(h, format_temperature(temperature));
  return hash_combine(h, static_cast<std::uint64_t>(run));
}

RunFilter parse_filter(std::string_view text) {
  RunFilter filter;
  std::stringstream ss{std::string(text)};
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("--only expects key=value pairs, got '" + part + "'");
    std::string key = part.substr(0, eq);
    std::string value = part.substr(eq + 1);
    if (key == "strategy" || key == "method" || key == "agent") {
      filter.method = value;
    } else if (key == "benchmark") {
      filter.benchmark = benchmark_from_string(value);
    } else {
      throw ConfigError("unknown --only key '" + key + "'");
    }
  }
  return filter;
}

ExperimentPlan ExperimentPlan::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("plan must be a JSON object");
  ExperimentPlan plan;
  try {
    if (j.contains("backend")) {
      const auto& b = j["backend"];
      plan.backend.kind = backend_kind_from_string(b.value("kind", "mock"));
      plan.backend.base_url = b.value("base_url", "");
      plan.backend.model_name = b.value("model", plan.backend.model_name);
      plan.backend.timeout = std::chrono::milliseconds(b.value("timeout_ms", plan.backend.timeout.count()));
      plan.backend.max_retries = b.value("max_retries", plan.backend.max_retries);
      plan.backend.retry_backoff =
          std::chrono::milliseconds(b.value("retry_backoff_ms", plan.backend.retry_backoff.count()));
    }
    if (j.contains("mock")) {
      if (j["mock"].is_string()) {
        auto path = resolve(base_dir, j["mock"].get<std::string>());
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open mock script " + path.string());
        plan.mock = MockScript::from_json(json::parse(in));
      } else {
        plan.mock = MockScript::from_json(j["mock"]);
      }
    }
    for (const auto& s : j.value("strategies", json::array())) plan.strategies.push_back(strategy_entry_from_json(s));
    for (const auto& a : j.value("agents", json::array())) plan.agents.push_back(agent_entry_from_json(a));
    for (const auto& b : j.value("benchmarks", json::array())) {
      BenchmarkSource src;
      src.benchmark = benchmark_from_string(b.at("benchmark").get<std::string>());
      src.path = resolve(base_dir, b.at("path").get<std::string>());
      if (b.contains("limit") && !b["limit"].is_null()) src.limit = b["limit"].get<std::size_t>();
      plan.benchmarks.push_back(std::move(src));
    }
    if (j.contains("temperatures")) plan.temperatures = j["temperatures"].get<std::vector<double>>();
    plan.runs = j.value("runs", plan.runs);
    plan.parallelism = j.value("parallelism", plan.parallelism);
    plan.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    plan.rng_seed = j.value("rng_seed", plan.rng_seed);
    if (j.contains("tools")) {
      const auto& t = j["tools"];
      std::string mode = t.value("mode", "fixture");
      if (mode != "fixture" && mode != "live") throw ConfigError("tools.mode must be fixture or live");
      plan.tools.live = mode == "live";
      if (t.contains("fixtures")) plan.tools.fixtures = resolve(base_dir, t["fixtures"].get<std::string>());
      plan.tools.client.user_agent = t.value("user_agent", plan.tools.client.user_agent);
      plan.tools.client.timeout = std::chrono::milliseconds(t.value("timeout_ms", plan.tools.client.timeout.count()));
      if (t.contains("sandbox")) {
        const auto& s = t["sandbox"];
        plan.tools.sandbox.interpreter = s.value("interpreter", plan.tools.sandbox.interpreter);
        plan.tools.sandbox.wall_clock =
            std::chrono::milliseconds(s.value("wall_clock_ms", plan.tools.sandbox.wall_clock.count()));
        plan.tools.sandbox.memory_limit_bytes =
            s.value("memory_mb", plan.tools.sandbox.memory_limit_bytes >> 20) << 20;
        plan.tools.sandbox.max_concurrent = s.value("max_concurrent", plan.tools.sandbox.max_concurrent);
      }
    }
    if (j.contains("templates_dir")) plan.templates_dir = resolve(base_dir, j["templates_dir"].get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  for (auto& s : plan.strategies) s.config.temperature = plan.temperatures.empty() ? 0.0 : plan.temperatures.front();
  return plan;
}

json ExperimentPlan::to_json() const {
  json strategies_json = json::array();
  for (const auto& s : strategies) {
    strategies_json.push_back({{"name", to_string(s.config.name)},
                               {"sample_count", s.config.sample_count},
                               {"max_debate_rounds", s.config.max_debate_rounds},
                               {"debater_count", s.config.debater_count},
                               {"tolerance", s.config.tolerance},
                               {"benchmarks", benchmark_list_json(targets(s))}});
  }
  json agents_json = json::array();
  for (const auto& a : agents) {
    agents_json.push_back({{"architecture", to_string(a.config.architecture)},
                           {"tools", a.config.tool_names},
                           {"max_steps", a.config.max_steps},
                           {"tolerance", a.config.tolerance},
                           {"benchmarks", benchmark_list_json(targets(a))}});
  }
  json benchmarks_json = json::array();
  for (const auto& b : benchmarks) {
    json entry = {{"benchmark", to_string(b.benchmark)}, {"path", b.path.string()}};
    if (b.limit) entry["limit"] = *b.limit;
    benchmarks_json.push_back(entry);
  }
  json j = {{"backend",
             {{"kind", to_string(backend.kind)},
              {"base_url", backend.base_url},
              {"model", backend.model_name},
              {"timeout_ms", backend.timeout.count()},
              {"max_retries", backend.max_retries},
              {"retry_backoff_ms", backend.retry_backoff.count()}}},
            {"strategies", strategies_json},
            {"agents", agents_json},
            {"benchmarks", benchmarks_json},
            {"temperatures", temperatures},
            {"runs", runs},
            {"parallelism", parallelism},
            {"output_dir", output_dir.string()},
            {"rng_seed", rng_seed},
            {"tools",
             {{"mode", tools.live ? "live" : "fixture"},
              {"user_agent", tools.client.user_agent},
              {"timeout_ms", tools.client.timeout.count()},
              {"sandbox",
               {{"interpreter", tools.sandbox.interpreter},
                {"wall_clock_ms", tools.sandbox.wall_clock.count()},
                {"memory_mb", tools.sandbox.memory_limit_bytes >> 20},
                {"max_concurrent", tools.sandbox.max_concurrent}}}}}};
  if (tools.fixtures) j["tools"]["fixtures"] = tools.fixtures->string();
  if (mock) j["mock"] = mock->to_json();
  if (templates_dir) j["templates_dir"] = templates_dir->string();
  return j;
}

std::vector<Benchmark> ExperimentPlan::targets(const StrategyEntry& entry) const {
  if (!entry.benchmarks.empty()) return entry.benchmarks;
  std::vector<Benchmark> out;
  for (const auto& b : benchmarks) {
    if (std::find(out.begin(), out.end(), b.benchmark) == out.end()) out.push_back(b.benchmark);
  }
  return out;
}

std::vector<Benchmark> ExperimentPlan::targets(const AgentEntry& entry) const {
  if (!entry.benchmarks.empty()) return entry.benchmarks;
  std::vector<Benchmark> out;
  for (const auto& b : benchmarks) {
    if (std::find(out.begin(), out.end(), b.benchmark) == out.end()) out.push_back(b.benchmark);
  }
  return out;
}

void ExperimentPlan::validate() const {
  backend.validate();
  if (backend.kind == BackendKind::mock) {
    if (!mock) throw ConfigError("mock backend requires a mock script");
    mock->validate();
  }
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (temperatures.empty()) throw ConfigError("at least one temperature is required");
  for (double t : temperatures) {
    if (!(t >= 0.0 && t <= 2.0)) throw ConfigError("temperature outside [0, 2]: " + format_temperature(t));
  }
  if (benchmarks.empty()) throw ConfigError("plan lists no benchmarks");
  if (strategies.empty() && agents.empty()) throw ConfigError("plan lists no strategies or agents");
  std::set<Benchmark> sources;
  for (const auto& b : benchmarks) {
    if (!sources.insert(b.benchmark).second) throw ConfigError("benchmark listed twice: " + std::string(to_string(b.benchmark)));
  }
  auto check_source = [&](Benchmark b, std::string_view who) {
    if (!sources.contains(b)) {
      throw ConfigError(std::string(who) + " targets " + std::string(to_string(b)) + ", which the plan does not load");
    }
  };
  std::set<std::string> methods;
  for (const auto& s : strategies) {
    StrategyConfig cfg = s.config;
    cfg.temperature = temperatures.front();
    cfg.validate();
    if (!methods.insert(std::string(to_string(cfg.name))).second) {
      throw ConfigError("strategy listed twice: " + std::string(to_string(cfg.name)));
    }
    for (auto b : targets(s)) {
      check_source(b, to_string(cfg.name));
      if (!is_applicable(cfg.name, b)) {
        throw ConfigError("strategy " + std::string(to_string(cfg.name)) + " is not evaluated on " +
                          std::string(to_string(b)));
      }
    }
  }
  for (const auto& a : agents) {
    a.config.validate();
    if (!methods.insert(std::string(to_string(a.config.architecture))).second) {
      throw ConfigError("agent listed twice: " + std::string(to_string(a.config.architecture)));
    }
    for (auto b : targets(a)) {
      check_source(b, to_string(a.config.architecture));
      if (a.config.architecture == AgentArchitecture::react_ddg && b != Benchmark::triviaqa) {
        throw ConfigError("react_ddg is evaluated on triviaqa only");
      }
    }
  }
}

ExperimentPlan load_plan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("plan " + path.string() + ": " + e.what());
  }
  ExperimentPlan plan = ExperimentPlan::from_json(j, fs::absolute(path).parent_path());
  if (const char* url = std::getenv("HARNESS_BACKEND_URL"); url && *url && plan.backend.kind != BackendKind::mock) {
    plan.backend.base_url = url;
  }
  plan.validate();
  return plan;
}

// ---------------------------------------------------------------------------

RunSummary run_plan(const ExperimentPlan& plan, const RunOptions& options) {
  plan.validate();
  auto log = [&](const std::string& line) {
    if (options.log) options.log(line);
  };
  const fs::path out = plan.output_dir;
  const fs::path results_path = out / "results.jsonl";
  const fs::path traces_path = out / "traces.jsonl";
  const fs::path transcripts_path = out / "transcripts.jsonl";
  const fs::path state_path = out / "state.json";
  const std::string hash = plan_hash(plan);

  fs::create_directories(out);
  if (options.force) {
    for (const auto& p : {results_path, traces_path, transcripts_path, state_path}) fs::remove(p);
  } else if (fs::exists(state_path)) {
    json state;
    try {
      std::ifstream in(state_path);
      state = json::parse(in);
    } catch (const json::exception&) {
      throw ConfigError("unreadable " + state_path.string() + "; rerun with --force");
    }
    if (state.value("plan_hash", "") != hash) {
      throw ConfigError(out.string() + " holds results of a different plan; rerun with --force");
    }
  }

  // Resume: everything already in results.jsonl is done.
  std::set<std::string> done;
  for (const auto& r : repair_jsonl(results_path)) {
    if (r.contains("key")) done.insert(r["key"].get<std::string>());
  }
  repair_jsonl(traces_path, [&](const json& t) { return done.contains(t.value("key", "")); });
  repair_jsonl(transcripts_path);
  write_text(state_path, json({{"plan_hash", hash}, {"plan", plan.to_json()}, {"completed_cells", json::array()}})
                             .dump(2) + "\n");

  // Items.
  std::map<Benchmark, std::vector<BenchmarkItem>> items;
  for (const auto& src : plan.benchmarks) {
    std::optional<std::size_t> limit = src.limit;
    if (options.limit) limit = limit ? std::min(*limit, *options.limit) : *options.limit;
    items[src.benchmark] = load_benchmark(src.benchmark, src.path, limit);
    log("loaded " + std::to_string(items[src.benchmark].size()) + " " + std::string(to_string(src.benchmark)) +
        " items");
  }

  // Grid.
  std::vector<Task> tasks;
  std::map<std::string, std::size_t> cell_sizes;
  auto wanted = [&](Benchmark b, const std::string& method) {
    return (!options.only.benchmark || *options.only.benchmark == b) && (!options.only.method || *options.only.method == method);
  };
  for (const auto& src : plan.benchmarks) {
    const Benchmark b = src.benchmark;
    auto add_cells = [&](const StrategyEntry* s, const AgentEntry* a, const std::string& method) {
      if (!wanted(b, method)) return;
      for (double t : plan.temperatures) {
        for (int run = 0; run < plan.runs; ++run) {
          std::string cell = cell_key(b, method, t, run);
          cell_sizes[cell] = items[b].size();
          for (const auto& item : items[b]) {
            tasks.push_back({b, &item, s, a, t, run, method, cell, cell + "/" + item.id});
          }
        }
      }
    };
    for (const auto& s : plan.strategies) {
      auto targets = plan.targets(s);
      if (std::find(targets.begin(), targets.end(), b) != targets.end()) add_cells(&s, nullptr, std::string(to_string(s.config.name)));
    }
    for (const auto& a : plan.agents) {
      auto targets = plan.targets(a);
      if (std::find(targets.begin(), targets.end(), b) != targets.end()) {
        add_cells(nullptr, &a, std::string(to_string(a.config.architecture)));
      }
    }
  }

  // Shared clients.
  auto transcript = std::make_shared<TranscriptSink>(transcripts_path);
  std::shared_ptr<Backend> backend;
  net::HttpTransport transport = options.transport ? *options.transport : net::default_transport();
  if (plan.backend.kind == BackendKind::mock) {
    backend = std::make_shared<MockBackend>(*plan.mock);
  } else {
    backend = make_http_backend(plan.backend, transport);
  }
  LlmClient llm(plan.backend, backend, transcript);
  const TemplateLibrary templates =
      plan.templates_dir ? TemplateLibrary::with_overrides(*plan.templates_dir) : TemplateLibrary::builtin();

  std::shared_ptr<Encyclopedia> encyclopedia;
  std::shared_ptr<WebSearch> search;
  std::shared_ptr<KnowledgeGraph> kg;
  if (plan.tools.live) {
    net::HttpTransport tool_transport = transport;
    if (const char* cache = std::getenv("HARNESS_CACHE_DIR"); cache && *cache) {
      tool_transport = net::cached_transport(tool_transport, cache);
    }
    encyclopedia = std::make_shared<WikipediaClient>(tool_transport, plan.tools.client);
    search = std::make_shared<DuckDuckGoClient>(tool_transport, plan.tools.client);
    kg = std::make_shared<WikidataClient>(tool_transport, plan.tools.client);
  } else {
    json doc = plan.tools.fixtures ? load_fixture_document(*plan.tools.fixtures) : json::object();
    encyclopedia = std::make_shared<FixtureEncyclopedia>(doc.value("encyclopedia", json::object()));
    search = std::make_shared<FixtureWebSearch>(doc.value("web_search", json::object()));
    kg = std::make_shared<FixtureKnowledgeGraph>(doc.value("knowledge_graph", json::object()));
  }
  auto sandbox = std::make_shared<SubprocessSandbox>(plan.tools.sandbox);
  const ToolRegistry registry = ToolRegistry::standard(encyclopedia, search, sandbox);
  for (const auto& a : plan.agents) bind_registry(a.config, registry);

  // Execution.
  RunSummary summary;
  std::mutex out_mutex;
  std::ofstream results_out(results_path, std::ios::app);
  std::ofstream traces_out(traces_path, std::ios::app);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> persisted{0};
  std::atomic<bool> stop{false};

  auto persist = [&](const json& result, const std::optional<json>& trace) {
    std::lock_guard lock(out_mutex);
    if (trace) {
      traces_out << trace->dump() << '\n';
      traces_out.flush();
    }
    results_out << result.dump() << '\n';
    results_out.flush();
    ++summary.executed;
    done.insert(result["key"].get<std::string>());
    if (options.stop_after && ++persisted >= *options.stop_after) stop = true;
  };

  auto execute = [&](const Task& task) {
    const std::uint64_t seed = query_seed(plan.rng_seed, task.benchmark, task.item->id, task.method,
                                          task.temperature, task.run);
    json record = {{"key", task.key},       {"cell", task.cell},
                   {"benchmark", to_string(task.benchmark)},
                   {"method", task.method}, {"kind", task.agent ? "agent" : "strategy"},
                   {"temperature", task.temperature},
                   {"run", task.run},       {"query_id", task.item->id},
                   {"seed", hex(seed)}};
    if (task.item->subject) record["subject"] = *task.item->subject;
    std::optional<json> trace_json;
    if (task.strategy) {
      StrategyConfig cfg = task.strategy->config;
      cfg.temperature = task.temperature;
      ExecContext ctx{llm, templates, kg.get(), search.get(), task.key, seed};
      StrategyResult r = run_strategy(cfg, *task.item, ctx);
      record["outcome"] = to_json(r.outcome);
      record["grade"] = to_string(grade(*task.item, r.outcome));
      record["prompt_count"] = r.prompt_count;
      json samples = json::array();
      for (const auto& s : r.samples) samples.push_back(s ? to_json(*s) : json(nullptr));
      record["samples"] = samples;
      record["sample_correct"] = sample_correctness(*task.item, r.samples);
      if (r.debate_rounds) record["debate_rounds"] = *r.debate_rounds;
      record["notes"] = r.notes;
    } else {
      AgentConfig cfg = task.agent->config;
      cfg.temperature = task.temperature;
      AgentContext ctx{llm, templates, registry, task.key, seed};
      AgentTrace trace = run_agent(*task.item, cfg, ctx);
      record["outcome"] = to_json(trace.outcome);
      record["grade"] = to_string(grade(*task.item, trace.outcome));
      record["prompt_count"] = trace.llm_calls;
      json t = to_json(trace);
      t["key"] = task.key;
      t["benchmark"] = to_string(task.benchmark);
      t["temperature"] = task.temperature;
      t["run"] = task.run;
      trace_json = std::move(t);
    }
    persist(record, trace_json);
  };

  auto worker = [&] {
    while (!stop) {
      std::size_t i = next++;
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      {
        std::lock_guard lock(out_mutex);
        if (done.contains(task.key)) {
          ++summary.skipped;
          continue;
        }
        if (summary.failed_cells.contains(task.cell)) continue;
      }
      try {
        execute(task);
      } catch (const std::exception& e) {
        std::lock_guard lock(out_mutex);
        if (summary.failed_cells.emplace(task.cell, e.what()).second) {
          log("cell " + task.cell + " failed: " + e.what());
        }
      }
    }
  };

  const int workers = std::max(1, options.parallelism.value_or(plan.parallelism));
  log("executing " + std::to_string(tasks.size()) + " queries with " + std::to_string(workers) + " workers");
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  summary.interrupted = stop.load() && next.load() < tasks.size();

  std::map<std::string, std::size_t> finished;
  for (const auto& task : tasks) {
    if (done.contains(task.key)) ++finished[task.cell];
  }
  json completed = json::array();
  for (const auto& [cell, size] : cell_sizes) {
    if (finished[cell] == size) completed.push_back(cell);
  }
  json failed = json::object();
  for (const auto& [cell, error] : summary.failed_cells) failed[cell] = error;
  write_text(state_path, json({{"plan_hash", hash},
                               {"plan", plan.to_json()},
                               {"completed_cells", completed},
                               {"failed_cells", failed}})
                                 .dump(2) +
                             "\n");

  if (!summary.interrupted && options.write_report && !done.empty()) write_report(out);
  log("executed " + std::to_string(summary.executed) + ", skipped " + std::to_string(summary.skipped) + ", failed cells " +
      std::to_string(summary.failed_cells.size()));
  return summary;
}

}  // namespace hallu
