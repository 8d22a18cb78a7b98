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

#include <random>

#include "doctest.h"
#include "hallu/agents.hpp"
#include "hallu/error.hpp"
#include "hallu/hashing.hpp"
#include "support.hpp"

using namespace hallu;
using namespace std::chrono_literals;

namespace {

std::string calls(const std::string& name, const json& args) {
  return "TOOL_CALLS: " + json::array({{{"name", name}, {"arguments", args}}}).dump();
}

std::shared_ptr<SubprocessSandbox> shared_sandbox() {
  static auto box = [] {
    SandboxOptions o;
    o.wall_clock = 5000ms;
    return std::make_shared<SubprocessSandbox>(o);
  }();
  return box;
}

struct AgentRig {
  std::shared_ptr<MockBackend> backend;
  std::unique_ptr<LlmClient> llm;
  ToolRegistry registry;

  explicit AgentRig(std::shared_ptr<MockBackend> b) : backend(std::move(b)) {
    llm = test::client(backend);
    auto doc = load_fixture_document(test::toy_dir() / "tools.json");
    registry = ToolRegistry::standard(std::make_shared<FixtureEncyclopedia>(doc["encyclopedia"]),
                                      std::make_shared<FixtureWebSearch>(doc["web_search"]), shared_sandbox());
  }

  AgentContext ctx() const { return AgentContext{*llm, test::templates(), registry, "agent-q", 5}; }

  AgentTrace run(AgentArchitecture arch, const BenchmarkItem& item, int max_steps = 8) const {
    auto cfg = AgentConfig::defaults(arch);
    cfg.max_steps = max_steps;
    auto trace = run_agent(item, cfg, ctx());
    CHECK(static_cast<std::uint64_t>(trace.llm_calls) == llm->calls());
    return trace;
  }
};

int action_steps(const AgentTrace& t) {
  int n = 0;
  for (const auto& s : t.steps) {
    CHECK(s.action.has_value() == s.observation.has_value());
    n += s.action.has_value();
  }
  return n;
}

int tallied(const AgentTrace& t) {
  int n = 0;
  for (const auto& [tool, c] : t.tool_stats) n += c.successful + c.unsuccessful;
  return n;
}

std::string value_of(const AgentTrace& t) {
  REQUIRE(is_answered(t.outcome));
  return std::get<Answered>(t.outcome).value.value;
}

}  // namespace

TEST_SUITE("agents") {
  TEST_CASE("configuration and tool binding") {
    auto chain = AgentConfig::defaults(AgentArchitecture::chain);
    CHECK(chain.tool_names.size() == 3);
    auto ddg = AgentConfig::defaults(AgentArchitecture::react_ddg);
    CHECK(ddg.tool_names == std::vector<std::string>{"web_search"});

    AgentRig rig(test::scripted({}));
    CHECK(bind_registry(chain, rig.registry).size() == 3);
    auto one = bind_registry(ddg, rig.registry);
    REQUIRE(one.size() == 1);
    CHECK(one[0].name == "web_search");

    auto bad = chain;
    bad.tool_names.push_back("calculator");
    CHECK_THROWS_AS(bind_registry(bad, rig.registry), UnknownToolConfigured);

    auto widened = ddg;
    widened.tool_names.push_back("exec_code");
    CHECK_THROWS_AS(widened.validate(), ConfigError);
    auto zero = chain;
    zero.max_steps = 0;
    CHECK_THROWS_AS(zero.validate(), ConfigError);
    auto dup = chain;
    dup.tool_names.push_back("exec_code");
    CHECK_THROWS_AS(dup.validate(), ConfigError);
    CHECK_THROWS_AS(agent_architecture_from_string("router"), ConfigError);
  }

  TEST_CASE("chain executes the planned code call then formats the answer") {
    auto item = test::gsm8k_item("g", "5", "What is 2 plus 3?");
    AgentRig rig(test::scripted({test::rule("outputs of the tools", {"FINAL ANSWER: 5"}),
                                 test::rule("grade school", {calls("exec_code", {{"source", "print(2+3)"}})})}));
    auto t = rig.run(AgentArchitecture::chain, item);
    CHECK(value_of(t) == "5");
    CHECK(t.llm_calls == 2);
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].observation->content == "5");
    CHECK(t.tool_stats["exec_code"].successful == 1);
    CHECK(t.tool_stats["exec_code"].unsuccessful == 0);
    auto final_prompt = rig.backend->requests()[1].messages.back().content;
    CHECK(final_prompt.find("exec_code({\"source\":\"print(2+3)\"}) returned:\n5") != std::string::npos);
    CHECK(rig.backend->requests()[0].messages[0].role == Role::system);
  }

  TEST_CASE("chain records a call to an unknown tool as unsuccessful") {
    auto item = test::trivia_item("t", {"kelp"});
    AgentRig rig(test::scripted({test::rule("outputs of the tools", {"FINAL ANSWER: Kelp"}),
                                 test::rule("trivia", {calls("wikipediaa", {{"query", "kelp"}})})}));
    auto t = rig.run(AgentArchitecture::chain, item);
    CHECK(t.tool_stats["wikipediaa"].unsuccessful == 1);
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].observation->content.find("Unknown tool 'wikipediaa'") == 0);
    CHECK(value_of(t) == "Kelp");
  }

  TEST_CASE("chain with no tool calls answers from the model alone") {
    auto item = test::trivia_item("t", {"paris"});
    AgentRig rig(test::scripted({test::rule("trivia", {"FINAL ANSWER: Paris"})}));
    auto t = rig.run(AgentArchitecture::chain, item);
    CHECK(t.llm_calls == 2);
    CHECK(t.tool_stats.empty());
    CHECK(value_of(t) == "Paris");
    CHECK(rig.backend->requests()[1].messages.back().content.find("outputs of the tools") == std::string::npos);
  }

  TEST_CASE("chain final parse failures make the trace invalid") {
    auto item = test::gsm8k_item("g", "1");
    AgentRig rig(test::scripted({test::rule("grade school", {"no marker"})}));
    auto t = rig.run(AgentArchitecture::chain, item);
    CHECK(is_invalid(t.outcome));
    CHECK(t.llm_calls == 1 + 4);
  }

  TEST_CASE("react answering immediately") {
    auto item = test::trivia_item("t", {"paris"});
    AgentRig rig(test::scripted({test::rule("trivia", {"FINAL ANSWER: Paris"})}));
    auto t = rig.run(AgentArchitecture::react, item);
    CHECK(t.steps.size() == 1);
    CHECK(action_steps(t) == 0);
    CHECK(t.llm_calls == 1);
    CHECK_FALSE(t.exhausted);
    CHECK(value_of(t) == "Paris");
  }

  TEST_CASE("react replay of the code-tool confusion") {
    auto item = test::trivia_item("tq-kelp", {"kelp", "giant kelp"},
                                  "Which seaweed is farmed for its alginates?");
    const std::string lie = "I searched online and found that the seaweed farmed for alginates is kelp.\nFINAL ANSWER: Kelp";
    AgentRig rig(test::scripted({test::rule("trivia", {calls("exec_code", {{"source", "import wikipedia\nprint(wikipedia.summary('alginate seaweed'))"}})}),
                                 test::rule("No module named", {lie})}));
    auto t = rig.run(AgentArchitecture::react, item);
    CHECK(value_of(t) == "Kelp");
    REQUIRE(t.steps.size() == 2);
    REQUIRE(t.steps[0].observation);
    CHECK_FALSE(t.steps[0].observation->ok);
    CHECK(t.steps[0].observation->content.find("No module named 'wikipedia'") != std::string::npos);
    CHECK(t.steps[1].thought == lie);
    CHECK(t.tool_stats["exec_code"].successful == 0);
    CHECK(t.tool_stats["exec_code"].unsuccessful == 1);

    auto second = rig.backend->requests()[1];
    CHECK(second.messages.back().role == Role::tool);
    CHECK(second.messages.back().content == t.steps[0].observation->content);
  }

  TEST_CASE("react endless tool calling is bounded") {
    auto item = test::trivia_item("t", {"kelp"});
    AgentRig rig(test::scripted({test::rule("maximum number of tool steps", {"FINAL ANSWER: Kelp"}),
                                 test::rule("", {calls("web_search", {{"query", "seaweed"}})})}));
    auto t = rig.run(AgentArchitecture::react, item, 4);
    CHECK(t.exhausted);
    CHECK(action_steps(t) == 4);
    CHECK(t.llm_calls == 5);
    CHECK(value_of(t) == "Kelp");
    CHECK(t.tool_stats["web_search"].successful == 4);
    CHECK(rig.backend->requests().back().seed == derive_seed(5, 0xF17A1));
  }

  TEST_CASE("react records malformed tool calls and keeps going") {
    auto item = test::trivia_item("t", {"paris"});
    AgentRig rig(test::scripted({test::rule("valid JSON arguments", {"FINAL ANSWER: Paris"}),
                                 test::rule("trivia", {"TOOL_CALLS: [{\"name\": broken"})}));
    auto t = rig.run(AgentArchitecture::react, item);
    REQUIRE(t.steps.size() == 2);
    CHECK(t.steps[0].thought.find("tool call could not be parsed") == 0);
    CHECK_FALSE(t.steps[0].action);
    CHECK(value_of(t) == "Paris");
  }

  TEST_CASE("react with an unparseable text reply is invalid") {
    auto item = test::gsm8k_item("g", "3");
    AgentRig rig(test::scripted({test::rule("grade school", {"I think it is three."})}));
    auto t = rig.run(AgentArchitecture::react, item);
    CHECK(is_invalid(t.outcome));
    CHECK(t.llm_calls == 1);
  }

  TEST_CASE("react_ddg is limited to trivia questions") {
    AgentRig rig(test::scripted({test::rule("", {"FINAL ANSWER: 1"})}));
    CHECK_THROWS_AS(rig.run(AgentArchitecture::react_ddg, test::gsm8k_item("g", "1")), StrategyBenchmarkMismatch);
    auto t = rig.run(AgentArchitecture::react_ddg, test::trivia_item("t", {"1"}));
    CHECK(t.architecture == AgentArchitecture::react_ddg);
    CHECK(is_answered(t.outcome));
  }

  TEST_CASE("tool failures become observations verbatim") {
    auto item = test::trivia_item("t", {"kelp"}, "a slow query about kelp");
    AgentRig rig(test::scripted({test::rule("request timed out", {"FINAL ANSWER: kelp"}),
                                 test::rule("trivia", {calls("web_search", {{"query", "slow query"}})})}));
    auto t = rig.run(AgentArchitecture::react, item);
    CHECK(t.tool_stats["web_search"].unsuccessful == 1);
    CHECK(rig.backend->requests()[1].messages.back().content == "request timed out");
    CHECK(value_of(t) == "kelp");
  }

  TEST_CASE("termination and stats conservation under adversarial scripts") {
    std::mt19937 rng(31337);
    const std::vector<std::string> menu = {
        calls("web_search", {{"query", "kelp"}}),
        calls("wikipedia_lookup", {{"query", "Douglas Adams"}}),
        calls("nonexistent", {{"x", 1}}),
        calls("web_search", {{"wrong", "arg"}}),
        "TOOL_CALLS: not json",
        "TOOL_CALLS: [{\"name\": \"web_search\", \"arguments\": {\"query\": \"a\"}}, {\"name\": \"wikipedia_lookup\", \"arguments\": {\"query\": \"b\"}}]",
        "just rambling",
        "FINAL ANSWER: kelp",
    };
    auto item = test::trivia_item("t", {"kelp"});
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<std::string> script;
      for (int i = 0; i < 12; ++i) script.push_back(menu[rng() % (menu.size() - (trial % 2 ? 0 : 2))]);
      int max_steps = 1 + static_cast<int>(rng() % 6);
      AgentRig rig(test::scripted({test::rule("", script)}));
      auto t = rig.run(AgentArchitecture::react, item, max_steps);
      CAPTURE(trial);
      CHECK(t.llm_calls <= max_steps + 1);
      CHECK(rig.llm->calls() <= static_cast<std::uint64_t>(max_steps + 1));
      CHECK(action_steps(t) == tallied(t));
    }
  }

  TEST_CASE("replaying against the same script reproduces the trace") {
    auto item = test::trivia_item("t", {"kelp"}, "Which seaweed is farmed for alginates?");
    auto make = [] {
      return test::scripted({test::rule("maximum number", {"FINAL ANSWER: Kelp"}),
                             test::rule("", {calls("web_search", {{"query", "seaweed alginates"}}),
                                             calls("wikipedia_lookup", {{"query", "kelp"}}), "FINAL ANSWER: Kelp"})});
    };
    AgentRig a(make()), b(make());
    auto ta = a.run(AgentArchitecture::react, item);
    auto tb = b.run(AgentArchitecture::react, item);
    CHECK(to_json(ta) == to_json(tb));
  }

  TEST_CASE("trace json round trip") {
    auto item = test::trivia_item("t", {"kelp"});
    AgentRig rig(test::scripted({test::rule("maximum number", {"FINAL ANSWER: Kelp"}),
                                 test::rule("", {calls("nonexistent", {{"q", 1}}), calls("web_search", {{"query", "kelp"}})})}));
    auto t = rig.run(AgentArchitecture::react, item, 3);
    auto j = to_json(t);
    CHECK(j["final"]["status"] == "answered");
    CHECK(j["steps"][0]["observation"]["error_kind"] == "unknown_tool");
    CHECK(to_json(agent_trace_from_json(j)) == j);
  }
}
