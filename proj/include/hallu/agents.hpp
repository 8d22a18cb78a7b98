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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hallu/codec.hpp"
#include "hallu/gateway.hpp"
#include "hallu/item.hpp"
#include "hallu/strategies.hpp"
#include "hallu/tools.hpp"

namespace hallu {

enum class AgentArchitecture { chain, react, react_ddg };

std::string_view to_string(AgentArchitecture arch);
AgentArchitecture agent_architecture_from_string(std::string_view text);

struct AgentConfig {
  AgentArchitecture architecture = AgentArchitecture::react;
  std::vector<std::string> tool_names;
  int max_steps = 8;
  double temperature = 0.5;
  int tolerance = 3;

  // Default tool set for the architecture.
  static AgentConfig defaults(AgentArchitecture arch);

  // Throws ConfigError.
  void validate() const;
};

struct AgentStep {
  std::string thought;
  std::optional<ToolCall> action;
  std::optional<ToolResult> observation;  // present iff action is
};

struct ToolTally {
  int successful = 0;
  int unsuccessful = 0;
};

struct AgentTrace {
  std::string query_id;
  AgentArchitecture architecture = AgentArchitecture::react;
  std::vector<AgentStep> steps;
  StrategyOutcome outcome = Invalid{"not run"};
  std::map<std::string, ToolTally> tool_stats;
  int llm_calls = 0;
  bool exhausted = false;  // react hit max_steps and was forced to answer
};

json to_json(const AgentTrace& trace);
AgentTrace agent_trace_from_json(const json& j);

struct AgentContext {
  const LlmClient& llm;
  const TemplateLibrary& templates;
  const ToolRegistry& registry;
  std::string transcript_id;
  std::optional<std::uint64_t> seed;
};

// Specs sent with every tool-enabled request. Throws UnknownToolConfigured.
std::vector<ToolSpec> bind_registry(const AgentConfig& cfg, const ToolRegistry& registry);

// Two queries: one tool-enabled planning call whose calls are all executed,
// then one formatting call with the tool outputs.
AgentTrace run_chain(const BenchmarkItem& item, const AgentConfig& cfg, const AgentContext& ctx);

// Thought/action/observation loop; at most max_steps + 1 gateway calls.
AgentTrace run_react(const BenchmarkItem& item, const AgentConfig& cfg, const AgentContext& ctx);

AgentTrace run_agent(const BenchmarkItem& item, const AgentConfig& cfg, const AgentContext& ctx);

}  // namespace hallu
