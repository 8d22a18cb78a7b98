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

#include "hallu/agents.hpp"

#include <algorithm>
#include <set>

#include "hallu/error.hpp"
#include "hallu/hashing.hpp"
#include "hallu/transcript.hpp"

namespace hallu {

namespace {

constexpr std::uint64_t kFinalSalt = 0xF17A1;

CompletionRequest agent_request(const AgentConfig& cfg, const AgentContext& ctx, std::vector<ChatMessage> messages,
                                std::uint64_t salt) {
  CompletionRequest r;
  r.messages = std::move(messages);
  r.temperature = cfg.temperature;
  if (ctx.seed) r.seed = derive_seed(*ctx.seed, salt);
  r.conversation_id = ctx.transcript_id;
  return r;
}

void tally(AgentTrace& trace, const std::string& tool, const ToolResult& result) {
  auto& t = trace.tool_stats[tool];
  (result.ok ? t.successful : t.unsuccessful) += 1;
}

AgentStep act(AgentTrace& trace, const ToolRegistry& registry, const ToolCall& call, std::string thought) {
  ToolResult result = registry.execute(call);
  tally(trace, call.name, result);
  AgentStep step{std::move(thought), call, result};
  trace.steps.push_back(step);
  return step;
}

std::string describe_call(const ToolCall& call) { return call.name + "(" + call.arguments.dump() + ")"; }

json step_to_json(const AgentStep& step) {
  json j = {{"thought", step.thought}};
  if (step.action) {
    j["action"] = {{"name", step.action->name}, {"arguments", step.action->arguments}};
    if (!step.action->id.empty()) j["action"]["id"] = step.action->id;
  }
  if (step.observation) {
    j["observation"] = {{"ok", step.observation->ok}, {"content", step.observation->content}};
    if (step.observation->error_kind) j["observation"]["error_kind"] = to_string(*step.observation->error_kind);
  }
  return j;
}

ToolErrorKind tool_error_kind_from_string(std::string_view text) {
  for (auto k : {ToolErrorKind::unknown_tool, ToolErrorKind::bad_arguments, ToolErrorKind::execution_error,
                 ToolErrorKind::timeout, ToolErrorKind::network}) {
    if (to_string(k) == text) return k;
  }
  throw FormatError("unknown tool error kind: " + std::string(text));
}

}  // namespace

std::string_view to_string(AgentArchitecture arch) {
  switch (arch) {
    case AgentArchitecture::chain: return "chain";
    case AgentArchitecture::react: return "react";
    case AgentArchitecture::react_ddg: return "react_ddg";
  }
  return "react";
}

AgentArchitecture agent_architecture_from_string(std::string_view text) {
  if (text == "chain") return AgentArchitecture::chain;
  if (text == "react") return AgentArchitecture::react;
  if (text == "react_ddg") return AgentArchitecture::react_ddg;
  throw ConfigError("unknown agent architecture: " + std::string(text));
}

AgentConfig AgentConfig::defaults(AgentArchitecture arch) {
  AgentConfig cfg;
  cfg.architecture = arch;
  if (arch == AgentArchitecture::react_ddg) {
    cfg.tool_names = {"web_search"};
  } else {
    cfg.tool_names = {"wikipedia_lookup", "web_search", "exec_code"};
  }
  return cfg;
}

void AgentConfig::validate() const {
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (tolerance < 0) throw ConfigError("tolerance must be >= 0");
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature outside [0, 2]");
  std::set<std::string> names(tool_names.begin(), tool_names.end());
  if (names.size() != tool_names.size()) throw ConfigError("duplicate tool name in agent config");
  if (architecture == AgentArchitecture::react_ddg && names != std::set<std::string>{"web_search"}) {
    throw ConfigError("react_ddg is limited to the web_search tool");
  }
}

std::vector<ToolSpec> bind_registry(const AgentConfig& cfg, const ToolRegistry& registry) {
  std::vector<ToolSpec> specs;
  for (const auto& name : cfg.tool_names) {
    if (!registry.contains(name)) throw UnknownToolConfigured("tool '" + name + "' is not registered");
    specs.push_back(registry.spec(name));
  }
  return specs;
}

AgentTrace run_chain(const BenchmarkItem& item, const AgentConfig& cfg, const AgentContext& ctx) {
  const auto specs = bind_registry(cfg, ctx.registry);
  AgentTrace trace;
  trace.query_id = item.id;
  trace.architecture = AgentArchitecture::chain;
  const std::string question_prompt = control_prompt(item, ctx.templates);

  std::vector<ChatMessage> plan{ChatMessage::system(ctx.templates.render("agent_system", {})),
                                ChatMessage::user(question_prompt)};
  ToolReply reply;
  ++trace.llm_calls;
  try {
    reply = ctx.llm.complete_with_tools(agent_request(cfg, ctx, std::move(plan), 0), specs);
  } catch (const ToolCallParseFailure& e) {
    trace.steps.push_back({std::string("tool call could not be parsed: ") + e.what(), std::nullopt, std::nullopt});
  }

  std::string final_prompt = question_prompt;
  if (reply.has_tool_calls()) {
    std::string outputs;
    for (std::size_t i = 0; i < reply.calls.size(); ++i) {
      auto step = act(trace, ctx.registry, reply.calls[i], i == 0 ? reply.text : std::string{});
      if (!outputs.empty()) outputs += "\n\n";
      outputs += describe_call(reply.calls[i]) + (step.observation->ok ? " returned:\n" : " failed:\n") +
                 step.observation->content;
    }
    final_prompt = ctx.templates.render("chain_final", {{"question_prompt", question_prompt}, {"tool_outputs", outputs}});
  } else if (!reply.text.empty()) {
    trace.steps.push_back({reply.text, std::nullopt, std::nullopt});
  }

  try {
    auto final_answer = ask_with_tolerance(
        ctx.llm, agent_request(cfg, ctx, {ChatMessage::user(final_prompt)}, kFinalSalt), answer_spec(item, cfg.tolerance));
    trace.llm_calls += final_answer.attempts_used;
    trace.outcome = Answered{std::move(final_answer.answer)};
  } catch (const ToleranceExceeded& e) {
    trace.llm_calls += e.attempts();
    trace.outcome = Invalid{"final answer unparseable"};
  }
  return trace;
}

AgentTrace run_react(const BenchmarkItem& item, const AgentConfig& cfg, const AgentContext& ctx) {
  const auto specs = bind_registry(cfg, ctx.registry);
  AgentTrace trace;
  trace.query_id = item.id;
  trace.architecture = cfg.architecture;
  const std::string question_prompt = control_prompt(item, ctx.templates);
  const ParseSpec spec = answer_spec(item, cfg.tolerance);

  std::vector<ChatMessage> conversation{ChatMessage::system(ctx.templates.render("agent_system", {})),
                                        ChatMessage::user(question_prompt)};
  for (int step = 0; step < cfg.max_steps; ++step) {
    ToolReply reply;
    ++trace.llm_calls;
    try {
      reply = ctx.llm.complete_with_tools(agent_request(cfg, ctx, conversation, static_cast<std::uint64_t>(step)), specs);
    } catch (const ToolCallParseFailure& e) {
      std::string problem = std::string("tool call could not be parsed: ") + e.what();
      trace.steps.push_back({problem, std::nullopt, std::nullopt});
      conversation.push_back(ChatMessage::assistant("(malformed tool call)"));
      conversation.push_back(ChatMessage::user(problem + "\nCall a tool with valid JSON arguments or answer in text."));
      continue;
    }

    if (!reply.has_tool_calls()) {
      trace.steps.push_back({reply.text, std::nullopt, std::nullopt});
      auto parsed = try_parse(reply.text, spec);
      if (parsed) {
        trace.outcome = Answered{std::move(*parsed.answer)};
      } else {
        trace.outcome = Invalid{"final text unparseable: " + parsed.failure};
      }
      return trace;
    }

    ChatMessage assistant = ChatMessage::assistant(reply.text);
    assistant.tool_calls = reply.calls;
    conversation.push_back(std::move(assistant));
    for (std::size_t i = 0; i < reply.calls.size(); ++i) {
      auto done = act(trace, ctx.registry, reply.calls[i], i == 0 ? reply.text : std::string{});
      conversation.push_back(ChatMessage::tool_result(reply.calls[i], done.observation->content));
    }
  }

  trace.exhausted = true;
  conversation.push_back(ChatMessage::user(ctx.templates.render("react_force_final", {{"question_prompt", question_prompt}})));
  ++trace.llm_calls;
  auto forced = ctx.llm.complete(agent_request(cfg, ctx, std::move(conversation), kFinalSalt));
  trace.steps.push_back({forced.content, std::nullopt, std::nullopt});
  auto parsed = try_parse(forced.content, spec);
  if (parsed) {
    trace.outcome = Answered{std::move(*parsed.answer)};
  } else {
    trace.outcome = Invalid{"forced final answer unparseable: " + parsed.failure};
  }
  return trace;
}

AgentTrace run_agent(const BenchmarkItem& item, const AgentConfig& cfg, const AgentContext& ctx) {
  cfg.validate();
  if (cfg.architecture == AgentArchitecture::chain) return run_chain(item, cfg, ctx);
  if (cfg.architecture == AgentArchitecture::react_ddg && item.benchmark != Benchmark::triviaqa) {
    throw StrategyBenchmarkMismatch("react_ddg is evaluated on triviaqa only");
  }
  return run_react(item, cfg, ctx);
}

json to_json(const AgentTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) steps.push_back(step_to_json(s));
  json stats = json::object();
  for (const auto& [tool, t] : trace.tool_stats) stats[tool] = {{"successful", t.successful}, {"unsuccessful", t.unsuccessful}};
  return {{"query_id", trace.query_id}, {"architecture", to_string(trace.architecture)}, {"steps", steps},
          {"tool_stats", stats}, {"final", to_json(trace.outcome)}, {"llm_calls", trace.llm_calls},
          {"exhausted", trace.exhausted}};
}

AgentTrace agent_trace_from_json(const json& j) {
  AgentTrace trace;
  trace.query_id = j.at("query_id").get<std::string>();
  trace.architecture = agent_architecture_from_string(j.at("architecture").get<std::string>());
  for (const auto& s : j.value("steps", json::array())) {
    AgentStep step;
    step.thought = s.value("thought", "");
    if (s.contains("action")) {
      ToolCall call;
      call.name = s["action"].value("name", "");
      call.id = s["action"].value("id", "");
      call.arguments = s["action"].value("arguments", json::object());
      step.action = std::move(call);
    }
    if (s.contains("observation")) {
      ToolResult r;
      r.ok = s["observation"].value("ok", false);
      r.content = s["observation"].value("content", "");
      if (s["observation"].contains("error_kind")) {
        r.error_kind = tool_error_kind_from_string(s["observation"]["error_kind"].get<std::string>());
      }
      step.observation = std::move(r);
    }
    trace.steps.push_back(std::move(step));
  }
  const json stats = j.value("tool_stats", json::object());
  for (const auto& [tool, t] : stats.items()) {
    trace.tool_stats[tool] = {t.value("successful", 0), t.value("unsuccessful", 0)};
  }
  trace.outcome = outcome_from_json(j.at("final"));
  trace.llm_calls = j.value("llm_calls", 0);
  trace.exhausted = j.value("exhausted", false);
  return trace;
}

}  // namespace hallu
