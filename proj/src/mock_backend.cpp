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

#include "hallu/mock_backend.hpp"

#include <cmath>

#include "hallu/error.hpp"
#include "hallu/hashing.hpp"

namespace hallu {

namespace {

constexpr std::string_view kToolMarker = "TOOL_CALLS:";

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void MockScript::validate() const {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& rule = rules[i];
    if (rule.regex) {
      try {
        std::regex probe(rule.matcher);
      } catch (const std::regex_error& e) {
        throw ConfigError("mock rule " + std::to_string(i) + ": bad regex: " + e.what());
      }
    }
    if (mode == MockMode::scripted) {
      if (rule.responses.empty()) {
        throw ConfigError("scripted mock rule " + std::to_string(i) + " has no responses");
      }
    } else {
      if (rule.distribution.empty()) {
        throw ConfigError("statistical mock rule " + std::to_string(i) + " has no distribution");
      }
      double total = 0.0;
      for (const auto& [answer, p] : rule.distribution) {
        if (p < 0.0) throw ConfigError("negative probability for '" + answer + "'");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("mock rule " + std::to_string(i) + " distribution sums to " + std::to_string(total));
      }
    }
  }
  if (transient_failures_per_call < 0) throw ConfigError("transient_failures_per_call must be >= 0");
}

MockScript MockScript::from_json(const json& j) {
  MockScript s;
  std::string mode = j.value("mode", "scripted");
  if (mode == "scripted") {
    s.mode = MockMode::scripted;
  } else if (mode == "statistical") {
    s.mode = MockMode::statistical;
  } else {
    throw ConfigError("unknown mock mode: " + mode);
  }
  s.fallback = j.value("fallback", s.fallback);
  s.rng_seed_base = j.value("rng_seed_base", std::uint64_t{0});
  s.transient_failures_per_call = j.value("transient_failures_per_call", 0);
  for (const auto& r : j.value("rules", json::array())) {
    MockRule rule;
    rule.matcher = r.value("match", "");
    rule.regex = r.value("regex", false);
    if (r.contains("responses")) rule.responses = r["responses"].get<std::vector<std::string>>();
    if (r.contains("distribution")) {
      const json& d = r["distribution"];
      if (d.is_object()) {
        for (const auto& [k, v] : d.items()) rule.distribution.emplace_back(k, v.get<double>());
      } else if (d.is_array()) {
        for (const auto& pair : d) {
          rule.distribution.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<double>());
        }
      } else {
        throw ConfigError("mock distribution must be an object or a list of pairs");
      }
    }
    rule.response_template = r.value("template", rule.response_template);
    s.rules.push_back(std::move(rule));
  }
  s.validate();
  return s;
}

json MockScript::to_json() const {
  json rules_json = json::array();
  for (const auto& r : rules) {
    json rule{{"match", r.matcher}, {"regex", r.regex}};
    if (!r.responses.empty()) rule["responses"] = r.responses;
    if (!r.distribution.empty()) {
      json d = json::array();
      for (const auto& [a, p] : r.distribution) d.push_back(json::array({a, p}));
      rule["distribution"] = d;
      rule["template"] = r.response_template;
    }
    rules_json.push_back(std::move(rule));
  }
  return {{"mode", mode == MockMode::scripted ? "scripted" : "statistical"},
          {"rules", rules_json},
          {"fallback", fallback},
          {"rng_seed_base", rng_seed_base},
          {"transient_failures_per_call", transient_failures_per_call}};
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {
  script_.validate();
  for (const auto& rule : script_.rules) {
    compiled_.emplace_back(rule.regex ? std::regex(rule.matcher) : std::regex());
  }
}

int MockBackend::match(const std::string& prompt) const {
  for (std::size_t i = 0; i < script_.rules.size(); ++i) {
    const auto& rule = script_.rules[i];
    bool hit = rule.regex ? std::regex_search(prompt, compiled_[i])
                          : prompt.find(rule.matcher) != std::string::npos;
    if (hit) return static_cast<int>(i);
  }
  return -1;
}

std::string MockBackend::draw(const MockRule& rule, const CompletionRequest& request,
                              std::uint64_t call_index) const {
  std::uint64_t salt =
      request.seed ? hash_combine(script_.rng_seed_base, *request.seed)
                   : hash_combine(hash_combine(script_.rng_seed_base, request.conversation_id), call_index);
  double u = unit_interval(salt);
  double cumulative = 0.0;
  const std::string* chosen = &rule.distribution.back().first;
  for (const auto& [answer, p] : rule.distribution) {
    cumulative += p;
    if (u < cumulative) {
      chosen = &answer;
      break;
    }
  }
  return replace_all(rule.response_template, "{answer}", *chosen);
}

CompletionResponse MockBackend::send(const CompletionRequest& request, std::span<const ToolSpec> tools) {
  const std::string& prompt = request.messages.back().content;
  int rule_index = match(prompt);

  std::string text;
  {
    std::lock_guard lock(mutex_);
    if (script_.transient_failures_per_call > 0) {
      int& pending = pending_failures_[request.conversation_id];
      if (pending < script_.transient_failures_per_call) {
        ++pending;
        throw TransientBackendError("mock: injected transient failure");
      }
      pending = 0;
    }
    std::uint64_t call_index = conversation_calls_[request.conversation_id]++;
    if (rule_index < 0) {
      text = script_.fallback;
    } else {
      const MockRule& rule = script_.rules[rule_index];
      if (script_.mode == MockMode::statistical) {
        text = draw(rule, request, call_index);
      } else {
        std::size_t& cursor = cursors_[{request.conversation_id, rule_index}];
        text = rule.responses[cursor % rule.responses.size()];
        ++cursor;
      }
    }
    requests_.push_back(request);
  }
  return decode_mock_reply(text, !tools.empty());
}

std::uint64_t MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::vector<CompletionRequest> MockBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

CompletionResponse decode_mock_reply(const std::string& text, bool tools_available) {
  CompletionResponse out;
  std::size_t marker = std::string::npos;
  if (tools_available) {
    if (text.rfind(kToolMarker, 0) == 0) {
      marker = 0;
    } else {
      auto pos = text.find(std::string("\n") + std::string(kToolMarker));
      if (pos != std::string::npos) marker = pos + 1;
    }
  }
  if (marker == std::string::npos) {
    out.content = text;
    return out;
  }
  out.content = trim(std::string_view(text).substr(0, marker));
  json calls = json::parse(text.substr(marker + kToolMarker.size()), nullptr, false);
  if (calls.is_discarded() || !calls.is_array()) {
    out.tool_call_error = "tool call payload is not a JSON list";
    return out;
  }
  int index = 0;
  for (const auto& c : calls) {
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) {
      out.tool_call_error = "tool call without a name";
      out.tool_calls.clear();
      return out;
    }
    json args = c.value("arguments", json::object());
    if (!args.is_object()) {
      out.tool_call_error = "tool call arguments are not an object";
      out.tool_calls.clear();
      return out;
    }
    out.tool_calls.push_back(ToolCall{"call_" + std::to_string(index++), c["name"].get<std::string>(), args});
  }
  if (out.tool_calls.empty()) out.tool_call_error = "empty tool call list";
  return out;
}

}  // namespace hallu
