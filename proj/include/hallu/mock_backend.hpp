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
#include <mutex>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "hallu/gateway.hpp"

namespace hallu {

enum class MockMode { scripted, statistical };

// One matcher over the last message of a request. In scripted mode the
// responses are consumed in order and then cycle; in statistical mode a
// response is drawn from `distribution` and rendered through
// `response_template` ("{answer}" is replaced by the drawn answer).
struct MockRule {
  std::string matcher;
  bool regex = false;
  std::vector<std::string> responses;
  std::vector<std::pair<std::string, double>> distribution;
  std::string response_template = "FINAL ANSWER: {answer}";
};

// A deterministic backend script.
//
// Replies that start with (or contain a line starting with) "TOOL_CALLS:"
// followed by a JSON list of {"name", "arguments"} objects are decoded as
// tool calls when the request carries tools; text before the marker becomes
// the accompanying thought.
struct MockScript {
  MockMode mode = MockMode::scripted;
  std::vector<MockRule> rules;
  std::string fallback = "FINAL ANSWER: unknown";
  std::uint64_t rng_seed_base = 0;
  // Fault injection: every logical call fails this many times with a
  // transient error before it succeeds.
  int transient_failures_per_call = 0;

  // Throws ConfigError.
  void validate() const;

  static MockScript from_json(const json& j);
  json to_json() const;
};

class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockScript script);

  CompletionResponse send(const CompletionRequest& request, std::span<const ToolSpec> tools) override;
  std::string name() const override { return "mock"; }

  // Successful (consumed) calls.
  std::uint64_t calls() const;
  std::vector<CompletionRequest> requests() const;

  // Index of the rule that matches `prompt`, or -1 for the fallback.
  int match(const std::string& prompt) const;

 private:
  std::string draw(const MockRule& rule, const CompletionRequest& request, std::uint64_t call_index) const;

  MockScript script_;
  std::vector<std::regex> compiled_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, int>, std::size_t> cursors_;
  std::map<std::string, std::uint64_t> conversation_calls_;
  std::map<std::string, int> pending_failures_;
  std::vector<CompletionRequest> requests_;
};

// Decodes the mock's textual tool-call convention. Exposed for tests.
CompletionResponse decode_mock_reply(const std::string& text, bool tools_available);

}  // namespace hallu
