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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hallu {

using json = nlohmann::json;

class TranscriptSink;

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

// A tool advertised to the model. `parameters` is a JSON-schema object with
// "type": "object", "properties" and an optional "required" list.
struct ToolSpec {
  std::string name;
  std::string description;
  json parameters = json::object();

  // Throws InvalidRequest when the schema is not a usable object schema.
  void validate() const;
};

// A tool invocation requested by the model. It may name a tool that does not
// exist; validation happens in the agent runtime.
struct ToolCall {
  std::string id;
  std::string name;
  json arguments = json::object();
};

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  std::vector<ToolCall> tool_calls;  // assistant turns only
  std::string tool_call_id;          // tool turns only
  std::string name;                  // tool turns: name of the tool that ran

  static ChatMessage system(std::string text) { return make(Role::system, std::move(text)); }
  static ChatMessage user(std::string text) { return make(Role::user, std::move(text)); }
  static ChatMessage assistant(std::string text) { return make(Role::assistant, std::move(text)); }
  static ChatMessage tool_result(const ToolCall& call, std::string text);

 private:
  static ChatMessage make(Role role, std::string text) {
    ChatMessage m;
    m.role = role;
    m.content = std::move(text);
    return m;
  }
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_tokens;
  // Not sent on the wire. Groups calls that belong to one strategy execution
  // (transcript id); the mock keys its scripted cursors on it.
  std::string conversation_id;

  // Throws InvalidRequest.
  void validate() const;
};

enum class FinishReason { stop, length, error };

std::string_view to_string(FinishReason reason);

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct CompletionResponse {
  std::string content;
  FinishReason finish_reason = FinishReason::stop;
  std::optional<Usage> usage;
  std::vector<ToolCall> tool_calls;
  // Set when the backend returned a tool-call payload that could not be decoded.
  std::optional<std::string> tool_call_error;
};

enum class BackendKind { openai_http, ollama_http, mock };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view text);

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string base_url;  // empty for mock
  std::string model_name = "mock";
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{500};

  // Throws ConfigError.
  void validate() const;
};

// Transport-level backend. Implementations throw TransientBackendError for
// failures worth retrying; LlmClient owns the retry policy.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse send(const CompletionRequest& request,
                                  std::span<const ToolSpec> tools) = 0;
  virtual std::string name() const = 0;
};

struct ToolReply {
  enum class Kind { text, tool_calls };
  Kind kind = Kind::text;
  std::string text;  // final text, or the thought accompanying tool calls
  std::vector<ToolCall> calls;

  bool has_tool_calls() const { return kind == Kind::tool_calls; }
};

// The uniform chat-completion entry point. Thread-safe; one instance is
// shared by all workers of a run.
class LlmClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LlmClient(BackendConfig config, std::shared_ptr<Backend> backend,
            std::shared_ptr<TranscriptSink> transcript = nullptr, Sleeper sleeper = nullptr);

  LlmClient(const LlmClient&) = delete;
  LlmClient& operator=(const LlmClient&) = delete;

  CompletionResponse complete(const CompletionRequest& request) const;

  // Throws ToolCallParseFailure when the reply carries an undecodable call.
  ToolReply complete_with_tools(const CompletionRequest& request,
                                std::span<const ToolSpec> tools) const;

  // Logical calls made so far (retries are not counted).
  std::uint64_t calls() const { return calls_.load(); }

  const BackendConfig& config() const { return config_; }
  const std::shared_ptr<TranscriptSink>& transcript() const { return transcript_; }

 private:
  CompletionResponse send_with_retries(const CompletionRequest& request,
                                       std::span<const ToolSpec> tools) const;

  BackendConfig config_;
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<TranscriptSink> transcript_;
  Sleeper sleeper_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// Backoff before retry number `attempt` (0-based): base * 2^attempt, capped at 30 s.
std::chrono::milliseconds retry_delay(std::chrono::milliseconds base, int attempt);

}  // namespace hallu
