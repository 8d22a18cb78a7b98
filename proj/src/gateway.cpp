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

#include "hallu/gateway.hpp"

#include <algorithm>
#include <thread>

#include "hallu/error.hpp"
#include "hallu/transcript.hpp"

namespace hallu {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

Role role_from_string(std::string_view text) {
  if (text == "system") return Role::system;
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  if (text == "tool") return Role::tool;
  throw InvalidRequest("unknown chat role: " + std::string(text));
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::openai_http: return "openai_http";
    case BackendKind::ollama_http: return "ollama_http";
    case BackendKind::mock: return "mock";
  }
  return "mock";
}

BackendKind backend_kind_from_string(std::string_view text) {
  if (text == "openai_http") return BackendKind::openai_http;
  if (text == "ollama_http") return BackendKind::ollama_http;
  if (text == "mock") return BackendKind::mock;
  throw ConfigError("unknown backend kind: " + std::string(text));
}

void ToolSpec::validate() const {
  if (name.empty()) throw InvalidRequest("tool spec without a name");
  if (description.empty()) throw InvalidRequest("tool '" + name + "' has an empty description");
  if (!parameters.is_object() || parameters.value("type", "") != "object" ||
      !parameters.contains("properties") || !parameters["properties"].is_object()) {
    throw InvalidRequest("tool '" + name + "' parameters must be an object schema with properties");
  }
  if (parameters.contains("required")) {
    const auto& required = parameters["required"];
    if (!required.is_array()) throw InvalidRequest("tool '" + name + "': required must be a list");
    for (const auto& r : required) {
      if (!r.is_string() || !parameters["properties"].contains(r.get<std::string>())) {
        throw InvalidRequest("tool '" + name + "': required names an undeclared property");
      }
    }
  }
}

ChatMessage ChatMessage::tool_result(const ToolCall& call, std::string text) {
  ChatMessage m = make(Role::tool, std::move(text));
  m.tool_call_id = call.id;
  m.name = call.name;
  return m;
}

void CompletionRequest::validate() const {
  if (messages.empty()) throw InvalidRequest("request has no messages");
  auto last = messages.back().role;
  if (last != Role::user && last != Role::tool) {
    throw InvalidRequest("request must end with a user or tool message");
  }
  for (const auto& m : messages) {
    bool needs_content = m.role == Role::user || (m.role == Role::assistant && m.tool_calls.empty());
    if (needs_content && m.content.empty()) {
      throw InvalidRequest(std::string("empty ") + std::string(to_string(m.role)) + " message");
    }
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw InvalidRequest("temperature outside [0, 2]");
  }
  if (max_tokens && *max_tokens <= 0) throw InvalidRequest("max_tokens must be positive");
}

void BackendConfig::validate() const {
  bool http = kind != BackendKind::mock;
  if (http && base_url.empty()) throw ConfigError("HTTP backend requires base_url");
  if (!http && !base_url.empty()) throw ConfigError("mock backend must not have a base_url");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
  if (retry_backoff.count() < 0) throw ConfigError("retry_backoff must be >= 0");
}

std::chrono::milliseconds retry_delay(std::chrono::milliseconds base, int attempt) {
  constexpr std::chrono::milliseconds cap{30000};
  auto delay = base;
  for (int i = 0; i < attempt && delay < cap; ++i) delay *= 2;
  return std::min(delay, cap);
}

LlmClient::LlmClient(BackendConfig config, std::shared_ptr<Backend> backend,
                     std::shared_ptr<TranscriptSink> transcript, Sleeper sleeper)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      transcript_(std::move(transcript)),
      sleeper_(std::move(sleeper)) {
  config_.validate();
  if (!backend_) throw ConfigError("LlmClient requires a backend");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

CompletionResponse LlmClient::send_with_retries(const CompletionRequest& request,
                                                std::span<const ToolSpec> tools) const {
  request.validate();
  ++calls_;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    try {
      CompletionResponse response = backend_->send(request, tools);
      if (response.finish_reason == FinishReason::stop && response.content.empty() &&
          response.tool_calls.empty() && !response.tool_call_error) {
        response.finish_reason = FinishReason::error;
      }
      if (transcript_) transcript_->record(backend_->name(), request, response);
      return response;
    } catch (const TransientBackendError& e) {
      last_error = e.what();
      if (attempt < config_.max_retries) sleeper_(retry_delay(config_.retry_backoff, attempt));
    }
  }
  if (transcript_) {
    transcript_->note(request.conversation_id, "backend unreachable: " + last_error);
  }
  throw BackendUnreachable(backend_->name() + ": " + last_error + " (after " +
                           std::to_string(config_.max_retries + 1) + " attempts)");
}

CompletionResponse LlmClient::complete(const CompletionRequest& request) const {
  return send_with_retries(request, {});
}

ToolReply LlmClient::complete_with_tools(const CompletionRequest& request,
                                         std::span<const ToolSpec> tools) const {
  for (const auto& t : tools) t.validate();
  CompletionResponse response = send_with_retries(request, tools);
  if (response.tool_call_error) throw ToolCallParseFailure(*response.tool_call_error);
  ToolReply reply;
  reply.text = std::move(response.content);
  if (!response.tool_calls.empty()) {
    reply.kind = ToolReply::Kind::tool_calls;
    reply.calls = std::move(response.tool_calls);
  }
  return reply;
}

}  // namespace hallu
