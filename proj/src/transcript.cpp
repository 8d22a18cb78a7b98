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

#include "hallu/transcript.hpp"

#include <chrono>
#include <ctime>

#include "hallu/error.hpp"

namespace hallu {

json to_json(const ToolCall& call) {
  return {{"id", call.id}, {"name", call.name}, {"arguments", call.arguments}};
}

json to_json(const ChatMessage& message) {
  json j{{"role", to_string(message.role)}, {"content", message.content}};
  if (!message.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& c : message.tool_calls) calls.push_back(to_json(c));
    j["tool_calls"] = calls;
  }
  if (!message.tool_call_id.empty()) j["tool_call_id"] = message.tool_call_id;
  if (!message.name.empty()) j["name"] = message.name;
  return j;
}

json to_json(const CompletionRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back(to_json(m));
  json j{{"messages", messages}, {"temperature", request.temperature}};
  if (request.seed) j["seed"] = *request.seed;
  if (request.max_tokens) j["max_tokens"] = *request.max_tokens;
  return j;
}

json to_json(const CompletionResponse& response) {
  json j{{"content", response.content}, {"finish_reason", to_string(response.finish_reason)}};
  if (!response.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& c : response.tool_calls) calls.push_back(to_json(c));
    j["tool_calls"] = calls;
  }
  if (response.tool_call_error) j["tool_call_error"] = *response.tool_call_error;
  if (response.usage) {
    j["usage"] = {{"prompt_tokens", response.usage->prompt_tokens},
                  {"completion_tokens", response.usage->completion_tokens}};
  }
  return j;
}

std::string TranscriptSink::utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

TranscriptSink::TranscriptSink(Clock clock) : clock_(clock ? std::move(clock) : Clock(utc_timestamp)) {}

TranscriptSink::TranscriptSink(const std::filesystem::path& file, Clock clock)
    : clock_(clock ? std::move(clock) : Clock(utc_timestamp)), out_(file, std::ios::app), to_file_(true) {
  if (!out_) throw ConfigError("cannot open transcript file " + file.string());
}

void TranscriptSink::append(const json& line) {
  std::string text = line.dump();
  std::lock_guard lock(mutex_);
  if (to_file_) {
    out_ << text << '\n';
    out_.flush();
  } else {
    lines_.push_back(std::move(text));
  }
}

void TranscriptSink::record(std::string_view backend, const CompletionRequest& request,
                            const CompletionResponse& response) {
  append({{"ts", clock_()},
          {"backend", backend},
          {"conversation", request.conversation_id},
          {"request", to_json(request)},
          {"response", to_json(response)}});
}

void TranscriptSink::note(std::string_view conversation, std::string_view text) {
  append({{"ts", clock_()}, {"conversation", conversation}, {"note", text}});
}

std::vector<std::string> TranscriptSink::lines() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

}  // namespace hallu
