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

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hallu/gateway.hpp"

namespace hallu {

json to_json(const ChatMessage& message);
json to_json(const CompletionRequest& request);
json to_json(const CompletionResponse& response);
json to_json(const ToolCall& call);

// Append-only JSON-lines log of every exchange:
//   {"ts", "backend", "conversation", "request", "response"}
// plus free-form notes {"ts", "conversation", "note"}. Appends are serialized.
class TranscriptSink {
 public:
  using Clock = std::function<std::string()>;

  // In-memory sink.
  explicit TranscriptSink(Clock clock = nullptr);
  // File sink; appends to an existing file.
  explicit TranscriptSink(const std::filesystem::path& file, Clock clock = nullptr);

  void record(std::string_view backend, const CompletionRequest& request,
              const CompletionResponse& response);
  void note(std::string_view conversation, std::string_view text);

  // Lines written so far (in-memory sinks only keep them).
  std::vector<std::string> lines() const;

  static std::string utc_timestamp();

 private:
  void append(const json& line);

  Clock clock_;
  mutable std::mutex mutex_;
  std::ofstream out_;
  bool to_file_ = false;
  std::vector<std::string> lines_;
};

}  // namespace hallu
