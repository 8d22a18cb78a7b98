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

#include <stdexcept>
#include <string>

namespace hallu {

// Base of every error the library raises. Tool failures are not errors: they
// are returned as ToolResult values.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HALLU_DEFINE_ERROR(Name)        \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

// gateway
HALLU_DEFINE_ERROR(BackendUnreachable);
HALLU_DEFINE_ERROR(MalformedBackendReply);
HALLU_DEFINE_ERROR(ContextOverflow);
HALLU_DEFINE_ERROR(ToolCallParseFailure);
HALLU_DEFINE_ERROR(InvalidRequest);
// Raised by a Backend for failures worth retrying (network, timeout, 5xx, 429).
HALLU_DEFINE_ERROR(TransientBackendError);

// codec
HALLU_DEFINE_ERROR(RenderError);
HALLU_DEFINE_ERROR(ParseFailure);

// strategies
HALLU_DEFINE_ERROR(EmptyBallot);
HALLU_DEFINE_ERROR(StrategyBenchmarkMismatch);

// tools / agents
HALLU_DEFINE_ERROR(UnknownToolConfigured);

// bench
HALLU_DEFINE_ERROR(FormatError);
HALLU_DEFINE_ERROR(MissingSubjectFile);
HALLU_DEFINE_ERROR(LengthMismatch);

// runner
HALLU_DEFINE_ERROR(ConfigError);
HALLU_DEFINE_ERROR(MissingResults);

#undef HALLU_DEFINE_ERROR

enum class KgErrorKind { network, timeout, not_found };

class KgClientError : public Error {
 public:
  KgClientError(KgErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  KgErrorKind kind() const noexcept { return kind_; }

 private:
  KgErrorKind kind_;
};

class ToleranceExceeded : public Error {
 public:
  ToleranceExceeded(const std::string& what, int attempts, std::string last_reply = {})
      : Error(what), attempts_(attempts), last_reply_(std::move(last_reply)) {}
  int attempts() const noexcept { return attempts_; }
  const std::string& last_reply() const noexcept { return last_reply_; }

 private:
  int attempts_;
  std::string last_reply_;
};

}  // namespace hallu
