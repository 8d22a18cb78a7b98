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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hallu/gateway.hpp"

namespace hallu {

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

// A prompt with {named} placeholders. The format suffix carries the output
// instructions (marker lines) and is appended after the body at render time.
struct PromptTemplate {
  std::string id;
  std::string body;
  std::string format_suffix;

  // Placeholder names in order of first appearance (body, then suffix).
  std::vector<std::string> placeholders() const;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

// Substitutes every placeholder and appends the format suffix separated by a
// blank line. Throws RenderError naming the first unbound placeholder.
std::string render(const PromptTemplate& tmpl, const Bindings& bindings);

// Template source file layout: the body, optionally followed by a line
// "=== format ===" and the format suffix.
PromptTemplate parse_template_source(std::string id, std::string_view source);

// Sources compiled in from templates/*.txt.
const std::vector<std::pair<std::string, std::string>>& builtin_template_sources();

class TemplateLibrary {
 public:
  static TemplateLibrary builtin();
  // Builtin templates overridden by every <id>.txt found in `dir`.
  static TemplateLibrary with_overrides(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view id) const;
  bool contains(std::string_view id) const;
  void put(PromptTemplate tmpl);
  std::vector<std::string> ids() const;

  std::string render(std::string_view id, const Bindings& bindings) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// ---------------------------------------------------------------------------
// Answer parsing
// ---------------------------------------------------------------------------

enum class AnswerKind { numeric, freetext, choice };

std::string_view to_string(AnswerKind kind);

struct ParseSpec {
  AnswerKind kind = AnswerKind::freetext;
  std::vector<std::string> options;  // choice labels
  bool with_reasoning = false;       // also require "STEP k:" lines
  int tolerance = 3;                 // extra attempts after the first

  static ParseSpec numeric(int tolerance = 3);
  static ParseSpec freetext(int tolerance = 3);
  static ParseSpec choice(std::vector<std::string> labels, int tolerance = 3);
  static ParseSpec yes_no(int tolerance = 3);
  static ParseSpec reasoning_plus(ParseSpec base);

  // Throws ParseFailure for an unusable spec (fewer than two labels, negative tolerance).
  void validate() const;
};

struct ParsedAnswer {
  AnswerKind kind = AnswerKind::freetext;
  // Canonical decimal for numeric, the option label for choice, the answer
  // text (markup stripped) for freetext.
  std::string value;
  std::optional<std::vector<std::string>> reasoning_steps;

  // Comparison key: equal keys mean "the same answer" for voting,
  // contradiction gating and debate agreement.
  std::string key() const;

  friend bool operator==(const ParsedAnswer&, const ParsedAnswer&) = default;
};

struct ParseOutcome {
  std::optional<ParsedAnswer> answer;
  std::string failure;  // reason when answer is empty

  explicit operator bool() const { return answer.has_value(); }
};

// Never throws: a malformed reply is reported through `failure`.
ParseOutcome try_parse(std::string_view raw, const ParseSpec& spec);

// Throws ParseFailure(reason).
ParsedAnswer parse(std::string_view raw, const ParseSpec& spec);

// Writes the answer back in marker form; parse(to_marker_text(a)) == a.
std::string to_marker_text(const ParsedAnswer& answer);

// "1,234.50" -> "1234.5", "$72" -> "72", "72 apples" -> "72". Empty when the
// text does not start with a number.
std::optional<std::string> canonical_number(std::string_view text);

// Lowercase, drop ASCII punctuation and the articles a/an/the, collapse whitespace.
std::string normalize_text(std::string_view text);

// ---------------------------------------------------------------------------
// Re-asking on parse failure
// ---------------------------------------------------------------------------

struct AskResult {
  ParsedAnswer answer;
  int attempts_used = 0;
  std::string raw;
};

// Sends `request`, parses the reply, and re-sends the identical prompt up to
// spec.tolerance more times while parsing fails. Each attempt is one gateway
// call. Attempts after the first get a derived seed. Throws ToleranceExceeded
// carrying the number of calls spent.
AskResult ask_with_tolerance(const LlmClient& client, const CompletionRequest& request,
                             const ParseSpec& spec);

}  // namespace hallu
