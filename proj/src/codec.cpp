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

#include "hallu/codec.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "hallu/error.hpp"
#include "hallu/hashing.hpp"
#include "hallu/transcript.hpp"

namespace hallu {

namespace {

constexpr std::string_view kFormatSeparator = "=== format ===";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_placeholder_char(char c, bool first) {
  return c == '_' || std::islower(static_cast<unsigned char>(c)) ||
         (!first && std::isdigit(static_cast<unsigned char>(c)));
}

// Calls visit(name, begin, end) for each {name} in text.
template <typename Visit>
void scan_placeholders(std::string_view text, Visit visit) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_placeholder_char(text[j], j == i + 1)) ++j;
    if (j < text.size() && text[j] == '}' && j > i + 1) {
      visit(text.substr(i + 1, j - i - 1), i, j + 1);
      i = j;
    }
  }
}

std::string substitute(std::string_view text, const Bindings& bindings, const std::string& id) {
  std::string out;
  std::size_t cursor = 0;
  scan_placeholders(text, [&](std::string_view name, std::size_t begin, std::size_t end) {
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw RenderError("template '" + id + "': missing binding for placeholder '" + std::string(name) + "'");
    }
    out.append(text.substr(cursor, begin - cursor));
    out.append(it->second);
    cursor = end;
  });
  out.append(text.substr(cursor));
  return out;
}

// Strips decoration models wrap answers in: markdown emphasis, backticks, quotes.
std::string_view strip_decoration(std::string_view s) {
  s = trim_view(s);
  auto decor = [](char c) { return c == '*' || c == '`' || c == '"' || c == '_'; };
  while (!s.empty() && decor(s.front())) s.remove_prefix(1);
  while (!s.empty() && decor(s.back())) s.remove_suffix(1);
  return trim_view(s);
}

struct Marker {
  std::size_t start = 0;  // position of "final answer"
  std::string value;
};

std::optional<Marker> last_marker(std::string_view raw) {
  static constexpr std::string_view kNeedle = "final answer";
  std::string low = lower(raw);
  std::optional<Marker> found;
  std::size_t pos = 0;
  while ((pos = low.find(kNeedle, pos)) != std::string::npos) {
    std::size_t k = pos + kNeedle.size();
    while (k < low.size() && (low[k] == ' ' || low[k] == '\t' || low[k] == '*')) ++k;
    if (k < low.size() && low[k] == ':') {
      ++k;
      std::size_t line_end = raw.find('\n', k);
      std::string_view rest = raw.substr(k, line_end == std::string::npos ? std::string_view::npos : line_end - k);
      std::string_view value = strip_decoration(rest);
      if (value.empty() && line_end != std::string::npos) {
        // Value on the following non-empty line.
        std::size_t next = line_end + 1;
        while (next < raw.size()) {
          std::size_t e = raw.find('\n', next);
          std::string_view line = strip_decoration(raw.substr(next, e == std::string::npos ? std::string_view::npos : e - next));
          if (!line.empty()) {
            value = line;
            break;
          }
          if (e == std::string::npos) break;
          next = e + 1;
        }
      }
      found = Marker{pos, std::string(value)};
    }
    pos += kNeedle.size();
  }
  return found;
}

std::vector<std::string> collect_steps(std::string_view text) {
  static const std::regex step_re(R"(step\s+(\d+)\s*:)", std::regex::icase);
  std::vector<std::string> steps;
  std::string s(text);
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // [content begin, match begin)
  for (auto it = std::sregex_iterator(s.begin(), s.end(), step_re); it != std::sregex_iterator(); ++it) {
    spans.emplace_back(static_cast<std::size_t>(it->position()),
                       static_cast<std::size_t>(it->position() + it->length()));
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    std::size_t begin = spans[i].second;
    std::size_t end = i + 1 < spans.size() ? spans[i + 1].first : s.size();
    std::string_view content = trim_view(std::string_view(s).substr(begin, end - begin));
    if (content.empty()) continue;
    std::string collapsed;
    bool pending_space = false;
    for (char c : content) {
      if (is_space(c)) {
        pending_space = true;
      } else {
        if (pending_space && !collapsed.empty()) collapsed.push_back(' ');
        pending_space = false;
        collapsed.push_back(c);
      }
    }
    steps.push_back(std::move(collapsed));
  }
  return steps;
}

std::optional<std::string> parse_choice(std::string_view value, const std::vector<std::string>& options) {
  std::string_view v = strip_decoration(value);
  if (lower(v.substr(0, 7)) == "option ") v = trim_view(v.substr(7));
  auto matches = [&](std::string_view token) -> std::optional<std::string> {
    std::string t = lower(token);
    for (const auto& label : options) {
      if (lower(label) == t) return label;
    }
    return std::nullopt;
  };
  if (auto whole = matches(strip_decoration(v))) return whole;
  // "(B) text", "B) text", "B. text", "B: text", "Yes, because ..."
  std::string_view token = v;
  if (!token.empty() && token.front() == '(') token.remove_prefix(1);
  std::size_t cut = token.find_first_of(" \t).:,;");
  if (cut != std::string_view::npos) token = token.substr(0, cut);
  return matches(token);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  auto add = [&](std::string_view name, std::size_t, std::size_t) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
  };
  scan_placeholders(body, add);
  scan_placeholders(format_suffix, add);
  return names;
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
  std::string out = substitute(tmpl.body, bindings, tmpl.id);
  if (!tmpl.format_suffix.empty()) {
    out += "\n\n";
    out += substitute(tmpl.format_suffix, bindings, tmpl.id);
  }
  return out;
}

PromptTemplate parse_template_source(std::string id, std::string_view source) {
  PromptTemplate t;
  t.id = std::move(id);
  std::size_t sep = source.find(kFormatSeparator);
  if (sep == std::string_view::npos) {
    t.body = std::string(trim_view(source));
  } else {
    t.body = std::string(trim_view(source.substr(0, sep)));
    t.format_suffix = std::string(trim_view(source.substr(sep + kFormatSeparator.size())));
  }
  return t;
}

TemplateLibrary TemplateLibrary::builtin() {
  TemplateLibrary lib;
  for (const auto& [id, source] : builtin_template_sources()) lib.put(parse_template_source(id, source));
  return lib;
}

TemplateLibrary TemplateLibrary::with_overrides(const std::filesystem::path& dir) {
  TemplateLibrary lib = builtin();
  if (!std::filesystem::is_directory(dir)) throw ConfigError("template directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::stringstream buf;
    buf << in.rdbuf();
    lib.put(parse_template_source(file.stem().string(), buf.str()));
  }
  return lib;
}

const PromptTemplate& TemplateLibrary::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw RenderError("unknown template '" + std::string(id) + "'");
  return it->second;
}

bool TemplateLibrary::contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

void TemplateLibrary::put(PromptTemplate tmpl) {
  std::string id = tmpl.id;
  templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

std::vector<std::string> TemplateLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

std::string TemplateLibrary::render(std::string_view id, const Bindings& bindings) const {
  return hallu::render(get(id), bindings);
}

// ---------------------------------------------------------------------------

std::string_view to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::numeric: return "numeric";
    case AnswerKind::freetext: return "freetext";
    case AnswerKind::choice: return "choice";
  }
  return "freetext";
}

ParseSpec ParseSpec::numeric(int tolerance) { return {AnswerKind::numeric, {}, false, tolerance}; }
ParseSpec ParseSpec::freetext(int tolerance) { return {AnswerKind::freetext, {}, false, tolerance}; }
ParseSpec ParseSpec::choice(std::vector<std::string> labels, int tolerance) {
  return {AnswerKind::choice, std::move(labels), false, tolerance};
}
ParseSpec ParseSpec::yes_no(int tolerance) { return choice({"YES", "NO"}, tolerance); }
ParseSpec ParseSpec::reasoning_plus(ParseSpec base) {
  base.with_reasoning = true;
  return base;
}

void ParseSpec::validate() const {
  if (tolerance < 0) throw ParseFailure("tolerance must be >= 0");
  if (kind == AnswerKind::choice && options.size() < 2) {
    throw ParseFailure("choice spec needs at least two option labels");
  }
}

std::string ParsedAnswer::key() const {
  return kind == AnswerKind::freetext ? normalize_text(value) : value;
}

std::optional<std::string> canonical_number(std::string_view text) {
  std::string_view s = strip_decoration(text);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  // Currency prefixes: $, and the UTF-8 encodings of euro, pound and yen.
  for (std::string_view cur : {"$", "\xE2\x82\xAC", "\xC2\xA3", "\xC2\xA5"}) {
    if (s.substr(0, cur.size()) == cur) {
      s.remove_prefix(cur.size());
      break;
    }
  }
  if (!negative && !s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  static const std::regex number_re(R"(^((?:\d{1,3}(?:,\d{3})+)|\d+)?(?:\.(\d+))?)");
  std::string str(s);
  std::smatch m;
  if (!std::regex_search(str, m, number_re) || m.length(0) == 0) return std::nullopt;
  if (!m[1].matched && !m[2].matched) return std::nullopt;
  std::string rest = str.substr(static_cast<std::size_t>(m.length(0)));
  // Anything after the number must be a unit word, a percent sign or punctuation,
  // not more digits ("1,23" or "3/4").
  if (!rest.empty()) {
    auto c = static_cast<unsigned char>(rest.front());
    bool digit_follows = rest.size() > 1 && std::isdigit(static_cast<unsigned char>(rest[1]));
    bool ok = c == '%' || std::isspace(c) ||
              ((c == '.' || c == ',' || c == ';' || c == ')' || c == '!') && !digit_follows);
    if (!ok) return std::nullopt;
  }
  std::string integer = m[1].matched ? m[1].str() : "0";
  integer.erase(std::remove(integer.begin(), integer.end(), ','), integer.end());
  std::string fraction = m[2].matched ? m[2].str() : "";
  auto nz = integer.find_first_not_of('0');
  integer = nz == std::string::npos ? "0" : integer.substr(nz);
  while (!fraction.empty() && fraction.back() == '0') fraction.pop_back();
  std::string out = integer;
  if (!fraction.empty()) out += "." + fraction;
  if (negative && out != "0") out = "-" + out;
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (unsigned char c : text) {
    if (c < 128 && std::ispunct(c)) continue;
    cleaned.push_back(static_cast<char>(c < 128 ? std::tolower(c) : c));
  }
  std::istringstream words(cleaned);
  std::string word, out;
  while (words >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

ParseOutcome try_parse(std::string_view raw, const ParseSpec& spec) {
  ParseOutcome result;
  if (spec.kind == AnswerKind::choice && spec.options.size() < 2) {
    result.failure = "choice spec needs at least two option labels";
    return result;
  }
  auto marker = last_marker(raw);
  if (!marker) {
    result.failure = "marker absent";
    return result;
  }
  if (marker->value.empty()) {
    result.failure = "empty answer after marker";
    return result;
  }
  ParsedAnswer answer;
  answer.kind = spec.kind;
  switch (spec.kind) {
    case AnswerKind::numeric: {
      auto number = canonical_number(marker->value);
      if (!number) {
        result.failure = "numeric unparseable: '" + marker->value + "'";
        return result;
      }
      answer.value = *number;
      break;
    }
    case AnswerKind::choice: {
      auto label = parse_choice(marker->value, spec.options);
      if (!label) {
        result.failure = "label not in option set: '" + marker->value + "'";
        return result;
      }
      answer.value = *label;
      break;
    }
    case AnswerKind::freetext: {
      std::string_view v = strip_decoration(marker->value);
      while (!v.empty() && v.back() == '.') v = strip_decoration(v.substr(0, v.size() - 1));
      if (v.empty()) {
        result.failure = "empty answer after marker";
        return result;
      }
      answer.value = std::string(v);
      break;
    }
  }
  if (spec.with_reasoning) {
    auto steps = collect_steps(raw.substr(0, marker->start));
    if (steps.empty()) {
      result.failure = "steps absent";
      return result;
    }
    answer.reasoning_steps = std::move(steps);
  }
  result.answer = std::move(answer);
  return result;
}

ParsedAnswer parse(std::string_view raw, const ParseSpec& spec) {
  auto outcome = try_parse(raw, spec);
  if (!outcome) throw ParseFailure(outcome.failure);
  return std::move(*outcome.answer);
}

std::string to_marker_text(const ParsedAnswer& answer) {
  std::string out;
  if (answer.reasoning_steps) {
    for (std::size_t i = 0; i < answer.reasoning_steps->size(); ++i) {
      out += "STEP " + std::to_string(i + 1) + ": " + (*answer.reasoning_steps)[i] + "\n";
    }
  }
  out += "FINAL ANSWER: " + answer.value;
  return out;
}

AskResult ask_with_tolerance(const LlmClient& client, const CompletionRequest& request,
                             const ParseSpec& spec) {
  spec.validate();
  std::string last_failure;
  std::string last_reply;
  for (int attempt = 0; attempt <= spec.tolerance; ++attempt) {
    CompletionRequest req = request;
    if (attempt > 0 && req.seed) req.seed = derive_seed(*req.seed, 0xA77E0000ULL + attempt);
    CompletionResponse response = client.complete(req);
    auto outcome = try_parse(response.content, spec);
    if (outcome) return AskResult{std::move(*outcome.answer), attempt + 1, std::move(response.content)};
    last_failure = outcome.failure;
    last_reply = std::move(response.content);
    if (client.transcript()) {
      client.transcript()->note(request.conversation_id,
                                "parse failure (attempt " + std::to_string(attempt + 1) + "): " + last_failure);
    }
  }
  throw ToleranceExceeded("tolerance exceeded after " + std::to_string(spec.tolerance + 1) +
                              " attempts: " + last_failure,
                          spec.tolerance + 1, std::move(last_reply));
}

}  // namespace hallu
