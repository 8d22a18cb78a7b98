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

#include "hallu/tools.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "hallu/error.hpp"

namespace hallu {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return !needle.empty() && lower(haystack).find(lower(needle)) != std::string::npos;
}

std::optional<ToolResult> fixture_fault(const json& section, std::string_view query) {
  if (!section.contains("faults")) return std::nullopt;
  for (const auto& [key, kind] : section.at("faults").items()) {
    if (!contains_ci(query, key)) continue;
    if (kind == "timeout") return ToolResult::failure(ToolErrorKind::timeout, "request timed out");
    return ToolResult::failure(ToolErrorKind::network, "network error (injected)");
  }
  return std::nullopt;
}

std::optional<ToolResult> transport_failure(const net::HttpResponse& resp) {
  if (resp.error == net::TransportError::timeout) {
    return ToolResult::failure(ToolErrorKind::timeout, "request timed out: " + resp.error_message);
  }
  if (resp.transport_failed()) {
    return ToolResult::failure(ToolErrorKind::network, "network error: " + resp.error_message);
  }
  return std::nullopt;
}

net::HttpRequest get_request(std::string url, const LiveClientOptions& options) {
  net::HttpRequest req;
  req.method = "GET";
  req.url = std::move(url);
  req.headers = {{"User-Agent", options.user_agent}};
  req.timeout = options.timeout;
  return req;
}

std::string strip_tags(std::string_view html) {
  std::string out;
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') in_tag = true;
    else if (c == '>') in_tag = false;
    else if (!in_tag) out += c;
  }
  static const std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"}, {"&quot;", "\""}, {"&#x27;", "'"}, {"&#39;", "'"}, {"&lt;", "<"}, {"&gt;", ">"},
      {"&nbsp;", " "}};
  for (const auto& [from, to] : kEntities) {
    for (auto pos = out.find(from); pos != std::string::npos; pos = out.find(from, pos + to.size())) {
      out.replace(pos, from.size(), to);
    }
  }
  std::string collapsed;
  bool space = false;
  for (char c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !collapsed.empty();
    } else {
      if (space) collapsed += ' ';
      collapsed += c;
      space = false;
    }
  }
  return collapsed;
}

// Inner HTML of the element whose opening tag contains `marker`, starting at `from`.
std::optional<std::pair<std::string, std::size_t>> element_after(std::string_view html, std::string_view marker,
                                                                 std::size_t from) {
  auto at = html.find(marker, from);
  if (at == std::string_view::npos) return std::nullopt;
  auto open_end = html.find('>', at);
  if (open_end == std::string_view::npos) return std::nullopt;
  auto tag_start = html.rfind('<', at);
  auto name_end = html.find_first_of(" \t\n>", tag_start + 1);
  std::string close = "</" + std::string(html.substr(tag_start + 1, name_end - tag_start - 1)) + ">";
  auto close_at = html.find(close, open_end);
  if (close_at == std::string_view::npos) return std::nullopt;
  return std::make_pair(std::string(html.substr(open_end + 1, close_at - open_end - 1)), close_at);
}

std::optional<std::string> string_arg(const json& args, const char* name) {
  if (!args.is_object() || !args.contains(name) || !args.at(name).is_string()) return std::nullopt;
  std::string value = args.at(name).get<std::string>();
  if (value.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  return value;
}

ToolSpec single_string_spec(std::string name, std::string description, std::string param,
                            std::string param_description) {
  ToolSpec spec;
  spec.name = std::move(name);
  spec.description = std::move(description);
  spec.parameters = {{"type", "object"},
                     {"properties", {{param, {{"type", "string"}, {"description", param_description}}}}},
                     {"required", json::array({param})}};
  return spec;
}

}  // namespace

std::string_view to_string(ToolErrorKind kind) {
  switch (kind) {
    case ToolErrorKind::unknown_tool: return "unknown_tool";
    case ToolErrorKind::bad_arguments: return "bad_arguments";
    case ToolErrorKind::execution_error: return "execution_error";
    case ToolErrorKind::timeout: return "timeout";
    case ToolErrorKind::network: return "network";
  }
  return "execution_error";
}

ToolResult ToolResult::success(std::string content) {
  if (content.empty()) content = "(no output)";
  return {true, std::move(content), std::nullopt};
}

ToolResult ToolResult::failure(ToolErrorKind kind, std::string content) {
  if (content.empty()) content = std::string(to_string(kind));
  return {false, std::move(content), kind};
}

std::size_t count_chars(std::string_view text) {
  return static_cast<std::size_t>(
      std::count_if(text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string truncate_chars(std::string_view text, std::size_t max_chars) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
    if (seen == max_chars) return std::string(text.substr(0, i));
    ++seen;
  }
  return std::string(text);
}

// ---------------------------------------------------------------------------

WikipediaClient::WikipediaClient(net::HttpTransport transport, LiveClientOptions options, std::string base_url)
    : transport_(std::move(transport)), options_(std::move(options)), base_url_(std::move(base_url)) {}

ToolResult WikipediaClient::lookup(std::string_view query) {
  try {
    auto found = transport_(get_request(
        base_url_ + "/w/rest.php/v1/search/title?limit=1&q=" + net::url_encode(query), options_));
    if (auto f = transport_failure(found)) return *f;
    if (found.status < 200 || found.status >= 300) {
      return ToolResult::failure(ToolErrorKind::network, "search returned HTTP " + std::to_string(found.status));
    }
    auto pages = json::parse(found.body).value("pages", json::array());
    if (pages.empty()) return ToolResult::success("no article found");
    std::string key = pages.front().value("key", "");

    auto page = transport_(get_request(base_url_ + "/api/rest_v1/page/summary/" + net::url_encode(key), options_));
    if (auto f = transport_failure(page)) return *f;
    if (page.status == 404) return ToolResult::success("no article found");
    if (page.status < 200 || page.status >= 300) {
      return ToolResult::failure(ToolErrorKind::network, "summary returned HTTP " + std::to_string(page.status));
    }
    auto summary = json::parse(page.body);
    std::string text = summary.value("title", key) + ": " + summary.value("extract", "");
    return ToolResult::success(truncate_chars(text, kEncyclopediaCharLimit));
  } catch (const json::exception& e) {
    return ToolResult::failure(ToolErrorKind::execution_error, std::string("unreadable reply: ") + e.what());
  }
}

DuckDuckGoClient::DuckDuckGoClient(net::HttpTransport transport, LiveClientOptions options, std::string base_url)
    : transport_(std::move(transport)), options_(std::move(options)), base_url_(std::move(base_url)) {}

std::vector<std::pair<std::string, std::string>> parse_duckduckgo_html(std::string_view html) {
  std::vector<std::pair<std::string, std::string>> results;
  std::size_t pos = 0;
  while (auto title = element_after(html, "class=\"result__a\"", pos)) {
    pos = title->second;
    std::string snippet;
    auto next_title = html.find("class=\"result__a\"", pos);
    if (auto s = element_after(html, "class=\"result__snippet\"", pos); s && s->second < next_title) {
      snippet = strip_tags(s->first);
      pos = s->second;
    }
    results.emplace_back(strip_tags(title->first), std::move(snippet));
  }
  return results;
}

ToolResult DuckDuckGoClient::search(std::string_view query) {
  auto resp = transport_(get_request(base_url_ + "/html/?q=" + net::url_encode(query), options_));
  if (auto f = transport_failure(resp)) return *f;
  if (resp.status != 200) {
    return ToolResult::failure(ToolErrorKind::network, "search returned HTTP " + std::to_string(resp.status) +
                                                           (resp.status == 202 || resp.status == 429
                                                                ? " (rate limited)"
                                                                : ""));
  }
  auto results = parse_duckduckgo_html(resp.body);
  if (results.empty()) return ToolResult::success("no results");
  std::string text;
  for (const auto& [title, snippet] : results) {
    if (!text.empty()) text += "\n";
    text += title + ": " + snippet;
  }
  return ToolResult::success(truncate_chars(text, kSearchCharLimit));
}

// ---------------------------------------------------------------------------

FixtureEncyclopedia::FixtureEncyclopedia(json section) : section_(std::move(section)) {}

ToolResult FixtureEncyclopedia::lookup(std::string_view query) {
  if (auto f = fixture_fault(section_, query)) return *f;
  for (const auto& article : section_.value("articles", json::array())) {
    bool hit = contains_ci(query, article.value("title", ""));
    for (const auto& k : article.value("keywords", json::array())) hit = hit || contains_ci(query, k.get<std::string>());
    if (hit) {
      std::string text = article.value("title", "") + ": " + article.value("summary", "");
      return ToolResult::success(truncate_chars(text, kEncyclopediaCharLimit));
    }
  }
  return ToolResult::success("no article found");
}

FixtureWebSearch::FixtureWebSearch(json section) : section_(std::move(section)) {}

ToolResult FixtureWebSearch::search(std::string_view query) {
  if (auto f = fixture_fault(section_, query)) return *f;
  for (const auto& entry : section_.value("results", json::array())) {
    bool hit = false;
    for (const auto& m : entry.value("match", json::array())) hit = hit || contains_ci(query, m.get<std::string>());
    if (!hit) continue;
    std::string text;
    for (const auto& s : entry.value("snippets", json::array())) {
      if (!text.empty()) text += "\n";
      text += s.get<std::string>();
    }
    return ToolResult::success(truncate_chars(text, kSearchCharLimit));
  }
  return ToolResult::success("no results");
}

json load_fixture_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tool fixture file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("tool fixture file " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

ToolSpec wikipedia_lookup_spec() {
  return single_string_spec("wikipedia_lookup",
                            "Look up a topic on Wikipedia and return the summary of the best matching article. "
                            "Useful for questions about people, places, things and historical facts.",
                            "query", "Topic or title to look up");
}

ToolSpec web_search_spec() {
  return single_string_spec("web_search",
                            "Search the web with DuckDuckGo and return the top result snippets. "
                            "Useful for general or up-to-date information.",
                            "query", "Search query");
}

ToolSpec exec_code_spec() {
  return single_string_spec("exec_code",
                            "Execute Python code in a secure sandbox and return what it prints to stdout. "
                            "Use print() to output results. Useful for calculations.",
                            "source", "Python source code to run");
}

ToolResult wikipedia_lookup(Encyclopedia& client, const json& args) {
  auto query = string_arg(args, "query");
  if (!query) return ToolResult::failure(ToolErrorKind::bad_arguments, "wikipedia_lookup requires a non-empty 'query'");
  return client.lookup(*query);
}

ToolResult web_search(WebSearch& client, const json& args) {
  auto query = string_arg(args, "query");
  if (!query) return ToolResult::failure(ToolErrorKind::bad_arguments, "web_search requires a non-empty 'query'");
  return client.search(*query);
}

ToolResult exec_code(CodeExecutor& executor, const json& args) {
  auto source = string_arg(args, "source");
  if (!source) return ToolResult::failure(ToolErrorKind::bad_arguments, "exec_code requires a non-empty 'source'");
  return executor.execute(*source);
}

void ToolRegistry::add(ToolSpec spec, Handler handler) {
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid tool spec: ") + e.what());
  }
  if (tools_.contains(spec.name)) throw ConfigError("duplicate tool name: " + spec.name);
  std::string name = spec.name;
  tools_.emplace(std::move(name), Entry{std::move(spec), std::move(handler)});
}

bool ToolRegistry::contains(std::string_view name) const { return tools_.find(name) != tools_.end(); }

const ToolSpec& ToolRegistry::spec(std::string_view name) const {
  auto it = tools_.find(name);
  if (it == tools_.end()) throw UnknownToolConfigured("unknown tool: " + std::string(name));
  return it->second.spec;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : tools_) out.push_back(name);
  return out;
}

ToolResult ToolRegistry::execute(const ToolCall& call) const noexcept {
  try {
    auto it = tools_.find(call.name);
    if (it == tools_.end()) {
      std::string available;
      for (const auto& [name, entry] : tools_) available += (available.empty() ? "" : ", ") + name;
      return ToolResult::failure(ToolErrorKind::unknown_tool,
                                 "Unknown tool '" + call.name + "'. Available tools: " + available);
    }
    if (!call.arguments.is_object()) {
      return ToolResult::failure(ToolErrorKind::bad_arguments, "arguments must be a JSON object");
    }
    return it->second.handler(call.arguments);
  } catch (const std::exception& e) {
    return ToolResult::failure(ToolErrorKind::execution_error, e.what());
  } catch (...) {
    return ToolResult::failure(ToolErrorKind::execution_error, "unknown error");
  }
}

ToolRegistry ToolRegistry::standard(std::shared_ptr<Encyclopedia> encyclopedia, std::shared_ptr<WebSearch> search,
                                    std::shared_ptr<CodeExecutor> executor) {
  ToolRegistry registry;
  if (encyclopedia) {
    registry.add(wikipedia_lookup_spec(), [encyclopedia](const json& a) { return wikipedia_lookup(*encyclopedia, a); });
  }
  if (search) {
    registry.add(web_search_spec(), [search](const json& a) { return web_search(*search, a); });
  }
  if (executor) {
    registry.add(exec_code_spec(), [executor](const json& a) { return exec_code(*executor, a); });
  }
  return registry;
}

}  // namespace hallu
