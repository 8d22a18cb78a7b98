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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "hallu/gateway.hpp"
#include "hallu/net.hpp"

namespace hallu {

enum class ToolErrorKind { unknown_tool, bad_arguments, execution_error, timeout, network };

std::string_view to_string(ToolErrorKind kind);

// Outcome of one tool invocation. Failures are values: an agent sees the
// error text as its observation.
struct ToolResult {
  bool ok = true;
  std::string content;  // never empty
  std::optional<ToolErrorKind> error_kind;

  static ToolResult success(std::string content);
  static ToolResult failure(ToolErrorKind kind, std::string content);
};

inline constexpr std::size_t kEncyclopediaCharLimit = 1200;
inline constexpr std::size_t kSearchCharLimit = 1500;

// Truncates to at most `max_chars` UTF-8 code points without splitting one.
std::string truncate_chars(std::string_view text, std::size_t max_chars);
std::size_t count_chars(std::string_view text);

// ---------------------------------------------------------------------------
// Client interfaces
// ---------------------------------------------------------------------------

class Encyclopedia {
 public:
  virtual ~Encyclopedia() = default;
  // Lead summary of the best matching article, at most kEncyclopediaCharLimit characters.
  virtual ToolResult lookup(std::string_view query) = 0;
};

class WebSearch {
 public:
  virtual ~WebSearch() = default;
  // Top result snippets, concatenated, at most kSearchCharLimit characters.
  virtual ToolResult search(std::string_view query) = 0;
};

class CodeExecutor {
 public:
  virtual ~CodeExecutor() = default;
  virtual ToolResult execute(std::string_view source) = 0;
};

struct EntityCandidate {
  std::string id;
  std::string label;
  std::string description;
};

struct PropertyRef {
  std::string id;
  std::string label;
};

struct Triple {
  std::string subject_label;
  std::string property_label;
  std::string value_text;  // multiple values joined with "; "

  std::string to_text() const;
};

// All operations throw KgClientError on failure (network, timeout, not_found).
class KnowledgeGraph {
 public:
  virtual ~KnowledgeGraph() = default;
  virtual std::vector<EntityCandidate> search_entities(std::string_view term) = 0;  // at most 5
  virtual std::vector<PropertyRef> list_properties(std::string_view entity_id) = 0;
  virtual Triple get_property(std::string_view entity_id, std::string_view property_id) = 0;
};

inline constexpr std::size_t kMaxEntityCandidates = 5;

// ---------------------------------------------------------------------------
// Live clients
// ---------------------------------------------------------------------------

struct LiveClientOptions {
  std::string user_agent = "hallu-harness/1.0 (research evaluation harness)";
  std::chrono::milliseconds timeout{15000};
};

// Wikipedia REST API: title search, then the page summary endpoint.
class WikipediaClient final : public Encyclopedia {
 public:
  WikipediaClient(net::HttpTransport transport, LiveClientOptions options = {},
                  std::string base_url = "https://en.wikipedia.org");
  ToolResult lookup(std::string_view query) override;

 private:
  net::HttpTransport transport_;
  LiveClientOptions options_;
  std::string base_url_;
};

// DuckDuckGo HTML endpoint, parsed for result titles and snippets.
class DuckDuckGoClient final : public WebSearch {
 public:
  DuckDuckGoClient(net::HttpTransport transport, LiveClientOptions options = {},
                   std::string base_url = "https://html.duckduckgo.com");
  ToolResult search(std::string_view query) override;

 private:
  net::HttpTransport transport_;
  LiveClientOptions options_;
  std::string base_url_;
};

// Extracts (title, snippet) pairs from a DuckDuckGo HTML result page.
std::vector<std::pair<std::string, std::string>> parse_duckduckgo_html(std::string_view html);

// Wikidata API: wbsearchentities, wbgetclaims and wbgetentities (labels).
class WikidataClient final : public KnowledgeGraph {
 public:
  WikidataClient(net::HttpTransport transport, LiveClientOptions options = {},
                 std::string base_url = "https://www.wikidata.org");
  std::vector<EntityCandidate> search_entities(std::string_view term) override;
  std::vector<PropertyRef> list_properties(std::string_view entity_id) override;
  Triple get_property(std::string_view entity_id, std::string_view property_id) override;

 private:
  json get(const std::string& query);
  std::map<std::string, std::string> labels(const std::vector<std::string>& ids);

  net::HttpTransport transport_;
  LiveClientOptions options_;
  std::string base_url_;
};

// ---------------------------------------------------------------------------
// Fixture-backed fakes
// ---------------------------------------------------------------------------
//
// Fixture document (every section optional):
// {
//   "encyclopedia": {"articles": [{"title", "summary", "keywords": [..]}],
//                    "faults": {"<query substring>": "timeout" | "network"}},
//   "web_search":   {"results": [{"match": [..], "snippets": [..]}], "faults": {..}},
//   "knowledge_graph": {"entities": [{"id", "label", "description", "aliases": [..],
//                        "claims": {"P106": {"label": "occupation", "values": [..]}}}],
//                       "faults": {..}}
// }
// Matching is case-insensitive substring matching against the query.

class FixtureEncyclopedia final : public Encyclopedia {
 public:
  explicit FixtureEncyclopedia(json section);
  ToolResult lookup(std::string_view query) override;

 private:
  json section_;
};

class FixtureWebSearch final : public WebSearch {
 public:
  explicit FixtureWebSearch(json section);
  ToolResult search(std::string_view query) override;

 private:
  json section_;
};

class FixtureKnowledgeGraph final : public KnowledgeGraph {
 public:
  explicit FixtureKnowledgeGraph(json section);
  std::vector<EntityCandidate> search_entities(std::string_view term) override;
  std::vector<PropertyRef> list_properties(std::string_view entity_id) override;
  Triple get_property(std::string_view entity_id, std::string_view property_id) override;

 private:
  const json& entity(std::string_view id) const;
  void maybe_fault(std::string_view key) const;
  json section_;
};

json load_fixture_document(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sandboxed code execution
// ---------------------------------------------------------------------------

struct SandboxOptions {
  std::string interpreter = "python3";
  std::chrono::milliseconds wall_clock{10000};
  std::size_t memory_limit_bytes = std::size_t{512} << 20;
  std::size_t output_limit_bytes = std::size_t{64} << 10;
  int max_concurrent = 2;
};

// Runs Python source in a child interpreter: fresh temp directory as cwd,
// no site-packages, network and out-of-sandbox file access blocked, hard
// wall-clock and memory limits. At most max_concurrent children at a time.
class SubprocessSandbox final : public CodeExecutor {
 public:
  explicit SubprocessSandbox(SandboxOptions options = {});
  ToolResult execute(std::string_view source) override;

  const SandboxOptions& options() const { return options_; }

 private:
  SandboxOptions options_;
  std::string interpreter_path_;
  std::counting_semaphore<64> slots_;
};

// Resolves an interpreter name against PATH; empty when not found.
std::string find_executable(const std::string& name);

// ---------------------------------------------------------------------------
// Tool operations and registry
// ---------------------------------------------------------------------------

ToolSpec wikipedia_lookup_spec();
ToolSpec web_search_spec();
ToolSpec exec_code_spec();

// Argument-validating wrappers; never throw.
ToolResult wikipedia_lookup(Encyclopedia& client, const json& args);
ToolResult web_search(WebSearch& client, const json& args);
ToolResult exec_code(CodeExecutor& executor, const json& args);

class ToolRegistry {
 public:
  using Handler = std::function<ToolResult(const json& arguments)>;

  // Throws ConfigError on a duplicate name or an invalid spec.
  void add(ToolSpec spec, Handler handler);

  bool contains(std::string_view name) const;
  const ToolSpec& spec(std::string_view name) const;
  std::vector<std::string> names() const;

  // Unknown tools, bad arguments and handler exceptions all come back as
  // failed results.
  ToolResult execute(const ToolCall& call) const noexcept;

  // wikipedia_lookup, web_search and exec_code over the given clients.
  static ToolRegistry standard(std::shared_ptr<Encyclopedia> encyclopedia,
                               std::shared_ptr<WebSearch> search,
                               std::shared_ptr<CodeExecutor> executor);

 private:
  struct Entry {
    ToolSpec spec;
    Handler handler;
  };
  std::map<std::string, Entry, std::less<>> tools_;
};

}  // namespace hallu
