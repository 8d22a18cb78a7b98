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

#include <algorithm>
#include <cctype>
#include <set>

#include "hallu/error.hpp"
#include "hallu/tools.hpp"

namespace hallu {

namespace {

bool contains_ci(std::string_view haystack, std::string_view needle) {
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) ==
                                                    std::tolower(static_cast<unsigned char>(b)); });
  return !needle.empty() && it != haystack.end();
}

bool well_formed_id(std::string_view id, char prefix) {
  return id.size() >= 2 && id[0] == prefix &&
         std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

void require_id(std::string_view id, char prefix) {
  if (!well_formed_id(id, prefix)) {
    throw KgClientError(KgErrorKind::not_found, "malformed id '" + std::string(id) + "'");
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

std::string Triple::to_text() const { return "(" + subject_label + ", " + property_label + ", " + value_text + ")"; }

// ---------------------------------------------------------------------------

WikidataClient::WikidataClient(net::HttpTransport transport, LiveClientOptions options, std::string base_url)
    : transport_(std::move(transport)), options_(std::move(options)), base_url_(std::move(base_url)) {}

json WikidataClient::get(const std::string& query) {
  net::HttpRequest req;
  req.url = base_url_ + "/w/api.php?format=json&" + query;
  req.headers = {{"User-Agent", options_.user_agent}};
  req.timeout = options_.timeout;
  auto resp = transport_(req);
  if (resp.error == net::TransportError::timeout) throw KgClientError(KgErrorKind::timeout, "wikidata timed out");
  if (resp.transport_failed()) throw KgClientError(KgErrorKind::network, "wikidata: " + resp.error_message);
  if (resp.status < 200 || resp.status >= 300) {
    throw KgClientError(KgErrorKind::network, "wikidata returned HTTP " + std::to_string(resp.status));
  }
  json body;
  try {
    body = json::parse(resp.body);
  } catch (const json::exception& e) {
    throw KgClientError(KgErrorKind::network, std::string("wikidata reply unreadable: ") + e.what());
  }
  if (body.contains("error")) {
    std::string code = body["error"].value("code", "");
    std::string info = body["error"].value("info", code);
    if (code == "no-such-entity" || code.find("invalid") != std::string::npos) {
      throw KgClientError(KgErrorKind::not_found, "wikidata: " + info);
    }
    throw KgClientError(KgErrorKind::network, "wikidata: " + info);
  }
  return body;
}

std::map<std::string, std::string> WikidataClient::labels(const std::vector<std::string>& ids) {
  std::map<std::string, std::string> out;
  for (std::size_t start = 0; start < ids.size(); start += 50) {
    std::vector<std::string> chunk(ids.begin() + start, ids.begin() + std::min(ids.size(), start + 50));
    auto body = get("action=wbgetentities&props=labels&languages=en&ids=" + net::url_encode(join(chunk, "|")));
    const json entities = body.value("entities", json::object());
    for (const auto& [id, entity] : entities.items()) {
      if (entity.contains("labels") && entity["labels"].contains("en")) {
        out[id] = entity["labels"]["en"].value("value", id);
      } else {
        out[id] = id;
      }
    }
  }
  return out;
}

std::vector<EntityCandidate> WikidataClient::search_entities(std::string_view term) {
  if (term.empty()) throw KgClientError(KgErrorKind::not_found, "empty search term");
  auto body = get("action=wbsearchentities&language=en&type=item&limit=" + std::to_string(kMaxEntityCandidates) +
                  "&search=" + net::url_encode(term));
  std::vector<EntityCandidate> out;
  for (const auto& hit : body.value("search", json::array())) {
    if (out.size() == kMaxEntityCandidates) break;
    out.push_back({hit.value("id", ""), hit.value("label", ""), hit.value("description", "")});
  }
  return out;
}

std::vector<PropertyRef> WikidataClient::list_properties(std::string_view entity_id) {
  require_id(entity_id, 'Q');
  auto body = get("action=wbgetclaims&entity=" + std::string(entity_id));
  std::vector<std::string> ids;
  const json claims = body.value("claims", json::object());
  for (const auto& [pid, claim] : claims.items()) ids.push_back(pid);
  auto names = labels(ids);
  std::vector<PropertyRef> out;
  for (const auto& pid : ids) out.push_back({pid, names.count(pid) ? names[pid] : pid});
  return out;
}

Triple WikidataClient::get_property(std::string_view entity_id, std::string_view property_id) {
  require_id(entity_id, 'Q');
  require_id(property_id, 'P');
  auto body = get("action=wbgetclaims&entity=" + std::string(entity_id) + "&property=" + std::string(property_id));
  auto claims = body.value("claims", json::object()).value(std::string(property_id), json::array());
  if (claims.empty()) {
    throw KgClientError(KgErrorKind::not_found,
                        std::string(entity_id) + " has no claim for " + std::string(property_id));
  }

  std::vector<std::string> raw_values;
  std::vector<std::string> entity_refs{std::string(entity_id), std::string(property_id)};
  for (const auto& claim : claims) {
    const auto& snak = claim.value("mainsnak", json::object());
    if (!snak.contains("datavalue")) continue;
    const auto& dv = snak["datavalue"];
    const auto& v = dv["value"];
    std::string type = dv.value("type", "");
    if (type == "wikibase-entityid") {
      std::string id = v.value("id", "");
      entity_refs.push_back(id);
      raw_values.push_back("@" + id);
    } else if (type == "string") {
      raw_values.push_back(v.get<std::string>());
    } else if (type == "monolingualtext") {
      raw_values.push_back(v.value("text", ""));
    } else if (type == "time") {
      raw_values.push_back(v.value("time", ""));
    } else if (type == "quantity") {
      raw_values.push_back(v.value("amount", ""));
    } else {
      raw_values.push_back(dv.dump());
    }
  }
  auto names = labels(entity_refs);
  std::vector<std::string> values;
  for (auto& r : raw_values) {
    if (!r.empty() && r[0] == '@') {
      auto id = r.substr(1);
      values.push_back(names.count(id) ? names[id] : id);
    } else {
      values.push_back(r);
    }
  }
  return {names[std::string(entity_id)], names[std::string(property_id)], join(values, "; ")};
}

// ---------------------------------------------------------------------------

FixtureKnowledgeGraph::FixtureKnowledgeGraph(json section) : section_(std::move(section)) {}

void FixtureKnowledgeGraph::maybe_fault(std::string_view key) const {
  if (!section_.contains("faults")) return;
  for (const auto& [needle, kind] : section_["faults"].items()) {
    if (!contains_ci(key, needle)) continue;
    if (kind == "timeout") throw KgClientError(KgErrorKind::timeout, "knowledge graph timed out (injected)");
    throw KgClientError(KgErrorKind::network, "knowledge graph network error (injected)");
  }
}

const json& FixtureKnowledgeGraph::entity(std::string_view id) const {
  if (auto it = section_.find("entities"); it != section_.end()) {
    for (const auto& e : *it) {
      if (e.value("id", "") == id) return e;
    }
  }
  throw KgClientError(KgErrorKind::not_found, "unknown entity " + std::string(id));
}

std::vector<EntityCandidate> FixtureKnowledgeGraph::search_entities(std::string_view term) {
  if (term.empty()) throw KgClientError(KgErrorKind::not_found, "empty search term");
  maybe_fault(term);
  std::vector<EntityCandidate> out;
  for (const auto& e : section_.value("entities", json::array())) {
    bool hit = contains_ci(e.value("label", ""), term) || contains_ci(term, e.value("label", ""));
    for (const auto& a : e.value("aliases", json::array())) {
      hit = hit || contains_ci(a.get<std::string>(), term) || contains_ci(term, a.get<std::string>());
    }
    if (hit && out.size() < kMaxEntityCandidates) {
      out.push_back({e.value("id", ""), e.value("label", ""), e.value("description", "")});
    }
  }
  return out;
}

std::vector<PropertyRef> FixtureKnowledgeGraph::list_properties(std::string_view entity_id) {
  maybe_fault(entity_id);
  const json& e = entity(entity_id);
  std::vector<PropertyRef> out;
  const json claims = e.value("claims", json::object());
  for (const auto& [pid, claim] : claims.items()) {
    out.push_back({pid, claim.value("label", pid)});
  }
  return out;
}

Triple FixtureKnowledgeGraph::get_property(std::string_view entity_id, std::string_view property_id) {
  maybe_fault(entity_id);
  const json& e = entity(entity_id);
  auto claims = e.value("claims", json::object());
  if (!claims.contains(std::string(property_id))) {
    throw KgClientError(KgErrorKind::not_found,
                        std::string(entity_id) + " has no claim for " + std::string(property_id));
  }
  const auto& claim = claims[std::string(property_id)];
  std::vector<std::string> values;
  for (const auto& v : claim.value("values", json::array())) values.push_back(v.get<std::string>());
  return {e.value("label", ""), claim.value("label", std::string(property_id)), join(values, "; ")};
}

}  // namespace hallu
