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

#include "hallu/wire.hpp"

#include <algorithm>
#include <cctype>

#include "hallu/error.hpp"
#include "hallu/hashing.hpp"

namespace hallu::wire {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

bool mentions_context_overflow(std::string_view body) {
  auto lower = lowercase(body);
  return lower.find("context length") != std::string::npos ||
         lower.find("context_length") != std::string::npos ||
         lower.find("context window") != std::string::npos ||
         lower.find("too many tokens") != std::string::npos;
}

namespace {

json parse_json_or_throw(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw MalformedBackendReply("reply is not JSON");
  if (j.contains("error")) {
    std::string msg = j["error"].is_object() ? j["error"].value("message", j["error"].dump())
                                             : j["error"].dump();
    if (mentions_context_overflow(msg)) throw ContextOverflow(msg);
    throw MalformedBackendReply("backend error: " + msg);
  }
  return j;
}

FinishReason finish_from(std::string_view reason) {
  if (reason == "length") return FinishReason::length;
  if (reason == "error") return FinishReason::error;
  return FinishReason::stop;
}

json message_to_json(const ChatMessage& m, bool arguments_as_string) {
  json out{{"role", to_string(m.role)}, {"content", m.content}};
  if (!m.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& c : m.tool_calls) {
      json fn{{"name", c.name},
              {"arguments", arguments_as_string ? json(c.arguments.dump()) : c.arguments}};
      json call{{"type", "function"}, {"function", fn}};
      if (!c.id.empty()) call["id"] = c.id;
      calls.push_back(std::move(call));
    }
    out["tool_calls"] = std::move(calls);
  }
  if (m.role == Role::tool) {
    if (!m.tool_call_id.empty()) out["tool_call_id"] = m.tool_call_id;
    if (!m.name.empty()) out["name"] = m.name;
  }
  return out;
}

// Shared decoding of a tool_calls array; arguments may be a JSON object
// (Ollama) or a string holding JSON (OpenAI).
void decode_tool_calls(const json& calls, CompletionResponse& out) {
  if (!calls.is_array()) {
    out.tool_call_error = "tool_calls is not a list";
    return;
  }
  int index = 0;
  for (const auto& c : calls) {
    if (!c.is_object() || !c.contains("function") || !c["function"].is_object() ||
        !c["function"].contains("name") || !c["function"]["name"].is_string()) {
      out.tool_call_error = "tool call without a function name";
      out.tool_calls.clear();
      return;
    }
    ToolCall call;
    call.id = c.contains("id") && c["id"].is_string() ? c["id"].get<std::string>()
                                                       : "call_" + std::to_string(index);
    call.name = c["function"]["name"].get<std::string>();
    const json args = c["function"].value("arguments", json::object());
    if (args.is_string()) {
      json parsed = json::parse(args.get<std::string>(), nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        out.tool_call_error = "arguments of call '" + call.name + "' are not a JSON object";
        out.tool_calls.clear();
        return;
      }
      call.arguments = std::move(parsed);
    } else if (args.is_object()) {
      call.arguments = args;
    } else {
      out.tool_call_error = "arguments of call '" + call.name + "' are not an object";
      out.tool_calls.clear();
      return;
    }
    out.tool_calls.push_back(std::move(call));
    ++index;
  }
}

}  // namespace

json tool_spec_to_json(const ToolSpec& spec) {
  return {{"type", "function"},
          {"function",
           {{"name", spec.name}, {"description", spec.description}, {"parameters", spec.parameters}}}};
}

json openai_request_body(const CompletionRequest& request, const std::string& model,
                         std::span<const ToolSpec> tools) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back(message_to_json(m, true));
  json body{{"model", model}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
  if (request.seed) body["seed"] = wire_seed(*request.seed);
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
  if (!tools.empty()) {
    json specs = json::array();
    for (const auto& t : tools) specs.push_back(tool_spec_to_json(t));
    body["tools"] = std::move(specs);
  }
  return body;
}

CompletionResponse parse_openai_reply(std::string_view body) {
  json j = parse_json_or_throw(body);
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw MalformedBackendReply("reply has no choices");
  }
  const json& choice = j["choices"][0];
  if (!choice.contains("message") || !choice["message"].is_object()) {
    throw MalformedBackendReply("choice has no message");
  }
  const json& message = choice["message"];
  bool has_content = message.contains("content") && message["content"].is_string();
  bool has_calls = message.contains("tool_calls") && !message["tool_calls"].is_null();
  if (!has_content && !has_calls) throw MalformedBackendReply("message has no content field");

  CompletionResponse out;
  if (has_content) out.content = message["content"].get<std::string>();
  if (has_calls) decode_tool_calls(message["tool_calls"], out);
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    out.finish_reason = finish_from(choice["finish_reason"].get<std::string>());
  }
  if (j.contains("usage") && j["usage"].is_object()) {
    out.usage = Usage{j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0)};
  }
  return out;
}

json ollama_request_body(const CompletionRequest& request, const std::string& model,
                         std::span<const ToolSpec> tools) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back(message_to_json(m, false));
  json options{{"temperature", request.temperature}};
  if (request.seed) options["seed"] = wire_seed(*request.seed);
  if (request.max_tokens) options["num_predict"] = *request.max_tokens;
  json body{{"model", model}, {"messages", std::move(messages)}, {"options", std::move(options)},
            {"stream", false}};
  if (!tools.empty()) {
    json specs = json::array();
    for (const auto& t : tools) specs.push_back(tool_spec_to_json(t));
    body["tools"] = std::move(specs);
  }
  return body;
}

CompletionResponse parse_ollama_reply(std::string_view body) {
  json j = parse_json_or_throw(body);
  if (!j.contains("message") || !j["message"].is_object()) {
    throw MalformedBackendReply("reply has no message");
  }
  const json& message = j["message"];
  bool has_content = message.contains("content") && message["content"].is_string();
  bool has_calls = message.contains("tool_calls") && !message["tool_calls"].is_null();
  if (!has_content && !has_calls) throw MalformedBackendReply("message has no content field");
  CompletionResponse out;
  if (has_content) out.content = message["content"].get<std::string>();
  if (has_calls) decode_tool_calls(message["tool_calls"], out);
  if (j.contains("done_reason") && j["done_reason"].is_string()) {
    out.finish_reason = finish_from(j["done_reason"].get<std::string>());
  }
  if (j.contains("prompt_eval_count") || j.contains("eval_count")) {
    out.usage = Usage{j.value("prompt_eval_count", 0), j.value("eval_count", 0)};
  }
  return out;
}

std::string endpoint_url(const BackendConfig& config) {
  std::string base = config.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  switch (config.kind) {
    case BackendKind::openai_http: return base + "/v1/chat/completions";
    case BackendKind::ollama_http: return base + "/api/chat";
    case BackendKind::mock: break;
  }
  throw ConfigError("mock backend has no endpoint");
}

}  // namespace hallu::wire

namespace hallu {

namespace {

class HttpBackend final : public Backend {
 public:
  HttpBackend(BackendConfig config, net::HttpTransport transport)
      : config_(std::move(config)), transport_(std::move(transport)), url_(wire::endpoint_url(config_)) {}

  CompletionResponse send(const CompletionRequest& request, std::span<const ToolSpec> tools) override {
    bool openai = config_.kind == BackendKind::openai_http;
    json body = openai ? wire::openai_request_body(request, config_.model_name, tools)
                       : wire::ollama_request_body(request, config_.model_name, tools);
    net::HttpRequest http;
    http.method = "POST";
    http.url = url_;
    http.body = body.dump();
    http.timeout = config_.timeout;
    net::HttpResponse reply = transport_(http);
    if (reply.transport_failed()) throw TransientBackendError(reply.error_message);
    if (reply.status == 429 || reply.status >= 500) {
      throw TransientBackendError("HTTP " + std::to_string(reply.status));
    }
    if (reply.status < 200 || reply.status >= 300) {
      if (wire::mentions_context_overflow(reply.body)) throw ContextOverflow(reply.body);
      throw MalformedBackendReply("HTTP " + std::to_string(reply.status) + ": " + reply.body.substr(0, 300));
    }
    return openai ? wire::parse_openai_reply(reply.body) : wire::parse_ollama_reply(reply.body);
  }

  std::string name() const override {
    return std::string(to_string(config_.kind)) + ":" + config_.model_name;
  }

 private:
  BackendConfig config_;
  net::HttpTransport transport_;
  std::string url_;
};

}  // namespace

std::shared_ptr<Backend> make_http_backend(const BackendConfig& config, net::HttpTransport transport) {
  config.validate();
  if (config.kind == BackendKind::mock) throw ConfigError("make_http_backend called with a mock config");
  return std::make_shared<HttpBackend>(config, std::move(transport));
}

}  // namespace hallu
