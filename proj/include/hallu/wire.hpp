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

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "hallu/gateway.hpp"
#include "hallu/net.hpp"

namespace hallu::wire {

// OpenAI-compatible chat completions:
//   POST {base_url}/v1/chat/completions
//   {model, messages:[{role,content}], temperature, seed?, max_tokens?, tools?}
json openai_request_body(const CompletionRequest& request, const std::string& model,
                         std::span<const ToolSpec> tools);
CompletionResponse parse_openai_reply(std::string_view body);

// Ollama chat:
//   POST {base_url}/api/chat
//   {model, messages, options:{temperature, seed}, stream:false}
json ollama_request_body(const CompletionRequest& request, const std::string& model,
                         std::span<const ToolSpec> tools);
CompletionResponse parse_ollama_reply(std::string_view body);

json tool_spec_to_json(const ToolSpec& spec);

std::string endpoint_url(const BackendConfig& config);

// True when an error body reports that the prompt exceeded the model context.
bool mentions_context_overflow(std::string_view body);

}  // namespace hallu::wire

namespace hallu {

std::shared_ptr<Backend> make_http_backend(const BackendConfig& config,
                                           net::HttpTransport transport = net::default_transport());

}  // namespace hallu
