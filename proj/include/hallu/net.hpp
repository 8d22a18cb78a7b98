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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hallu::net {

struct HttpRequest {
  std::string method = "GET";
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::string content_type = "application/json";
  std::chrono::milliseconds timeout{30000};
};

enum class TransportError { none, timeout, network };

struct HttpResponse {
  int status = 0;
  std::string body;
  TransportError error = TransportError::none;
  std::string error_message;

  bool transport_failed() const { return error != TransportError::none; }
};

// Every outbound request in the library goes through one of these.
using HttpTransport = std::function<HttpResponse(const HttpRequest&)>;

// Real network transport (cpp-httplib, TLS enabled). Honors NetworkDenyGuard.
HttpTransport default_transport();

// Wraps a transport with an on-disk cache for GET requests, keyed by a stable
// hash of the URL. Only 2xx replies are stored.
HttpTransport cached_transport(HttpTransport inner, std::filesystem::path cache_dir);

// Number of requests that reached default_transport() in this process,
// including denied ones.
std::uint64_t network_attempts();

// While alive, default_transport() refuses to touch the network and reports
// a network error instead.
class NetworkDenyGuard {
 public:
  NetworkDenyGuard();
  ~NetworkDenyGuard();
  NetworkDenyGuard(const NetworkDenyGuard&) = delete;
  NetworkDenyGuard& operator=(const NetworkDenyGuard&) = delete;
};

std::string url_encode(std::string_view text);

// Splits "https://host:port/path?q" into ("https://host:port", "/path?q").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace hallu::net
