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

#include "hallu/net.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "hallu/hashing.hpp"
#include "httplib.h"

namespace hallu::net {

namespace {

std::atomic<std::uint64_t> g_attempts{0};
std::atomic<int> g_deny_depth{0};

HttpResponse transport_error(TransportError kind, std::string message) {
  HttpResponse r;
  r.error = kind;
  r.error_message = std::move(message);
  return r;
}

}  // namespace

NetworkDenyGuard::NetworkDenyGuard() { ++g_deny_depth; }
NetworkDenyGuard::~NetworkDenyGuard() { --g_deny_depth; }

std::uint64_t network_attempts() { return g_attempts.load(); }

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string url_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

HttpTransport default_transport() {
  return [](const HttpRequest& req) -> HttpResponse {
    ++g_attempts;
    if (g_deny_depth.load() > 0) {
      return transport_error(TransportError::network, "network access denied: " + req.url);
    }
    auto [origin, path] = split_url(req.url);
    httplib::Client client(origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(req.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(req.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_follow_location(true);

    httplib::Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);

    httplib::Result result = req.method == "POST"
                                 ? client.Post(path, headers, req.body, req.content_type)
                                 : client.Get(path, headers);
    if (!result) {
      auto err = result.error();
      auto kind = (err == httplib::Error::Read || err == httplib::Error::Write ||
                   err == httplib::Error::ConnectionTimeout)
                      ? TransportError::timeout
                      : TransportError::network;
      return transport_error(kind, httplib::to_string(err));
    }
    HttpResponse r;
    r.status = result->status;
    r.body = result->body;
    return r;
  };
}

HttpTransport cached_transport(HttpTransport inner, std::filesystem::path cache_dir) {
  return [inner = std::move(inner), cache_dir = std::move(cache_dir)](const HttpRequest& req) {
    if (req.method != "GET") return inner(req);
    std::ostringstream name;
    name << std::hex << stable_hash(req.url) << ".cache";
    auto path = cache_dir / name.str();
    if (std::ifstream in{path, std::ios::binary}) {
      std::ostringstream buf;
      buf << in.rdbuf();
      HttpResponse r;
      r.status = 200;
      r.body = buf.str();
      return r;
    }
    HttpResponse r = inner(req);
    if (!r.transport_failed() && r.status >= 200 && r.status < 300) {
      std::error_code ec;
      std::filesystem::create_directories(cache_dir, ec);
      auto tmp = path;
      tmp += "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + ".tmp";
      {
        std::ofstream out{tmp, std::ios::binary};
        out << r.body;
      }
      std::filesystem::rename(tmp, path, ec);
    }
    return r;
  };
}

}  // namespace hallu::net
