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

#include <set>

#include "doctest.h"
#include "hallu/hashing.hpp"
#include "hallu/net.hpp"
#include "support.hpp"

using namespace hallu;

TEST_SUITE("hashing") {
  TEST_CASE("splitmix64 matches the reference first output") {
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  }

  TEST_CASE("stable_hash is fnv-1a finalized by splitmix64") {
    CHECK(stable_hash("") == splitmix64(0xcbf29ce484222325ULL));
    CHECK(stable_hash("a") == splitmix64(0xaf63dc4c8601ec8cULL));
    CHECK(stable_hash("gsm8k") == stable_hash("gsm8k"));
    CHECK(stable_hash("gsm8k") != stable_hash("gsm8K"));
  }

  TEST_CASE("hash_combine is order sensitive") {
    auto a = hash_combine(hash_combine(1, 2), 3);
    auto b = hash_combine(hash_combine(1, 3), 2);
    CHECK(a != b);
    CHECK(hash_combine(7, std::string_view("x")) == hash_combine(7, stable_hash("x")));
  }

  TEST_CASE("derived seeds do not collide over small ranges") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t base = 0; base < 50; ++base)
      for (std::uint64_t i = 0; i < 200; ++i) seen.insert(derive_seed(base, i));
    CHECK(seen.size() == 50 * 200);
  }

  TEST_CASE("unit_interval stays in [0,1) and is roughly uniform") {
    double sum = 0;
    int low = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      double u = unit_interval(static_cast<std::uint64_t>(i));
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      sum += u;
      if (u < 0.25) ++low;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(static_cast<double>(low) / n == doctest::Approx(0.25).epsilon(0.02));
  }

  TEST_CASE("wire_seed fits a signed 63-bit range") {
    CHECK(wire_seed(~0ULL) == (std::int64_t{1} << 62) * 2 - 1);
    CHECK(wire_seed(10) == 5);
    CHECK(wire_seed(~0ULL) >= 0);
  }
}

TEST_SUITE("net") {
  TEST_CASE("url_encode escapes reserved bytes") {
    CHECK(net::url_encode("kelp forest") == "kelp%20forest");
    CHECK(net::url_encode("a&b=c/d") == "a%26b%3Dc%2Fd");
    CHECK(net::url_encode("safe-_.~") == "safe-_.~");
    CHECK(net::url_encode("\xc3\xa9") == "%C3%A9");
  }

  TEST_CASE("split_url separates origin from path") {
    auto [o1, p1] = net::split_url("https://en.wikipedia.org/w/rest.php?q=1");
    CHECK(o1 == "https://en.wikipedia.org");
    CHECK(p1 == "/w/rest.php?q=1");
    auto [o2, p2] = net::split_url("http://localhost:8080");
    CHECK(o2 == "http://localhost:8080");
    CHECK(p2 == "/");
  }

  TEST_CASE("deny guard blocks the real transport and counts attempts") {
    auto before = net::network_attempts();
    net::NetworkDenyGuard guard;
    net::HttpRequest req;
    req.url = "http://127.0.0.1:9/never";
    auto r = net::default_transport()(req);
    CHECK(r.transport_failed());
    CHECK(r.error == net::TransportError::network);
    CHECK(r.error_message.find("denied") != std::string::npos);
    CHECK(net::network_attempts() == before + 1);
  }

  TEST_CASE("cached transport stores only successful GET replies") {
    test::TempDir dir;
    int hits = 0;
    int status = 200;
    net::HttpTransport inner = [&](const net::HttpRequest& req) {
      ++hits;
      net::HttpResponse r;
      r.status = status;
      r.body = "body:" + req.url;
      return r;
    };
    auto cached = net::cached_transport(inner, dir.path() / "cache");
    net::HttpRequest get;
    get.url = "https://example.org/a";
    CHECK(cached(get).body == "body:https://example.org/a");
    CHECK(cached(get).body == "body:https://example.org/a");
    CHECK(hits == 1);

    status = 500;
    get.url = "https://example.org/b";
    cached(get);
    cached(get);
    CHECK(hits == 3);

    net::HttpRequest post;
    post.method = "POST";
    post.url = "https://example.org/a";
    status = 200;
    cached(post);
    cached(post);
    CHECK(hits == 5);
  }
}
