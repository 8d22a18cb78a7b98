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

#include <thread>

#include "doctest.h"
#include "hallu/error.hpp"
#include "hallu/gateway.hpp"
#include "support.hpp"

using namespace hallu;
using namespace std::chrono_literals;

namespace {

CompletionRequest ask(std::string text, std::string conversation = "c") {
  CompletionRequest r;
  r.messages = {ChatMessage::user(std::move(text))};
  r.temperature = 0.5;
  r.conversation_id = std::move(conversation);
  return r;
}

class FlakyBackend final : public Backend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  CompletionResponse send(const CompletionRequest&, std::span<const ToolSpec>) override {
    ++attempts;
    if (failures_-- > 0) throw TransientBackendError("connection reset");
    CompletionResponse r;
    r.content = reply;
    return r;
  }
  std::string name() const override { return "flaky"; }

  int attempts = 0;
  std::string reply = "FINAL ANSWER: 4";

 private:
  int failures_;
};

}  // namespace

TEST_SUITE("gateway") {
  TEST_CASE("request validation") {
    CompletionRequest empty;
    CHECK_THROWS_AS(empty.validate(), InvalidRequest);

    auto r = ask("hi");
    CHECK_NOTHROW(r.validate());

    r.temperature = 2.5;
    CHECK_THROWS_AS(r.validate(), InvalidRequest);
    r.temperature = -0.1;
    CHECK_THROWS_AS(r.validate(), InvalidRequest);
    r.temperature = 0.8;

    r.messages.push_back(ChatMessage::assistant("reply"));
    CHECK_THROWS_AS(r.validate(), InvalidRequest);

    auto blank = ask("");
    CHECK_THROWS_AS(blank.validate(), InvalidRequest);

    auto capped = ask("x");
    capped.max_tokens = 0;
    CHECK_THROWS_AS(capped.validate(), InvalidRequest);
  }

  TEST_CASE("backend config validation") {
    BackendConfig mock;
    CHECK_NOTHROW(mock.validate());
    mock.base_url = "http://x";
    CHECK_THROWS_AS(mock.validate(), ConfigError);

    BackendConfig http;
    http.kind = BackendKind::openai_http;
    CHECK_THROWS_AS(http.validate(), ConfigError);
    http.base_url = "http://localhost:8080";
    CHECK_NOTHROW(http.validate());
    http.max_retries = -1;
    CHECK_THROWS_AS(http.validate(), ConfigError);
    http.max_retries = 0;
    http.timeout = 0ms;
    CHECK_THROWS_AS(http.validate(), ConfigError);
  }

  TEST_CASE("tool spec validation") {
    ToolSpec ok{"calc", "adds numbers", {{"type", "object"}, {"properties", {{"a", {{"type", "number"}}}}}, {"required", {"a"}}}};
    CHECK_NOTHROW(ok.validate());
    ToolSpec undeclared = ok;
    undeclared.parameters["required"] = {"b"};
    CHECK_THROWS_AS(undeclared.validate(), InvalidRequest);
    ToolSpec not_object = ok;
    not_object.parameters = {{"type", "string"}};
    CHECK_THROWS_AS(not_object.validate(), InvalidRequest);
  }

  TEST_CASE("scripted echo through the client") {
    auto backend = test::scripted({test::rule("2+2", {"4"})});
    auto llm = test::client(backend);
    auto resp = llm->complete(ask("what is 2+2"));
    CHECK(resp.content == "4");
    CHECK(resp.finish_reason == FinishReason::stop);
    CHECK(llm->calls() == 1);
  }

  TEST_CASE("retry delay doubles and caps at 30 seconds") {
    CHECK(retry_delay(500ms, 0) == 500ms);
    CHECK(retry_delay(500ms, 1) == 1000ms);
    CHECK(retry_delay(500ms, 3) == 4000ms);
    CHECK(retry_delay(500ms, 6) == 30000ms);
    CHECK(retry_delay(500ms, 60) == 30000ms);
    CHECK(retry_delay(0ms, 5) == 0ms);
  }

  TEST_CASE("transient failures are retried with backoff") {
    auto backend = std::make_shared<FlakyBackend>(2);
    BackendConfig cfg;
    cfg.max_retries = 3;
    cfg.retry_backoff = 100ms;
    std::vector<std::chrono::milliseconds> sleeps;
    LlmClient llm(cfg, backend, nullptr, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    auto resp = llm.complete(ask("q"));
    CHECK(resp.content == "FINAL ANSWER: 4");
    CHECK(backend->attempts == 3);
    CHECK(sleeps == std::vector<std::chrono::milliseconds>{100ms, 200ms});
    CHECK(llm.calls() == 1);
  }

  TEST_CASE("exhausted retries raise BackendUnreachable and leave a transcript note") {
    auto backend = std::make_shared<FlakyBackend>(100);
    BackendConfig cfg;
    cfg.max_retries = 2;
    cfg.retry_backoff = 0ms;
    auto sink = std::make_shared<TranscriptSink>([] { return std::string("T"); });
    LlmClient llm(cfg, backend, sink, [](std::chrono::milliseconds) {});
    CHECK_THROWS_AS(llm.complete(ask("q", "conv-1")), BackendUnreachable);
    CHECK(backend->attempts == 3);
    auto lines = sink->lines();
    REQUIRE(lines.size() == 1);
    auto note = json::parse(lines[0]);
    CHECK(note["conversation"] == "conv-1");
    CHECK(note["note"].get<std::string>().find("unreachable") != std::string::npos);
  }

  TEST_CASE("mock consumes one scripted response per logical call despite retries") {
    MockScript script;
    script.rules = {test::rule("q", {"FINAL ANSWER: 1", "FINAL ANSWER: 2"})};
    script.transient_failures_per_call = 2;
    auto backend = std::make_shared<MockBackend>(script);
    auto llm = test::client(backend);
    CHECK(llm->complete(ask("q")).content == "FINAL ANSWER: 1");
    CHECK(llm->complete(ask("q")).content == "FINAL ANSWER: 2");
    CHECK(backend->calls() == 2);
    CHECK(llm->calls() == 2);
  }

  TEST_CASE("an empty reply is flagged as an error finish") {
    auto backend = std::make_shared<FlakyBackend>(0);
    backend->reply = "";
    auto llm = test::client(backend);
    CHECK(llm->complete(ask("q")).finish_reason == FinishReason::error);
  }

  TEST_CASE("transcript records every exchange with the injected clock") {
    auto sink = std::make_shared<TranscriptSink>([] { return std::string("2026-01-01T00:00:00.000Z"); });
    auto backend = test::scripted({test::rule("hello", {"world"})});
    auto llm = test::client(backend, sink);
    auto req = ask("hello", "gsm8k/control/t0.5/r0/gsm8k-0");
    req.seed = 99;
    llm->complete(req);
    auto lines = sink->lines();
    REQUIRE(lines.size() == 1);
    auto j = json::parse(lines[0]);
    CHECK(j["ts"] == "2026-01-01T00:00:00.000Z");
    CHECK(j["backend"] == "mock");
    CHECK(j["conversation"] == "gsm8k/control/t0.5/r0/gsm8k-0");
    CHECK(j["request"]["messages"][0]["content"] == "hello");
    CHECK(j["request"]["temperature"] == 0.5);
    CHECK(j["request"]["seed"] == 99);
    CHECK(j["response"]["content"] == "world");
  }

  TEST_CASE("identical scripts and requests give byte-identical transcripts") {
    auto run = [] {
      auto sink = std::make_shared<TranscriptSink>([] { return std::string("T"); });
      auto backend = test::scripted({test::rule("x", {"a", "b", "c"})});
      auto llm = test::client(backend, sink);
      for (int i = 0; i < 7; ++i) llm->complete(ask("x" + std::to_string(i)));
      return sink->lines();
    };
    CHECK(run() == run());
  }

  TEST_CASE("file transcript appends json lines") {
    test::TempDir dir;
    auto path = dir.path() / "t.jsonl";
    {
      auto sink = std::make_shared<TranscriptSink>(path, [] { return std::string("T"); });
      auto llm = test::client(test::scripted({test::rule("a", {"b"})}), sink);
      llm->complete(ask("a"));
      sink->note("c", "degraded: search failed");
    }
    auto text = test::read_file(path);
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      CHECK(json::accept(line));
      ++n;
    }
    CHECK(n == 2);
  }

  TEST_CASE("complete_with_tools distinguishes text and tool calls") {
    std::vector<ToolSpec> tools = {{"exec_code", "run python", {{"type", "object"}, {"properties", {{"source", {{"type", "string"}}}}}}}};
    auto backend = test::scripted({
        test::rule("code", {R"J(TOOL_CALLS: [{"name": "exec_code", "arguments": {"source": "print(1+1)"}}])J"}),
        test::rule("seaweed", {"Kelp"}),
        test::rule("typo", {R"(TOOL_CALLS: [{"name": "wikipediaa", "arguments": {"query": "kelp"}}])"}),
        test::rule("broken", {"TOOL_CALLS: [{\"name\": "}),
    });
    auto llm = test::client(backend);

    auto calls = llm->complete_with_tools(ask("run code"), tools);
    REQUIRE(calls.has_tool_calls());
    REQUIRE(calls.calls.size() == 1);
    CHECK(calls.calls[0].name == "exec_code");
    CHECK(calls.calls[0].arguments["source"] == "print(1+1)");

    auto text = llm->complete_with_tools(ask("which seaweed"), tools);
    CHECK_FALSE(text.has_tool_calls());
    CHECK(text.text == "Kelp");

    auto unknown = llm->complete_with_tools(ask("typo"), tools);
    REQUIRE(unknown.has_tool_calls());
    CHECK(unknown.calls[0].name == "wikipediaa");

    CHECK_THROWS_AS(llm->complete_with_tools(ask("broken"), tools), ToolCallParseFailure);
  }

  TEST_CASE("concurrent calls are all counted") {
    auto backend = test::scripted({test::rule("q", {"FINAL ANSWER: 1"})});
    auto llm = test::client(backend);
    std::vector<std::thread> workers;
    for (int t = 0; t < 8; ++t) {
      workers.emplace_back([&, t] {
        for (int i = 0; i < 50; ++i) llm->complete(ask("q", "conv" + std::to_string(t)));
      });
    }
    for (auto& w : workers) w.join();
    CHECK(llm->calls() == 400);
    CHECK(backend->calls() == 400);
  }
}
