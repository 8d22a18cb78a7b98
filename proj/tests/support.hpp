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

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hallu/codec.hpp"
#include "hallu/gateway.hpp"
#include "hallu/item.hpp"
#include "hallu/mock_backend.hpp"
#include "hallu/strategies.hpp"
#include "hallu/transcript.hpp"

namespace hallu::test {

inline std::filesystem::path source_dir() { return HALLU_SOURCE_DIR; }
inline std::filesystem::path toy_dir() { return source_dir() / "data" / "toy"; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("hallu-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline MockRule rule(std::string match, std::vector<std::string> responses) {
  MockRule r;
  r.matcher = std::move(match);
  r.responses = std::move(responses);
  return r;
}

inline std::shared_ptr<MockBackend> scripted(std::vector<MockRule> rules, std::string fallback = "FINAL ANSWER: unknown") {
  MockScript script;
  script.rules = std::move(rules);
  script.fallback = std::move(fallback);
  return std::make_shared<MockBackend>(script);
}

inline std::shared_ptr<MockBackend> statistical(std::vector<std::pair<std::string, double>> distribution,
                                                std::uint64_t seed_base = 0) {
  MockScript script;
  script.mode = MockMode::statistical;
  MockRule r;
  r.matcher = "";
  r.distribution = std::move(distribution);
  script.rules = {r};
  script.rng_seed_base = seed_base;
  return std::make_shared<MockBackend>(script);
}

inline std::unique_ptr<LlmClient> client(std::shared_ptr<Backend> backend,
                                         std::shared_ptr<TranscriptSink> transcript = nullptr) {
  BackendConfig cfg;
  cfg.retry_backoff = std::chrono::milliseconds(0);
  return std::make_unique<LlmClient>(cfg, std::move(backend), std::move(transcript),
                                     [](std::chrono::milliseconds) {});
}

inline BenchmarkItem gsm8k_item(std::string id, std::string gold, std::string question = "How many apples are there?") {
  BenchmarkItem item;
  item.id = std::move(id);
  item.benchmark = Benchmark::gsm8k;
  item.question = std::move(question);
  item.gold = {std::move(gold)};
  return item;
}

inline BenchmarkItem trivia_item(std::string id, std::vector<std::string> aliases,
                                 std::string question = "Which seaweed is farmed for alginates?") {
  BenchmarkItem item;
  item.id = std::move(id);
  item.benchmark = Benchmark::triviaqa;
  item.question = std::move(question);
  for (auto& a : aliases) item.gold.push_back(normalize_text(a));
  return item;
}

inline BenchmarkItem mmlu_item(std::string id, std::string gold, std::string question = "Which planet is closest to the Sun?") {
  BenchmarkItem item;
  item.id = std::move(id);
  item.benchmark = Benchmark::mmlu;
  item.question = std::move(question);
  item.options = {{"A", "Venus"}, {"B", "Mercury"}, {"C", "Earth"}, {"D", "Mars"}};
  item.gold = {std::move(gold)};
  item.subject = "astronomy";
  return item;
}

inline const TemplateLibrary& templates() {
  static const TemplateLibrary lib = TemplateLibrary::builtin();
  return lib;
}

}  // namespace hallu::test
