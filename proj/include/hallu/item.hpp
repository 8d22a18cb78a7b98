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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hallu {

enum class Benchmark { gsm8k, triviaqa, mmlu };

std::string_view to_string(Benchmark benchmark);
Benchmark benchmark_from_string(std::string_view text);

struct ChoiceOption {
  std::string label;
  std::string text;
};

struct BenchmarkItem {
  std::string id;
  Benchmark benchmark = Benchmark::gsm8k;
  std::string question;
  std::vector<ChoiceOption> options;  // mmlu only, labels A..D
  std::vector<std::string> gold;      // canonical numeric / normalized aliases / option label
  std::optional<std::string> subject; // mmlu only

  // Throws FormatError when the per-benchmark shape is violated.
  void validate() const;

  std::vector<std::string> option_labels() const;
  // "A. text\nB. text\n..."
  std::string options_block() const;
};

}  // namespace hallu
