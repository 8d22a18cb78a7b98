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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hallu/codec.hpp"
#include "hallu/gateway.hpp"
#include "hallu/item.hpp"
#include "hallu/tools.hpp"

namespace hallu {

enum class StrategyName { control, cot, sc, sc_cot, tot, mad, reflection, cp, cove1, cove2, kgr, ddga };

std::string_view to_string(StrategyName name);
StrategyName strategy_from_string(std::string_view text);
std::span<const StrategyName> all_strategies();

// The strategy/benchmark matrix the experiments use.
bool is_applicable(StrategyName name, Benchmark benchmark);

struct StrategyConfig {
  StrategyName name = StrategyName::control;
  double temperature = 0.5;
  int sample_count = 5;
  int max_debate_rounds = 10;
  int debater_count = 2;
  int tolerance = 3;

  // Throws ConfigError.
  void validate() const;
};

enum class AbstainReason { contradiction, verification_failed, kg_unresolvable };

std::string_view to_string(AbstainReason reason);
AbstainReason abstain_reason_from_string(std::string_view text);

struct Answered {
  ParsedAnswer value;
};
struct Abstained {
  AbstainReason reason;
};
struct Invalid {
  std::string reason;
};

using StrategyOutcome = std::variant<Answered, Abstained, Invalid>;

inline bool is_answered(const StrategyOutcome& o) { return std::holds_alternative<Answered>(o); }
inline bool is_abstained(const StrategyOutcome& o) { return std::holds_alternative<Abstained>(o); }
inline bool is_invalid(const StrategyOutcome& o) { return std::holds_alternative<Invalid>(o); }

// {"status": "answered"|"abstained"|"invalid", "kind", "value", "steps", "reason"}
json to_json(const StrategyOutcome& outcome);
StrategyOutcome outcome_from_json(const json& j);
json to_json(const ParsedAnswer& answer);
ParsedAnswer parsed_answer_from_json(const json& j);

using Sample = std::optional<ParsedAnswer>;  // empty: the sample never parsed

struct StrategyResult {
  StrategyOutcome outcome = Invalid{"not run"};
  int prompt_count = 0;         // gateway calls actually made
  std::vector<Sample> samples;  // sc, sc_cot, tot, cp
  std::string transcript_id;
  std::optional<int> debate_rounds;  // mad: iterative rounds after the opening answers
  std::vector<std::string> notes;    // degraded modes, tool errors
};

// Everything a strategy execution needs besides the item and config.
struct ExecContext {
  const LlmClient& llm;
  const TemplateLibrary& templates;
  KnowledgeGraph* kg = nullptr;
  WebSearch* search = nullptr;
  std::string transcript_id;
  std::optional<std::uint64_t> seed;  // per-query base seed
};

// Maximum number of property labels offered to the model by KGR.
inline constexpr std::size_t kMaxKgProperties = 25;

StrategyResult run_control(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_cot(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);

enum class SampleBase { control, cot };

struct SampleSet {
  std::vector<Sample> samples;
  int prompt_count = 0;
};

// n independent runs of the base strategy; sample k is seeded from index k.
SampleSet sample_n(const BenchmarkItem& item, int n, SampleBase base, const StrategyConfig& cfg,
                   const ExecContext& ctx);

// Modal value; ties go to the value whose first occurrence is earliest.
// Throws EmptyBallot on an empty list.
std::string majority_vote(std::span<const std::string> values);

StrategyResult run_sc(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_sc_cot(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_tot(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_cp(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_mad(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_reflection(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_cove1(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_cove2(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_kgr(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);
StrategyResult run_ddga(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx);

// Dispatches on cfg.name. Throws StrategyBenchmarkMismatch for pairs outside the matrix.
StrategyResult run_strategy(const StrategyConfig& cfg, const BenchmarkItem& item, const ExecContext& ctx);

// Control prompt and answer format for an item; shared with the agents.
std::string control_prompt(const BenchmarkItem& item, const TemplateLibrary& templates);
ParseSpec answer_spec(const BenchmarkItem& item, int tolerance);

}  // namespace hallu
