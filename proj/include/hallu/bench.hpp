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

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hallu/agents.hpp"
#include "hallu/item.hpp"
#include "hallu/strategies.hpp"

namespace hallu {

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

// JSON lines with "question" and "answer"; gold is the number after "#### ".
std::vector<BenchmarkItem> load_gsm8k(const std::filesystem::path& path);

// Either the official {"Data": [...]} validation file or JSON lines in the
// flattened layout ({"question", "question_id", "answer": {"aliases"}}).
std::vector<BenchmarkItem> load_triviaqa(const std::filesystem::path& path);

struct MmluOptions {
  // Items in the subset; empty keeps every row of every subject.
  std::optional<std::size_t> total = 1000;
  // Subjects that must be present; empty means whatever <subject>_test.csv files exist.
  std::vector<std::string> required_subjects;
};

// Per-subject headerless CSV files named <subject>_test.csv with columns
// question, A, B, C, D, answer letter. Subjects are taken in alphabetical
// order; the subset takes the first rows of each subject up to its quota.
std::vector<BenchmarkItem> load_mmlu(const std::filesystem::path& dir, const MmluOptions& options = {});

// floor(total / subjects) each, plus one for the first total % subjects subjects.
std::vector<std::size_t> mmlu_quotas(std::size_t subjects, std::size_t total);

// RFC 4180 records: quoted fields, doubled quotes, embedded newlines, CRLF.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::vector<BenchmarkItem> take_first(std::vector<BenchmarkItem> items, std::size_t n);

// Dispatches on the benchmark; a directory for mmlu. `limit` applies take_first.
std::vector<BenchmarkItem> load_benchmark(Benchmark benchmark, const std::filesystem::path& path,
                                          std::optional<std::size_t> limit = std::nullopt);

// ---------------------------------------------------------------------------
// Grading and aggregation
// ---------------------------------------------------------------------------

enum class Grade { correct, hallucinated, abstained, invalid };

std::string_view to_string(Grade grade);
Grade grade_from_string(std::string_view text);

bool answer_matches(const BenchmarkItem& item, const ParsedAnswer& answer);
Grade grade(const BenchmarkItem& item, const StrategyOutcome& outcome);

// The item's first gold value as a parsed answer of the matching kind.
ParsedAnswer gold_answer(const BenchmarkItem& item);

// Counts are real-valued; see average_runs.
struct RunAggregate {
  double total = 0;
  double graded = 0;
  double hallucinated = 0;
  double correct = 0;
  double abstained = 0;
  double invalid = 0;
  double accuracy = 0;  // percent, unrounded
  double avg_cost = 0;  // mean prompt count over attempted queries
};

double accuracy_percent(double correct, double graded);

// Throws LengthMismatch when the spans differ in length.
RunAggregate aggregate(std::span<const Grade> grades, std::span<const int> costs);

// total = graded + abstained + invalid and graded = correct + hallucinated.
bool accounting_holds(const RunAggregate& agg, double eps = 1e-9);

// Invalid folded into Hallucinated (and so into Graded).
RunAggregate invalid_as_hallucinated(const RunAggregate& agg);

// Field-wise arithmetic means. Throws MissingResults on an empty list.
RunAggregate average_runs(std::span<const RunAggregate> runs);

// Per-query correctness of each sample; an unparsed sample counts as incorrect.
using SampleLedger = std::vector<std::vector<bool>>;

std::vector<bool> sample_correctness(const BenchmarkItem& item, std::span<const Sample> samples);

// Entry N-1: percent of queries whose first N samples contain a correct one.
// Throws LengthMismatch on ragged ledgers.
std::vector<double> top_n_accuracy(const SampleLedger& ledger);

// Bucket k: queries with exactly k correct samples.
std::vector<std::size_t> occurrence_histogram(const SampleLedger& ledger, std::size_t width = 5);

std::map<std::string, double> per_subject(std::span<const std::pair<std::string, Grade>> graded_items);

using ToolUsage = std::map<std::pair<std::string, std::string>, ToolTally>;  // (benchmark, tool)

ToolUsage tool_usage(std::span<const std::pair<Benchmark, AgentTrace>> traces);

}  // namespace hallu
