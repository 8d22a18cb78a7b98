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

#include "hallu/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hallu/codec.hpp"
#include "hallu/error.hpp"

namespace hallu {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_bom(std::string text) {
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  return text;
}

std::vector<std::string> alias_gold(const json& aliases, const std::string& where) {
  if (!aliases.is_array()) throw FormatError(where + ": answer aliases missing");
  std::vector<std::string> gold;
  for (const auto& a : aliases) {
    if (!a.is_string()) throw FormatError(where + ": alias is not a string");
    std::string n = normalize_text(a.get<std::string>());
    if (!n.empty() && std::find(gold.begin(), gold.end(), n) == gold.end()) gold.push_back(std::move(n));
  }
  if (gold.empty()) throw FormatError(where + ": empty alias list");
  return gold;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Benchmark benchmark) {
  switch (benchmark) {
    case Benchmark::gsm8k: return "gsm8k";
    case Benchmark::triviaqa: return "triviaqa";
    case Benchmark::mmlu: return "mmlu";
  }
  return "gsm8k";
}

Benchmark benchmark_from_string(std::string_view text) {
  if (text == "gsm8k") return Benchmark::gsm8k;
  if (text == "triviaqa") return Benchmark::triviaqa;
  if (text == "mmlu") return Benchmark::mmlu;
  throw ConfigError("unknown benchmark: " + std::string(text));
}

void BenchmarkItem::validate() const {
  const std::string where = "item '" + id + "'";
  if (id.empty()) throw FormatError("item without an id");
  if (question.empty()) throw FormatError(where + ": empty question");
  switch (benchmark) {
    case Benchmark::gsm8k:
      if (gold.size() != 1 || canonical_number(gold.front()) != gold.front()) {
        throw FormatError(where + ": gold must be one canonical number");
      }
      break;
    case Benchmark::triviaqa:
      if (gold.empty()) throw FormatError(where + ": empty alias set");
      break;
    case Benchmark::mmlu: {
      if (options.size() != 4) throw FormatError(where + ": expected 4 options");
      auto labels = option_labels();
      if (labels != std::vector<std::string>{"A", "B", "C", "D"}) throw FormatError(where + ": options must be A..D");
      if (gold.size() != 1 || std::find(labels.begin(), labels.end(), gold.front()) == labels.end()) {
        throw FormatError(where + ": gold must be one option label");
      }
      break;
    }
  }
}

std::vector<std::string> BenchmarkItem::option_labels() const {
  std::vector<std::string> out;
  for (const auto& o : options) out.push_back(o.label);
  return out;
}

std::string BenchmarkItem::options_block() const {
  std::string out;
  for (const auto& o : options) {
    if (!out.empty()) out += "\n";
    out += o.label + ". " + o.text;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<BenchmarkItem> load_gsm8k(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<BenchmarkItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw FormatError(where + ": not a JSON object");
    }
    if (!j.is_object() || !j.contains("question") || !j.contains("answer") || !j["question"].is_string() ||
        !j["answer"].is_string()) {
      throw FormatError(where + ": expected string fields question and answer");
    }
    std::string answer = j["answer"].get<std::string>();
    auto marker = answer.rfind("#### ");
    if (marker == std::string::npos) throw FormatError(where + ": answer lacks the '#### ' marker");
    auto gold = canonical_number(answer.substr(marker + 5));
    if (!gold) throw FormatError(where + ": gold answer is not numeric");
    BenchmarkItem item;
    item.id = "gsm8k-" + std::to_string(items.size());
    item.benchmark = Benchmark::gsm8k;
    item.question = j["question"].get<std::string>();
    item.gold = {*gold};
    item.validate();
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<BenchmarkItem> load_triviaqa(const fs::path& path) {
  std::string text = strip_bom(read_file(path));
  std::vector<BenchmarkItem> items;
  auto add = [&](const json& record, const std::string& where, const char* q_key, const char* id_key,
                 const char* aliases_key) {
    if (!record.is_object() || !record.contains(q_key) || !record[q_key].is_string() ||
        (!record.contains("answer") && !record.contains("Answer"))) {
      throw FormatError(where + ": expected question and answer fields");
    }
    const json& answer = record.contains("Answer") ? record["Answer"] : record["answer"];
    BenchmarkItem item;
    item.benchmark = Benchmark::triviaqa;
    item.question = record[q_key].get<std::string>();
    item.id = record.contains(id_key) && record[id_key].is_string() ? record[id_key].get<std::string>()
                                                                       : "triviaqa-" + std::to_string(items.size());
    item.gold = alias_gold(answer.is_object() && answer.contains(aliases_key) ? answer[aliases_key] : json(),
                           where);
    item.validate();
    items.push_back(std::move(item));
  };

  json whole;
  bool single_document = false;
  try {
    whole = json::parse(text);
    single_document = whole.is_object() && whole.contains("Data");
  } catch (const json::exception&) {
  }
  if (single_document) {
    if (!whole["Data"].is_array()) throw FormatError(path.string() + ": Data is not a list");
    std::size_t i = 0;
    for (const auto& record : whole["Data"]) {
      add(record, path.filename().string() + ": record " + std::to_string(i++), "Question", "QuestionId", "Aliases");
    }
    return items;
  }

  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception&) {
      throw FormatError(where + ": not a JSON object");
    }
    add(record, where, "question", "question_id", "aliases");
  }
  return items;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw FormatError("csv: quote inside an unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw FormatError("csv: unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

std::vector<std::size_t> mmlu_quotas(std::size_t subjects, std::size_t total) {
  if (subjects == 0) return {};
  std::vector<std::size_t> quotas(subjects, total / subjects);
  for (std::size_t i = 0; i < total % subjects; ++i) ++quotas[i];
  return quotas;
}

std::vector<BenchmarkItem> load_mmlu(const fs::path& dir, const MmluOptions& options) {
  if (!fs::is_directory(dir)) throw MissingSubjectFile("not a directory: " + dir.string());
  const std::string suffix = "_test.csv";
  std::map<std::string, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      files.emplace(name.substr(0, name.size() - suffix.size()), entry.path());
    }
  }
  for (const auto& s : options.required_subjects) {
    if (!files.contains(s)) throw MissingSubjectFile("missing subject file " + s + suffix);
  }
  if (files.empty()) throw MissingSubjectFile("no *" + suffix + " files in " + dir.string());

  std::vector<std::size_t> quotas;
  if (options.total) quotas = mmlu_quotas(files.size(), *options.total);

  std::vector<BenchmarkItem> items;
  std::size_t subject_index = 0;
  for (const auto& [subject, path] : files) {
    auto rows = parse_csv(strip_bom(read_file(path)));
    std::size_t taken = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (options.total && taken == quotas[subject_index]) break;
      const auto& row = rows[r];
      const std::string where = path.filename().string() + ":" + std::to_string(r + 1);
      if (row.size() == 1 && row[0].empty()) continue;
      if (row.size() != 6) throw FormatError(where + ": expected 6 columns, got " + std::to_string(row.size()));
      std::string letter = row[5];
      letter.erase(std::remove_if(letter.begin(), letter.end(), [](unsigned char c) { return std::isspace(c); }),
                   letter.end());
      if (letter != "A" && letter != "B" && letter != "C" && letter != "D") {
        throw FormatError(where + ": answer letter '" + row[5] + "' not in A..D");
      }
      BenchmarkItem item;
      item.id = "mmlu-" + subject + "-" + std::to_string(r);
      item.benchmark = Benchmark::mmlu;
      item.question = row[0];
      item.options = {{"A", row[1]}, {"B", row[2]}, {"C", row[3]}, {"D", row[4]}};
      item.gold = {letter};
      item.subject = subject;
      item.validate();
      items.push_back(std::move(item));
      ++taken;
    }
    ++subject_index;
  }
  return items;
}

std::vector<BenchmarkItem> take_first(std::vector<BenchmarkItem> items, std::size_t n) {
  if (items.size() > n) items.resize(n);
  return items;
}

std::vector<BenchmarkItem> load_benchmark(Benchmark benchmark, const fs::path& path,
                                          std::optional<std::size_t> limit) {
  std::vector<BenchmarkItem> items;
  switch (benchmark) {
    case Benchmark::gsm8k: items = load_gsm8k(path); break;
    case Benchmark::triviaqa: items = load_triviaqa(path); break;
    case Benchmark::mmlu: items = load_mmlu(path); break;
  }
  return limit ? take_first(std::move(items), *limit) : items;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Grade grade) {
  switch (grade) {
    case Grade::correct: return "correct";
    case Grade::hallucinated: return "hallucinated";
    case Grade::abstained: return "abstained";
    case Grade::invalid: return "invalid";
  }
  return "invalid";
}

Grade grade_from_string(std::string_view text) {
  for (auto g : {Grade::correct, Grade::hallucinated, Grade::abstained, Grade::invalid}) {
    if (to_string(g) == text) return g;
  }
  throw FormatError("unknown grade: " + std::string(text));
}

bool answer_matches(const BenchmarkItem& item, const ParsedAnswer& answer) {
  switch (item.benchmark) {
    case Benchmark::gsm8k: {
      auto value = canonical_number(answer.value);
      return value && std::find(item.gold.begin(), item.gold.end(), *value) != item.gold.end();
    }
    case Benchmark::triviaqa: {
      auto value = normalize_text(answer.value);
      return std::find(item.gold.begin(), item.gold.end(), value) != item.gold.end();
    }
    case Benchmark::mmlu:
      return std::find(item.gold.begin(), item.gold.end(), answer.value) != item.gold.end();
  }
  return false;
}

Grade grade(const BenchmarkItem& item, const StrategyOutcome& outcome) {
  if (const auto* a = std::get_if<Answered>(&outcome)) {
    return answer_matches(item, a->value) ? Grade::correct : Grade::hallucinated;
  }
  return is_abstained(outcome) ? Grade::abstained : Grade::invalid;
}

ParsedAnswer gold_answer(const BenchmarkItem& item) {
  ParsedAnswer a;
  a.kind = item.benchmark == Benchmark::gsm8k  ? AnswerKind::numeric
           : item.benchmark == Benchmark::mmlu ? AnswerKind::choice
                                                : AnswerKind::freetext;
  a.value = item.gold.empty() ? std::string{} : item.gold.front();
  return a;
}

double accuracy_percent(double correct, double graded) { return graded > 0 ? 100.0 * correct / graded : 0.0; }

RunAggregate aggregate(std::span<const Grade> grades, std::span<const int> costs) {
  if (grades.size() != costs.size()) throw LengthMismatch("one cost per grade is required");
  RunAggregate agg;
  agg.total = static_cast<double>(grades.size());
  for (auto g : grades) {
    switch (g) {
      case Grade::correct: agg.correct += 1; break;
      case Grade::hallucinated: agg.hallucinated += 1; break;
      case Grade::abstained: agg.abstained += 1; break;
      case Grade::invalid: agg.invalid += 1; break;
    }
  }
  agg.graded = agg.correct + agg.hallucinated;
  agg.accuracy = accuracy_percent(agg.correct, agg.graded);
  double cost = 0;
  for (int c : costs) cost += c;
  agg.avg_cost = grades.empty() ? 0.0 : cost / static_cast<double>(grades.size());
  return agg;
}

bool accounting_holds(const RunAggregate& agg, double eps) {
  return std::abs(agg.total - (agg.graded + agg.abstained + agg.invalid)) <= eps &&
         std::abs(agg.graded - (agg.correct + agg.hallucinated)) <= eps && agg.graded <= agg.total + eps;
}

RunAggregate invalid_as_hallucinated(const RunAggregate& agg) {
  RunAggregate out = agg;
  out.hallucinated += out.invalid;
  out.graded += out.invalid;
  out.invalid = 0;
  out.accuracy = accuracy_percent(out.correct, out.graded);
  return out;
}

RunAggregate average_runs(std::span<const RunAggregate> runs) {
  if (runs.empty()) throw MissingResults("no runs to average");
  RunAggregate mean;
  for (const auto& r : runs) {
    mean.total += r.total;
    mean.graded += r.graded;
    mean.hallucinated += r.hallucinated;
    mean.correct += r.correct;
    mean.abstained += r.abstained;
    mean.invalid += r.invalid;
    mean.accuracy += r.accuracy;
    mean.avg_cost += r.avg_cost;
  }
  const double n = static_cast<double>(runs.size());
  for (double* f : {&mean.total, &mean.graded, &mean.hallucinated, &mean.correct, &mean.abstained, &mean.invalid,
                    &mean.accuracy, &mean.avg_cost}) {
    *f /= n;
  }
  return mean;
}

std::vector<bool> sample_correctness(const BenchmarkItem& item, std::span<const Sample> samples) {
  std::vector<bool> out;
  for (const auto& s : samples) out.push_back(s && answer_matches(item, *s));
  return out;
}

std::vector<double> top_n_accuracy(const SampleLedger& ledger) {
  if (ledger.empty()) return std::vector<double>(5, 0.0);
  const std::size_t width = ledger.front().size();
  std::vector<std::size_t> hits(width, 0);
  for (const auto& row : ledger) {
    if (row.size() != width) throw LengthMismatch("sample ledger rows differ in length");
    auto first = std::find(row.begin(), row.end(), true);
    for (auto n = static_cast<std::size_t>(first - row.begin()); n < width; ++n) ++hits[n];
  }
  std::vector<double> out;
  for (auto h : hits) out.push_back(100.0 * static_cast<double>(h) / static_cast<double>(ledger.size()));
  return out;
}

std::vector<std::size_t> occurrence_histogram(const SampleLedger& ledger, std::size_t width) {
  std::vector<std::size_t> buckets(width + 1, 0);
  for (const auto& row : ledger) {
    if (row.size() != width) throw LengthMismatch("sample ledger row has the wrong length");
    ++buckets[static_cast<std::size_t>(std::count(row.begin(), row.end(), true))];
  }
  return buckets;
}

std::map<std::string, double> per_subject(std::span<const std::pair<std::string, Grade>> graded_items) {
  std::map<std::string, std::pair<double, double>> tally;  // correct, graded
  for (const auto& [subject, g] : graded_items) {
    auto& t = tally[subject];
    if (g == Grade::correct) t.first += 1;
    if (g == Grade::correct || g == Grade::hallucinated) t.second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [subject, t] : tally) out[subject] = accuracy_percent(t.first, t.second);
  return out;
}

ToolUsage tool_usage(std::span<const std::pair<Benchmark, AgentTrace>> traces) {
  ToolUsage usage;
  for (const auto& [benchmark, trace] : traces) {
    for (const auto& [tool, t] : trace.tool_stats) {
      auto& u = usage[{std::string(to_string(benchmark)), tool}];
      u.successful += t.successful;
      u.unsuccessful += t.unsuccessful;
    }
  }
  return usage;
}

}  // namespace hallu
