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

#include "hallu/strategies.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "hallu/error.hpp"
#include "hallu/hashing.hpp"
#include "hallu/transcript.hpp"

namespace hallu {

namespace {

// Seed salts. Samples use their index directly.
constexpr std::uint64_t kStepSalt = 100;
constexpr std::uint64_t kDebateSalt = 200;

// One strategy execution: a strictly sequential series of gateway calls that
// share a transcript id and a prompt counter.
class Session {
 public:
  Session(const ExecContext& ctx, double temperature) : ctx_(ctx), temperature_(temperature) {}

  struct Reply {
    std::optional<ParsedAnswer> answer;
    std::string raw;
  };

  std::string raw(std::vector<ChatMessage> messages, std::uint64_t salt) {
    ++prompts_;
    return ctx_.llm.complete(request(std::move(messages), salt)).content;
  }

  Reply ask(std::vector<ChatMessage> messages, const ParseSpec& spec, std::uint64_t salt) {
    try {
      AskResult r = ask_with_tolerance(ctx_.llm, request(std::move(messages), salt), spec);
      prompts_ += r.attempts_used;
      return {std::move(r.answer), std::move(r.raw)};
    } catch (const ToleranceExceeded& e) {
      prompts_ += e.attempts();
      note(e.what());
      return {std::nullopt, e.last_reply()};
    }
  }

  Reply ask(const std::string& prompt, const ParseSpec& spec, std::uint64_t salt) {
    return ask(std::vector<ChatMessage>{ChatMessage::user(prompt)}, spec, salt);
  }

  void note(std::string text) {
    if (ctx_.llm.transcript()) ctx_.llm.transcript()->note(ctx_.transcript_id, text);
    notes_.push_back(std::move(text));
  }

  StrategyResult finish(StrategyOutcome outcome) {
    StrategyResult result;
    result.outcome = std::move(outcome);
    result.prompt_count = prompts_;
    result.transcript_id = ctx_.transcript_id;
    result.notes = std::move(notes_);
    return result;
  }

  int prompts() const { return prompts_; }
  void add_prompts(int n) { prompts_ += n; }
  const ExecContext& ctx() const { return ctx_; }

 private:
  CompletionRequest request(std::vector<ChatMessage> messages, std::uint64_t salt) const {
    CompletionRequest r;
    r.messages = std::move(messages);
    r.temperature = temperature_;
    if (ctx_.seed) r.seed = derive_seed(*ctx_.seed, salt);
    r.conversation_id = ctx_.transcript_id;
    return r;
  }

  const ExecContext& ctx_;
  double temperature_;
  int prompts_ = 0;
  std::vector<std::string> notes_;
};

Bindings item_bindings(const BenchmarkItem& item) {
  Bindings b{{"question", item.question}};
  if (!item.options.empty()) b["options"] = item.options_block();
  return b;
}

std::string with_placeholder_free(std::string text) {
  return text.empty() ? std::string("(no response)") : text;
}

void require_benchmark(const BenchmarkItem& item, StrategyName name) {
  if (!is_applicable(name, item.benchmark)) {
    throw StrategyBenchmarkMismatch(std::string(to_string(name)) + " is not evaluated on " +
                                    std::string(to_string(item.benchmark)));
  }
}

SampleSet sample_in(Session& session, const BenchmarkItem& item, int n, SampleBase base,
                    const StrategyConfig& cfg) {
  std::string prompt;
  ParseSpec spec = answer_spec(item, cfg.tolerance);
  if (base == SampleBase::cot) {
    prompt = session.ctx().templates.render("gsm8k_cot", item_bindings(item));
    spec = ParseSpec::reasoning_plus(ParseSpec::numeric(cfg.tolerance));
  } else {
    prompt = control_prompt(item, session.ctx().templates);
  }
  SampleSet set;
  int before = session.prompts();
  for (int k = 0; k < n; ++k) {
    set.samples.push_back(session.ask(prompt, spec, static_cast<std::uint64_t>(k)).answer);
  }
  set.prompt_count = session.prompts() - before;
  return set;
}

std::vector<std::string> sample_keys(const std::vector<Sample>& samples) {
  std::vector<std::string> keys;
  for (const auto& s : samples) {
    if (s) keys.push_back(s->key());
  }
  return keys;
}

const ParsedAnswer& first_with_key(const std::vector<Sample>& samples, const std::string& key) {
  for (const auto& s : samples) {
    if (s && s->key() == key) return *s;
  }
  throw EmptyBallot("no sample carries the voted value");
}

StrategyResult vote_over(Session& session, SampleSet set) {
  auto keys = sample_keys(set.samples);
  if (keys.empty()) {
    auto result = session.finish(Invalid{"empty ballot: no sample parsed"});
    result.samples = std::move(set.samples);
    return result;
  }
  std::string winner = majority_vote(keys);
  ParsedAnswer answer = first_with_key(set.samples, winner);
  auto result = session.finish(Answered{std::move(answer)});
  result.samples = std::move(set.samples);
  return result;
}

std::string mad_template_prefix(Benchmark b) { return std::string(to_string(b)); }

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(StrategyName name) {
  switch (name) {
    case StrategyName::control: return "control";
    case StrategyName::cot: return "cot";
    case StrategyName::sc: return "sc";
    case StrategyName::sc_cot: return "sc_cot";
    case StrategyName::tot: return "tot";
    case StrategyName::mad: return "mad";
    case StrategyName::reflection: return "reflection";
    case StrategyName::cp: return "cp";
    case StrategyName::cove1: return "cove1";
    case StrategyName::cove2: return "cove2";
    case StrategyName::kgr: return "kgr";
    case StrategyName::ddga: return "ddga";
  }
  return "control";
}

std::span<const StrategyName> all_strategies() {
  static constexpr std::array kAll = {StrategyName::control, StrategyName::cot,        StrategyName::sc,
                                      StrategyName::sc_cot,  StrategyName::tot,        StrategyName::mad,
                                      StrategyName::reflection, StrategyName::cp,      StrategyName::cove1,
                                      StrategyName::cove2,   StrategyName::kgr,        StrategyName::ddga};
  return kAll;
}

StrategyName strategy_from_string(std::string_view text) {
  for (auto name : all_strategies()) {
    if (to_string(name) == text) return name;
  }
  throw ConfigError("unknown strategy: " + std::string(text));
}

bool is_applicable(StrategyName name, Benchmark benchmark) {
  using S = StrategyName;
  switch (benchmark) {
    case Benchmark::gsm8k:
      return name == S::control || name == S::cot || name == S::sc || name == S::sc_cot || name == S::tot ||
             name == S::mad;
    case Benchmark::triviaqa:
      return name == S::control || name == S::sc || name == S::cp || name == S::kgr || name == S::cove1 ||
             name == S::mad || name == S::ddga;
    case Benchmark::mmlu:
      return name == S::control || name == S::sc || name == S::cp || name == S::mad || name == S::reflection ||
             name == S::cove2;
  }
  return false;
}

void StrategyConfig::validate() const {
  if (sample_count < 1) throw ConfigError("sample_count must be positive");
  if ((name == StrategyName::sc || name == StrategyName::sc_cot) && sample_count % 2 == 0) {
    throw ConfigError("sample_count must be odd for sc/sc_cot");
  }
  if (name == StrategyName::cp && sample_count != 5) throw ConfigError("cp uses exactly 5 samples");
  if (max_debate_rounds < 1) throw ConfigError("max_debate_rounds must be positive");
  if (debater_count != 2) throw ConfigError("debater_count is fixed at 2");
  if (tolerance < 0) throw ConfigError("tolerance must be >= 0");
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature outside [0, 2]");
}

std::string_view to_string(AbstainReason reason) {
  switch (reason) {
    case AbstainReason::contradiction: return "contradiction";
    case AbstainReason::verification_failed: return "verification_failed";
    case AbstainReason::kg_unresolvable: return "kg_unresolvable";
  }
  return "contradiction";
}

AbstainReason abstain_reason_from_string(std::string_view text) {
  if (text == "contradiction") return AbstainReason::contradiction;
  if (text == "verification_failed") return AbstainReason::verification_failed;
  if (text == "kg_unresolvable") return AbstainReason::kg_unresolvable;
  throw FormatError("unknown abstain reason: " + std::string(text));
}

json to_json(const ParsedAnswer& answer) {
  json j = {{"kind", to_string(answer.kind)}, {"value", answer.value}};
  if (answer.reasoning_steps) j["steps"] = *answer.reasoning_steps;
  return j;
}

ParsedAnswer parsed_answer_from_json(const json& j) {
  ParsedAnswer a;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "numeric") a.kind = AnswerKind::numeric;
  else if (kind == "choice") a.kind = AnswerKind::choice;
  else if (kind == "freetext") a.kind = AnswerKind::freetext;
  else throw FormatError("unknown answer kind: " + kind);
  a.value = j.at("value").get<std::string>();
  if (j.contains("steps")) a.reasoning_steps = j["steps"].get<std::vector<std::string>>();
  return a;
}

json to_json(const StrategyOutcome& outcome) {
  if (const auto* a = std::get_if<Answered>(&outcome)) {
    json j = to_json(a->value);
    j["status"] = "answered";
    return j;
  }
  if (const auto* ab = std::get_if<Abstained>(&outcome)) {
    return {{"status", "abstained"}, {"reason", to_string(ab->reason)}};
  }
  return {{"status", "invalid"}, {"reason", std::get<Invalid>(outcome).reason}};
}

StrategyOutcome outcome_from_json(const json& j) {
  std::string status = j.at("status").get<std::string>();
  if (status == "answered") return Answered{parsed_answer_from_json(j)};
  if (status == "abstained") return Abstained{abstain_reason_from_string(j.at("reason").get<std::string>())};
  if (status == "invalid") return Invalid{j.value("reason", "")};
  throw FormatError("unknown outcome status: " + status);
}

std::string control_prompt(const BenchmarkItem& item, const TemplateLibrary& templates) {
  switch (item.benchmark) {
    case Benchmark::gsm8k: return templates.render("gsm8k_control", item_bindings(item));
    case Benchmark::triviaqa: return templates.render("triviaqa_control", item_bindings(item));
    case Benchmark::mmlu: return templates.render("mmlu_control", item_bindings(item));
  }
  return {};
}

ParseSpec answer_spec(const BenchmarkItem& item, int tolerance) {
  switch (item.benchmark) {
    case Benchmark::gsm8k: return ParseSpec::numeric(tolerance);
    case Benchmark::triviaqa: return ParseSpec::freetext(tolerance);
    case Benchmark::mmlu: return ParseSpec::choice(item.option_labels(), tolerance);
  }
  return ParseSpec::freetext(tolerance);
}

std::string majority_vote(std::span<const std::string> values) {
  if (values.empty()) throw EmptyBallot("no parseable samples to vote on");
  std::map<std::string_view, int> counts;
  for (const auto& v : values) ++counts[v];
  // Scanning in sample order and replacing only on a strictly higher count
  // keeps the earliest first occurrence among tied values.
  std::string_view best;
  int best_count = 0;
  for (const auto& v : values) {
    int c = counts[v];
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  }
  return std::string(best);
}

// ---------------------------------------------------------------------------

StrategyResult run_control(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  Session session(ctx, cfg.temperature);
  auto reply = session.ask(control_prompt(item, ctx.templates), answer_spec(item, cfg.tolerance), kStepSalt);
  if (!reply.answer) return session.finish(Invalid{"tolerance exceeded"});
  return session.finish(Answered{std::move(*reply.answer)});
}

StrategyResult run_cot(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  require_benchmark(item, StrategyName::cot);
  Session session(ctx, cfg.temperature);
  auto reply = session.ask(ctx.templates.render("gsm8k_cot", item_bindings(item)),
                           ParseSpec::reasoning_plus(ParseSpec::numeric(cfg.tolerance)), kStepSalt);
  if (!reply.answer) return session.finish(Invalid{"tolerance exceeded"});
  return session.finish(Answered{std::move(*reply.answer)});
}

SampleSet sample_n(const BenchmarkItem& item, int n, SampleBase base, const StrategyConfig& cfg,
                   const ExecContext& ctx) {
  if (n < 1) throw ConfigError("sample_n needs n >= 1");
  Session session(ctx, cfg.temperature);
  return sample_in(session, item, n, base, cfg);
}

StrategyResult run_sc(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  Session session(ctx, cfg.temperature);
  return vote_over(session, sample_in(session, item, cfg.sample_count, SampleBase::control, cfg));
}

StrategyResult run_sc_cot(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  require_benchmark(item, StrategyName::sc_cot);
  Session session(ctx, cfg.temperature);
  return vote_over(session, sample_in(session, item, cfg.sample_count, SampleBase::cot, cfg));
}

StrategyResult run_tot(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  require_benchmark(item, StrategyName::tot);
  Session session(ctx, cfg.temperature);
  SampleSet set = sample_in(session, item, cfg.sample_count, SampleBase::cot, cfg);

  std::vector<const ParsedAnswer*> candidates;
  for (const auto& s : set.samples) {
    if (s) candidates.push_back(&*s);
  }
  if (candidates.empty()) {
    auto result = session.finish(Invalid{"empty ballot: no reasoning path parsed"});
    result.samples = std::move(set.samples);
    return result;
  }

  if (candidates.size() == 1) {
    session.note("tot: single parsed path, vote skipped");
    auto result = session.finish(Answered{*candidates.front()});
    result.samples = std::move(set.samples);
    return result;
  }

  std::string paths;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    labels.push_back(std::to_string(i + 1));
    paths += "\n\nOption " + labels.back() + ":\n" + to_marker_text(*candidates[i]);
  }
  Bindings b = item_bindings(item);
  b["reasoning_paths"] = paths;
  auto vote = session.ask(ctx.templates.render("gsm8k_tot_vote", b), ParseSpec::choice(labels, cfg.tolerance),
                          kStepSalt);
  StrategyResult result = vote.answer
                              ? session.finish(Answered{*candidates[std::stoul(vote.answer->value) - 1]})
                              : session.finish(Invalid{"vote index unparseable"});
  result.samples = std::move(set.samples);
  return result;
}

StrategyResult run_cp(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  Session session(ctx, cfg.temperature);
  SampleSet set = sample_in(session, item, cfg.sample_count, SampleBase::control, cfg);
  auto keys = sample_keys(set.samples);
  StrategyResult result;
  if (keys.empty()) {
    result = session.finish(Invalid{"empty ballot: no sample parsed"});
  } else if (std::all_of(keys.begin(), keys.end(), [&](const std::string& k) { return k == keys.front(); })) {
    result = session.finish(Answered{first_with_key(set.samples, keys.front())});
  } else {
    result = session.finish(Abstained{AbstainReason::contradiction});
  }
  result.samples = std::move(set.samples);
  return result;
}

StrategyResult run_mad(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  Session session(ctx, cfg.temperature);
  const std::string prefix = mad_template_prefix(item.benchmark);
  const ParseSpec spec = answer_spec(item, cfg.tolerance);
  const Bindings base = item_bindings(item);

  std::array<std::vector<ChatMessage>, 2> history;
  std::array<std::string, 2> latest_raw;
  std::array<Sample, 2> latest;

  auto speak = [&](int debater, std::string prompt, std::uint64_t salt) {
    history[debater].push_back(ChatMessage::user(std::move(prompt)));
    auto reply = session.ask(history[debater], spec, salt);
    latest_raw[debater] = with_placeholder_free(reply.raw);
    latest[debater] = std::move(reply.answer);
    history[debater].push_back(ChatMessage::assistant(latest_raw[debater]));
  };
  auto agreed = [&] { return latest[0] && latest[1] && latest[0]->key() == latest[1]->key(); };

  const std::string opening = ctx.templates.render(prefix + "_mad_initial", base);
  speak(0, opening, kDebateSalt);
  speak(1, opening, kDebateSalt + 1);

  int rounds = 0;
  while (!agreed() && rounds < cfg.max_debate_rounds) {
    ++rounds;
    // Both debaters see the other's answer from the previous round.
    std::array<std::string, 2> prompts;
    for (int d = 0; d < 2; ++d) {
      Bindings b = base;
      b["other_solution"] = latest_raw[1 - d];
      prompts[d] = ctx.templates.render(prefix + "_mad_iterative", b);
    }
    for (int d = 0; d < 2; ++d) {
      speak(d, std::move(prompts[d]), kDebateSalt + 2 * static_cast<std::uint64_t>(rounds) + d);
    }
  }

  StrategyResult result = latest[0] ? session.finish(Answered{*latest[0]})
                                    : session.finish(Invalid{"first debater's final answer unparseable"});
  result.debate_rounds = rounds;
  return result;
}

StrategyResult run_reflection(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  require_benchmark(item, StrategyName::reflection);
  Session session(ctx, cfg.temperature);
  Bindings b = item_bindings(item);
  std::string initial = with_placeholder_free(
      session.raw({ChatMessage::user(ctx.templates.render("reflect_initial", b))}, kStepSalt));
  b["initial_answer"] = initial;
  std::string feedback = with_placeholder_free(
      session.raw({ChatMessage::user(ctx.templates.render("reflect_critique", b))}, kStepSalt + 1));
  b["feedback"] = feedback;
  auto revised = session.ask(ctx.templates.render("reflect_revise", b), answer_spec(item, cfg.tolerance),
                             kStepSalt + 2);
  if (!revised.answer) return session.finish(Invalid{"revision unparseable"});
  return session.finish(Answered{std::move(*revised.answer)});
}

StrategyResult run_cove1(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  require_benchmark(item, StrategyName::cove1);
  Session session(ctx, cfg.temperature);
  Bindings b = item_bindings(item);
  b["initial_answer"] = with_placeholder_free(
      session.raw({ChatMessage::user(ctx.templates.render("cove1_initial", b))}, kStepSalt));
  b["verification_question"] = with_placeholder_free(
      session.raw({ChatMessage::user(ctx.templates.render("cove1_genq", b))}, kStepSalt + 1));
  // Answered in a fresh context so the baseline cannot leak into it.
  b["verification_answer"] = with_placeholder_free(
      session.raw({ChatMessage::user(ctx.templates.render("cove1_verify", b))}, kStepSalt + 2));
  auto verdict = session.ask(ctx.templates.render("cove1_check", b), ParseSpec::yes_no(cfg.tolerance),
                             kStepSalt + 3);
  if (!verdict.answer) return session.finish(Invalid{"contradiction verdict unparseable"});
  if (verdict.answer->value == "YES") return session.finish(Abstained{AbstainReason::verification_failed});
  auto final_answer = session.ask(control_prompt(item, ctx.templates), answer_spec(item, cfg.tolerance),
                                  kStepSalt + 4);
  if (!final_answer.answer) return session.finish(Invalid{"final answer unparseable"});
  return session.finish(Answered{std::move(*final_answer.answer)});
}

StrategyResult run_cove2(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  require_benchmark(item, StrategyName::cove2);
  Session session(ctx, cfg.temperature);
  const ParseSpec spec = answer_spec(item, cfg.tolerance);
  auto initial = session.ask(control_prompt(item, ctx.templates), spec, kStepSalt);
  if (!initial.answer) return session.finish(Invalid{"initial choice unparseable"});

  Bindings b = item_bindings(item);
  b["chosen_option"] = initial.answer->value;
  b["independent_answer"] = with_placeholder_free(
      session.raw({ChatMessage::user(ctx.templates.render("cove2_open", b))}, kStepSalt + 1));
  auto verdict = session.ask(ctx.templates.render("cove2_check", b), ParseSpec::yes_no(cfg.tolerance),
                             kStepSalt + 2);
  if (!verdict.answer) return session.finish(Invalid{"match verdict unparseable"});
  if (verdict.answer->value == "NO") return session.finish(Abstained{AbstainReason::verification_failed});

  auto confirmed = session.ask(ctx.templates.render("cove2_confirm", b), spec, kStepSalt + 3);
  if (!confirmed.answer) return session.finish(Invalid{"confirmation unparseable"});
  return session.finish(Answered{std::move(*initial.answer)});
}

StrategyResult run_kgr(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  require_benchmark(item, StrategyName::kgr);
  if (!ctx.kg) throw ConfigError("kgr requires a knowledge-graph client");
  Session session(ctx, cfg.temperature);
  const ParseSpec spec = answer_spec(item, cfg.tolerance);
  auto initial = session.ask(control_prompt(item, ctx.templates), spec, kStepSalt);
  if (!initial.answer) return session.finish(Invalid{"initial answer unparseable"});

  Bindings b = item_bindings(item);
  b["answer"] = initial.answer->value;
  auto entity_term = session.ask(ctx.templates.render("kgr_entity", b), ParseSpec::freetext(cfg.tolerance),
                                 kStepSalt + 1);
  if (!entity_term.answer) return session.finish(Abstained{AbstainReason::kg_unresolvable});

  EntityCandidate entity;
  std::vector<PropertyRef> properties;
  try {
    auto candidates = ctx.kg->search_entities(entity_term.answer->value);
    if (candidates.empty()) {
      session.note("kg: no entity found for '" + entity_term.answer->value + "'");
      return session.finish(Abstained{AbstainReason::kg_unresolvable});
    }
    entity = candidates.front();
    properties = ctx.kg->list_properties(entity.id);
  } catch (const KgClientError& e) {
    session.note(std::string("kg error: ") + e.what());
    return session.finish(Abstained{AbstainReason::kg_unresolvable});
  }
  if (properties.empty()) {
    session.note("kg: entity " + entity.id + " has no properties");
    return session.finish(Abstained{AbstainReason::kg_unresolvable});
  }
  std::sort(properties.begin(), properties.end(),
            [](const PropertyRef& a, const PropertyRef& c) { return a.label < c.label || (a.label == c.label && a.id < c.id); });
  if (properties.size() > kMaxKgProperties) properties.resize(kMaxKgProperties);

  std::string listing;
  for (const auto& p : properties) listing += "\n- " + p.label;
  b["entity"] = entity.label;
  b["properties"] = listing;
  auto selection = session.ask(ctx.templates.render("kgr_property", b), ParseSpec::freetext(cfg.tolerance),
                               kStepSalt + 2);
  if (!selection.answer) return session.finish(Abstained{AbstainReason::kg_unresolvable});
  const std::string wanted = normalize_text(selection.answer->value);
  auto chosen = std::find_if(properties.begin(), properties.end(),
                             [&](const PropertyRef& p) { return normalize_text(p.label) == wanted; });
  if (chosen == properties.end()) {
    session.note("kg: selected property '" + selection.answer->value + "' is not offered");
    return session.finish(Abstained{AbstainReason::kg_unresolvable});
  }

  Triple triple;
  try {
    triple = ctx.kg->get_property(entity.id, chosen->id);
  } catch (const KgClientError& e) {
    session.note(std::string("kg error: ") + e.what());
    return session.finish(Abstained{AbstainReason::kg_unresolvable});
  }
  b["triple"] = triple.to_text();
  auto final_answer = session.ask(ctx.templates.render("kgr_final", b), spec, kStepSalt + 3);
  if (!final_answer.answer) return session.finish(Invalid{"final answer unparseable"});
  return session.finish(Answered{std::move(*final_answer.answer)});
}

StrategyResult run_ddga(const BenchmarkItem& item, const StrategyConfig& cfg, const ExecContext& ctx) {
  require_benchmark(item, StrategyName::ddga);
  Session session(ctx, cfg.temperature);
  std::string prompt;
  ToolResult found = ctx.search ? ctx.search->search(item.question)
                                : ToolResult::failure(ToolErrorKind::network, "no search client configured");
  if (found.ok) {
    Bindings b = item_bindings(item);
    b["search_results"] = truncate_chars(found.content, kSearchCharLimit);
    prompt = ctx.templates.render("triviaqa_ddga", b);
  } else {
    session.note("degraded: search failed (" + std::string(to_string(*found.error_kind)) + "): " + found.content);
    prompt = control_prompt(item, ctx.templates);
  }
  auto reply = session.ask(prompt, answer_spec(item, cfg.tolerance), kStepSalt);
  if (!reply.answer) return session.finish(Invalid{"tolerance exceeded"});
  return session.finish(Answered{std::move(*reply.answer)});
}

StrategyResult run_strategy(const StrategyConfig& cfg, const BenchmarkItem& item, const ExecContext& ctx) {
  require_benchmark(item, cfg.name);
  switch (cfg.name) {
    case StrategyName::control: return run_control(item, cfg, ctx);
    case StrategyName::cot: return run_cot(item, cfg, ctx);
    case StrategyName::sc: return run_sc(item, cfg, ctx);
    case StrategyName::sc_cot: return run_sc_cot(item, cfg, ctx);
    case StrategyName::tot: return run_tot(item, cfg, ctx);
    case StrategyName::mad: return run_mad(item, cfg, ctx);
    case StrategyName::reflection: return run_reflection(item, cfg, ctx);
    case StrategyName::cp: return run_cp(item, cfg, ctx);
    case StrategyName::cove1: return run_cove1(item, cfg, ctx);
    case StrategyName::cove2: return run_cove2(item, cfg, ctx);
    case StrategyName::kgr: return run_kgr(item, cfg, ctx);
    case StrategyName::ddga: return run_ddga(item, cfg, ctx);
  }
  throw ConfigError("unhandled strategy");
}

}  // namespace hallu
