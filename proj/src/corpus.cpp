#include "agentdiff/corpus.hpp"

#include <fstream>
#include <numeric>
#include <set>

#include "agentdiff/error.hpp"
#include "agentdiff/records.hpp"
#include "agentdiff/rng.hpp"
#include "agentdiff/text.hpp"

namespace agentdiff {

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             std::string_view what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <class E, std::size_t N>
std::string_view name_of(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return "?";
}

constexpr std::array<std::pair<Benchmark, std::string_view>, 3> kBenchmarkNames = {
    {{Benchmark::gsm8k, "gsm8k"}, {Benchmark::math, "math"}, {Benchmark::hotpotqa, "hotpotqa"}}};
constexpr std::array<std::pair<Operator, std::string_view>, 5> kOperatorNames = {
    {{Operator::paraphrase, "paraphrase"},
     {Operator::synonym, "synonym"},
     {Operator::reorder, "reorder"},
     {Operator::format, "format"},
     {Operator::distractor, "distractor"}}};
constexpr std::array<std::pair<Side, std::string_view>, 2> kSideNames = {
    {{Side::meaning_bearing, "meaning_bearing"}, {Side::presentation, "presentation"}}};
constexpr std::array<std::pair<Scaffold, std::string_view>, 3> kScaffoldNames = {
    {{Scaffold::cot, "cot"}, {Scaffold::react, "react"}, {Scaffold::direct, "direct"}}};
constexpr std::array<std::pair<Tier, std::string_view>, 4> kTierNames = {{{Tier::weak, "weak"},
                                                                         {Tier::mid, "mid"},
                                                                         {Tier::strong, "strong"},
                                                                         {Tier::frontier, "frontier"}}};
constexpr std::array<std::pair<Proxy, std::string_view>, 4> kProxyNames = {
    {{Proxy::edit_norm, "edit_norm"},
     {Proxy::token_jaccard, "token_jaccard"},
     {Proxy::embed_cosine_dist, "embed_cosine_dist"},
     {Proxy::length_ratio, "length_ratio"}}};
constexpr std::array<std::pair<Verdict, std::string_view>, 3> kVerdictNames = {
    {{Verdict::equivalent, "equivalent"},
     {Verdict::not_equivalent, "not_equivalent"},
     {Verdict::indeterminate, "indeterminate"}}};

std::string require_string(const nlohmann::json& row, const char* field, const std::string& path,
                           std::size_t line) {
  if (!row.contains(field) || !row[field].is_string()) {
    throw FormatError(path, line, std::string("missing required field '") + field + "'");
  }
  return row[field].get<std::string>();
}

// Content of the last \boxed{...} in a MATH solution, braces balanced.
std::optional<std::string> last_boxed(const std::string& s) {
  auto pos = s.rfind("\\boxed{");
  if (pos == std::string::npos) return std::nullopt;
  std::size_t i = pos + 7;
  int depth = 1;
  std::string out;
  for (; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return out;
    out.push_back(s[i]);
  }
  return std::nullopt;
}

std::string subject_key(std::string_view raw) {
  std::string s = text::to_lower_ascii(text::trim(raw));
  s = text::replace_all(s, "&", "and");
  std::string out;
  bool sep = false;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (sep && !out.empty()) out.push_back('_');
      sep = false;
      out.push_back(c);
    } else {
      sep = true;
    }
  }
  return out;
}

Question parse_row(const nlohmann::json& row, Benchmark benchmark, const std::string& path,
                   std::size_t line) {
  Question q;
  q.benchmark = benchmark;
  if (row.contains("id") && row["id"].is_string()) {
    q.id = row["id"].get<std::string>();
  } else if (row.contains("_id") && row["_id"].is_string()) {
    q.id = row["_id"].get<std::string>();
  } else {
    q.id = std::string(to_string(benchmark)) + "-" + std::to_string(line);
  }
  switch (benchmark) {
    case Benchmark::gsm8k: {
      q.text = require_string(row, "question", path, line);
      std::string answer = require_string(row, "answer", path, line);
      auto marker = answer.rfind("####");
      q.gold_answer = text::trim(marker == std::string::npos ? answer : answer.substr(marker + 4));
      break;
    }
    case Benchmark::math: {
      q.text = require_string(row, "problem", path, line);
      if (row.contains("answer") && row["answer"].is_string()) {
        q.gold_answer = row["answer"].get<std::string>();
      } else if (row.contains("solution") && row["solution"].is_string()) {
        auto boxed = last_boxed(row["solution"].get<std::string>());
        if (!boxed) throw FormatError(path, line, "missing required field 'answer'");
        q.gold_answer = *boxed;
      } else {
        throw FormatError(path, line, "missing required field 'answer'");
      }
      std::string subject;
      if (row.contains("subject") && row["subject"].is_string()) {
        subject = row["subject"].get<std::string>();
      } else if (row.contains("type") && row["type"].is_string()) {
        subject = row["type"].get<std::string>();
      }
      if (!subject.empty()) q.meta["subject"] = subject_key(subject);
      if (row.contains("level") && row["level"].is_string()) {
        q.meta["level"] = row["level"].get<std::string>();
      }
      break;
    }
    case Benchmark::hotpotqa: {
      q.text = require_string(row, "question", path, line);
      q.gold_answer = require_string(row, "answer", path, line);
      if (row.contains("type") && row["type"].is_string()) {
        q.meta["type"] = row["type"].get<std::string>();
      }
      if (row.contains("level") && row["level"].is_string()) {
        q.meta["level"] = row["level"].get<std::string>();
      }
      std::set<std::string> titles;
      if (row.contains("supporting_facts") && row["supporting_facts"].is_array()) {
        q.meta["supporting_facts"] = std::to_string(row["supporting_facts"].size());
        for (const auto& fact : row["supporting_facts"]) {
          if (fact.is_array() && !fact.empty() && fact[0].is_string()) {
            titles.insert(fact[0].get<std::string>());
          }
        }
      }
      if (row.contains("context") && row["context"].is_array()) {
        for (const auto& para : row["context"]) {
          if (!para.is_array() || para.size() < 2 || !para[0].is_string()) continue;
          const auto title = para[0].get<std::string>();
          if (!titles.count(title)) continue;
          std::string body;
          for (const auto& sent : para[1]) {
            if (sent.is_string()) body += sent.get<std::string>();
          }
          q.meta["para:" + title] = text::collapse_whitespace(body);
        }
      }
      break;
    }
  }
  if (text::trim(q.text).empty()) throw FormatError(path, line, "empty question text");
  return q;
}

}  // namespace

std::string_view to_string(Benchmark b) { return name_of(b, kBenchmarkNames); }
std::string_view to_string(Operator o) { return name_of(o, kOperatorNames); }
std::string_view to_string(Side s) { return name_of(s, kSideNames); }
std::string_view to_string(Scaffold s) { return name_of(s, kScaffoldNames); }
std::string_view to_string(Tier t) { return name_of(t, kTierNames); }
std::string_view to_string(Proxy p) { return name_of(p, kProxyNames); }
std::string_view to_string(Verdict v) { return name_of(v, kVerdictNames); }

Benchmark parse_benchmark(std::string_view s) { return parse_enum(s, kBenchmarkNames, "benchmark"); }
Operator parse_operator(std::string_view s) { return parse_enum(s, kOperatorNames, "operator"); }
Side parse_side(std::string_view s) { return parse_enum(s, kSideNames, "side"); }
Scaffold parse_scaffold(std::string_view s) { return parse_enum(s, kScaffoldNames, "scaffold"); }
Tier parse_tier(std::string_view s) { return parse_enum(s, kTierNames, "tier"); }
Proxy parse_proxy(std::string_view s) { return parse_enum(s, kProxyNames, "severity proxy"); }
Verdict parse_verdict(std::string_view s) { return parse_enum(s, kVerdictNames, "verdict"); }

std::string Cell::key() const {
  return model_id + "__" + std::string(to_string(benchmark)) + "__" +
         std::string(to_string(scaffold));
}

std::vector<Question> ingest_benchmark(const std::filesystem::path& path, Benchmark benchmark,
                                       std::size_t limit, std::uint64_t seed,
                                       std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string p = path.string();
  std::vector<Question> all;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(p, line_no, std::string("malformed line: ") + e.what());
    }
    if (!row.is_object()) throw FormatError(p, line_no, "line is not a JSON object");
    Question q = parse_row(row, benchmark, p, line_no);
    if (!ids.insert(q.id).second) throw FormatError(p, line_no, "duplicate id '" + q.id + "'");
    all.push_back(std::move(q));
  }
  if (all.empty() && warnings) warnings->push_back(p + ": no questions found");

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "ingest"));
  rng.shuffle(order);
  std::vector<Question> out;
  for (std::size_t i = 0; i < order.size() && out.size() < limit; ++i) {
    out.push_back(all[order[i]]);
  }
  return out;
}

namespace layout {

std::filesystem::path corpus_file(const std::filesystem::path& root, Benchmark b) {
  return root / "corpus" / (std::string(to_string(b)) + ".qs");
}
std::filesystem::path variants_file(const std::filesystem::path& root, Benchmark b) {
  return root / "variants" / (std::string(to_string(b)) + ".vs");
}
std::filesystem::path trajectory_file(const std::filesystem::path& root,
                                      const std::string& cell_key, bool original) {
  return root / "traj" / cell_key / (original ? "orig.tj" : "var.tj");
}
std::filesystem::path cells_file(const std::filesystem::path& root) {
  return root / "traj" / "cells.cl";
}
std::filesystem::path metrics_file(const std::filesystem::path& root) {
  return root / "metrics" / "cells.cm";
}
std::filesystem::path judgments_file(const std::filesystem::path& root,
                                     const std::string& judge_id) {
  return root / "judgments" / (judge_id + ".jd");
}
std::filesystem::path propagation_file(const std::filesystem::path& root) {
  return root / "analysis" / "propagation.pd";
}

}  // namespace layout

// --- record serialization -------------------------------------------------

void to_json(nlohmann::json& j, const Question& q) {
  j = nlohmann::json{{"id", q.id},
                     {"benchmark", to_string(q.benchmark)},
                     {"text", q.text},
                     {"gold_answer", q.gold_answer},
                     {"meta", q.meta}};
}

void from_json(const nlohmann::json& j, Question& q) {
  q.id = j.at("id").get<std::string>();
  q.benchmark = parse_benchmark(j.at("benchmark").get<std::string>());
  q.text = j.at("text").get<std::string>();
  q.gold_answer = j.at("gold_answer").get<std::string>();
  q.meta = j.value("meta", std::map<std::string, std::string>{});
}

void to_json(nlohmann::json& j, const Variant& v) {
  nlohmann::json sev = nlohmann::json::object();
  for (const auto& [proxy, value] : v.severity) sev[std::string(to_string(proxy))] = value;
  j = nlohmann::json{{"id", v.id},
                     {"question_id", v.question_id},
                     {"operator", to_string(v.op)},
                     {"side", to_string(v.side)},
                     {"text", v.text},
                     {"severity", sev}};
  j["judge_equivalent"] = v.judge_equivalent ? nlohmann::json(*v.judge_equivalent) : nullptr;
}

void from_json(const nlohmann::json& j, Variant& v) {
  v.id = j.at("id").get<std::string>();
  v.question_id = j.at("question_id").get<std::string>();
  v.op = parse_operator(j.at("operator").get<std::string>());
  v.side = parse_side(j.at("side").get<std::string>());
  if (v.side != side_of(v.op)) {
    throw ConfigError("variant " + v.id + ": side does not match operator");
  }
  v.text = j.at("text").get<std::string>();
  v.severity.clear();
  if (j.contains("severity")) {
    for (const auto& [k, value] : j["severity"].items()) {
      v.severity[parse_proxy(k)] = value.get<double>();
    }
  }
  v.judge_equivalent.reset();
  if (j.contains("judge_equivalent") && !j["judge_equivalent"].is_null()) {
    v.judge_equivalent = j["judge_equivalent"].get<bool>();
  }
}

void to_json(nlohmann::json& j, const Cell& c) {
  j = nlohmann::json{{"model_id", c.model_id},
                     {"family", c.family},
                     {"benchmark", to_string(c.benchmark)},
                     {"scaffold", to_string(c.scaffold)}};
  j["tier"] = c.tier ? nlohmann::json(to_string(*c.tier)) : nullptr;
  j["accuracy"] = c.accuracy ? nlohmann::json(*c.accuracy) : nullptr;
}

void from_json(const nlohmann::json& j, Cell& c) {
  c.model_id = j.at("model_id").get<std::string>();
  c.family = j.value("family", std::string());
  c.benchmark = parse_benchmark(j.at("benchmark").get<std::string>());
  c.scaffold = parse_scaffold(j.at("scaffold").get<std::string>());
  c.tier.reset();
  if (j.contains("tier") && !j["tier"].is_null()) c.tier = parse_tier(j["tier"].get<std::string>());
  c.accuracy.reset();
  if (j.contains("accuracy") && !j["accuracy"].is_null()) c.accuracy = j["accuracy"].get<double>();
}

void to_json(nlohmann::json& j, const Step& s) {
  j = nlohmann::json{{"index", s.index},
                     {"thought", s.thought},
                     {"action", s.action},
                     {"observation", s.observation}};
}

void from_json(const nlohmann::json& j, Step& s) {
  s.index = j.at("index").get<int>();
  s.thought = j.value("thought", std::string());
  s.action = j.value("action", std::string());
  s.observation = j.value("observation", std::string());
}

void to_json(nlohmann::json& j, const Trajectory& t) {
  j = nlohmann::json{{"cell_key", t.cell_key},
                     {"subject_id", t.subject_id},
                     {"is_original", t.is_original},
                     {"steps", t.steps},
                     {"final_answer", t.final_answer},
                     {"run_meta",
                      {{"seed", t.run_meta.seed},
                       {"timestamp", t.run_meta.timestamp},
                       {"endpoint", t.run_meta.endpoint}}},
                     {"failed", t.failed},
                     {"hit_max_steps", t.hit_max_steps}};
}

void from_json(const nlohmann::json& j, Trajectory& t) {
  t.cell_key = j.at("cell_key").get<std::string>();
  t.subject_id = j.at("subject_id").get<std::string>();
  t.is_original = j.at("is_original").get<bool>();
  t.steps = j.at("steps").get<std::vector<Step>>();
  t.final_answer = j.at("final_answer").get<std::string>();
  const auto& meta = j.at("run_meta");
  t.run_meta.seed = meta.value("seed", std::uint64_t{0});
  t.run_meta.timestamp = meta.value("timestamp", std::string());
  t.run_meta.endpoint = meta.value("endpoint", std::string());
  t.failed = j.value("failed", false);
  t.hit_max_steps = j.value("hit_max_steps", false);
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (t.steps[i].index != static_cast<int>(i) + 1) {
      throw ConfigError("trajectory " + t.subject_id + ": step indices are not contiguous from 1");
    }
  }
  if (!t.failed && t.steps.empty()) {
    throw ConfigError("trajectory " + t.subject_id + ": no steps");
  }
}

void to_json(nlohmann::json& j, const CellMetrics& m) {
  nlohmann::json ir = nlohmann::json::object();
  for (const auto& [op, v] : m.ir_per_operator) ir[std::string(to_string(op))] = v;
  nlohmann::json matched = nlohmann::json::object();
  for (const auto& [p, v] : m.delta_matched) matched[std::string(to_string(p))] = v;
  j = nlohmann::json{{"cell", m.cell},
                     {"n_originals", m.n_originals},
                     {"ir_per_operator", ir},
                     {"delta_matched", matched},
                     {"accuracy", m.accuracy}};
  j["delta_raw"] = m.delta_raw ? nlohmann::json(*m.delta_raw) : nullptr;
}

void from_json(const nlohmann::json& j, CellMetrics& m) {
  m.cell = j.at("cell").get<Cell>();
  m.n_originals = j.at("n_originals").get<int>();
  m.ir_per_operator.clear();
  for (const auto& [k, v] : j.at("ir_per_operator").items()) {
    m.ir_per_operator[parse_operator(k)] = v.get<double>();
  }
  m.delta_matched.clear();
  if (j.contains("delta_matched")) {
    for (const auto& [k, v] : j["delta_matched"].items()) {
      m.delta_matched[parse_proxy(k)] = v.get<double>();
    }
  }
  m.delta_raw.reset();
  if (j.contains("delta_raw") && !j["delta_raw"].is_null()) m.delta_raw = j["delta_raw"].get<double>();
  m.accuracy = j.at("accuracy").get<double>();
}

void to_json(nlohmann::json& j, const JudgeDecision& d) {
  j = nlohmann::json{{"variant_id", d.variant_id},
                     {"judge_id", d.judge_id},
                     {"verdict", to_string(d.verdict)},
                     {"rationale", d.rationale},
                     {"raw_response", d.raw_response}};
}

void from_json(const nlohmann::json& j, JudgeDecision& d) {
  d.variant_id = j.at("variant_id").get<std::string>();
  d.judge_id = j.at("judge_id").get<std::string>();
  d.verdict = parse_verdict(j.at("verdict").get<std::string>());
  d.rationale = j.value("rationale", std::string());
  d.raw_response = j.value("raw_response", std::string());
}

}  // namespace agentdiff
