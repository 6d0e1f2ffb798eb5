#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agentdiff {

enum class Benchmark { gsm8k, math, hotpotqa };
enum class Operator { paraphrase, synonym, reorder, format, distractor };
enum class Side { meaning_bearing, presentation };
enum class Scaffold { cot, react, direct };
enum class Tier { weak, mid, strong, frontier };
enum class Proxy { edit_norm, token_jaccard, embed_cosine_dist, length_ratio };

inline constexpr std::array<Operator, 5> kOperators = {
    Operator::paraphrase, Operator::synonym, Operator::reorder, Operator::format,
    Operator::distractor};
inline constexpr std::array<Proxy, 4> kProxies = {Proxy::edit_norm, Proxy::token_jaccard,
                                                  Proxy::embed_cosine_dist,
                                                  Proxy::length_ratio};
inline constexpr std::array<Benchmark, 3> kBenchmarks = {Benchmark::gsm8k, Benchmark::math,
                                                         Benchmark::hotpotqa};

// Which side of the taxonomy an operator belongs to. Paraphrase and synonym
// target meaning-bearing tokens; the rest only touch presentation.
constexpr Side side_of(Operator op) {
  return (op == Operator::paraphrase || op == Operator::synonym) ? Side::meaning_bearing
                                                                 : Side::presentation;
}

std::string_view to_string(Benchmark b);
std::string_view to_string(Operator o);
std::string_view to_string(Side s);
std::string_view to_string(Scaffold s);
std::string_view to_string(Tier t);
std::string_view to_string(Proxy p);

Benchmark parse_benchmark(std::string_view s);
Operator parse_operator(std::string_view s);
Side parse_side(std::string_view s);
Scaffold parse_scaffold(std::string_view s);
Tier parse_tier(std::string_view s);
Proxy parse_proxy(std::string_view s);

struct Question {
  std::string id;
  Benchmark benchmark = Benchmark::gsm8k;
  std::string text;
  std::string gold_answer;
  std::map<std::string, std::string> meta;

  bool operator==(const Question&) const = default;
};

struct Variant {
  std::string id;
  std::string question_id;
  Operator op = Operator::paraphrase;
  Side side = Side::meaning_bearing;
  std::string text;
  std::map<Proxy, double> severity;
  std::optional<bool> judge_equivalent;

  // Unjudged variants count as passing; only an explicit "not equivalent"
  // verdict removes a variant.
  bool passes_judge() const { return judge_equivalent.value_or(true); }

  bool operator==(const Variant&) const = default;
};

struct Cell {
  std::string model_id;
  std::string family;
  Benchmark benchmark = Benchmark::gsm8k;
  Scaffold scaffold = Scaffold::cot;
  std::optional<Tier> tier;
  std::optional<double> accuracy;

  // model_id + "__" + benchmark + "__" + scaffold
  std::string key() const;

  bool operator==(const Cell&) const = default;
};

struct Step {
  int index = 1;
  std::string thought;
  std::string action;
  std::string observation;

  bool operator==(const Step&) const = default;
};

struct RunMeta {
  std::uint64_t seed = 0;
  std::string timestamp;
  std::string endpoint;

  bool operator==(const RunMeta&) const = default;
};

struct Trajectory {
  std::string cell_key;
  std::string subject_id;
  bool is_original = true;
  std::vector<Step> steps;
  std::string final_answer;
  RunMeta run_meta;
  // Endpoint failed after retries; steps are empty and the record is kept
  // only for telemetry.
  bool failed = false;
  // The scaffold stopped because max_steps was reached rather than by a
  // finish action or natural end of output.
  bool hit_max_steps = false;

  bool operator==(const Trajectory&) const = default;
};

struct CellMetrics {
  Cell cell;
  int n_originals = 0;
  std::map<Operator, double> ir_per_operator;
  std::optional<double> delta_raw;
  std::map<Proxy, double> delta_matched;
  double accuracy = 0.0;

  bool operator==(const CellMetrics&) const = default;
};

enum class Verdict { equivalent, not_equivalent, indeterminate };

struct JudgeDecision {
  std::string variant_id;
  std::string judge_id;
  Verdict verdict = Verdict::indeterminate;
  std::string rationale;
  std::string raw_response;

  bool operator==(const JudgeDecision&) const = default;
};

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

// Reads a benchmark dump (one JSON object per line, schema per benchmark in
// docs/schema.md) and returns at most `limit` questions. The sample is a
// seeded shuffle followed by a prefix take, so raising `limit` only appends.
// Warnings (e.g. empty input) are appended to `warnings` when given.
std::vector<Question> ingest_benchmark(const std::filesystem::path& path, Benchmark benchmark,
                                       std::size_t limit, std::uint64_t seed,
                                       std::vector<std::string>* warnings = nullptr);

// Workspace layout.
namespace layout {
std::filesystem::path corpus_file(const std::filesystem::path& root, Benchmark b);
std::filesystem::path variants_file(const std::filesystem::path& root, Benchmark b);
std::filesystem::path trajectory_file(const std::filesystem::path& root,
                                      const std::string& cell_key, bool original);
std::filesystem::path cells_file(const std::filesystem::path& root);
std::filesystem::path metrics_file(const std::filesystem::path& root);
std::filesystem::path judgments_file(const std::filesystem::path& root,
                                     const std::string& judge_id);
std::filesystem::path propagation_file(const std::filesystem::path& root);
}  // namespace layout

}  // namespace agentdiff
