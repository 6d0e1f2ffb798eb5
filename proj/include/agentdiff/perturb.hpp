#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "agentdiff/chat.hpp"
#include "agentdiff/corpus.hpp"
#include "agentdiff/error.hpp"

namespace agentdiff::perturb {

enum class Casing { keep, lower, upper, seeded };
enum class ReorderUnit { sentence, clause };

struct FormatRules {
  Casing casing = Casing::keep;
  bool collapse_whitespace = false;
  // Drop spaces before , . ; : ? ! and add one after , ; : when a letter
  // follows directly.
  bool punctuation_spacing = false;
};

struct OperatorConfig {
  Operator op = Operator::format;
  std::uint64_t seed = 0;
  // Meaning-bearing operators only: a generator label or "lexicon".
  std::string generator_ref;
  std::vector<std::string> distractor_pool;
  ReorderUnit reorder_unit = ReorderUnit::sentence;
  FormatRules format;
  double synonym_rate = 0.3;
};

// Synonym table: lower-case headword -> candidate replacements.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::map<std::string, std::vector<std::string>> entries)
      : entries_(std::move(entries)) {}
  // Tab-separated "word<TAB>syn1,syn2"; '#' starts a comment line.
  static Lexicon load(const std::filesystem::path& path);

  const std::vector<std::string>* find(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// One sentence per line; blank lines and '#' comments are skipped.
std::vector<std::string> load_distractor_pool(const std::filesystem::path& path);

// Presentation operators. All are pure functions of (text, config, seed).
std::string apply_format(std::string_view text, const FormatRules& rules, std::uint64_t seed);

// Sentence units end at . ? ! followed by whitespace or end of text; clause
// units additionally break after , and ;. Units are trimmed.
std::vector<std::string> split_units(std::string_view text, ReorderUnit unit);

// Seeded non-identity permutation of the units joined by single spaces.
// Throws NotPerturbable when the text has fewer than two units.
std::string apply_reorder(std::string_view text, ReorderUnit unit, std::uint64_t seed);

struct Insertion {
  std::string text;
  std::string sentence;
  // Byte offset in the output where " " + sentence (or sentence + " " at the
  // very start) was inserted.
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Inserts one seeded pool sentence at a seeded sentence boundary. Removing
// [offset, offset + length) from the output restores the original exactly.
Insertion insert_distractor(std::string_view text, const std::vector<std::string>& pool,
                            std::uint64_t seed);
std::string apply_distractor(std::string_view text, const std::vector<std::string>& pool,
                             std::uint64_t seed);

// Replaces lexicon words with seeded synonyms at the given rate. Tokens listed
// in `protected_tokens` (case-folded) are never touched. Capitalization of the
// first letter is carried over.
std::string apply_synonym_lexicon(std::string_view text, const Lexicon& lexicon, double rate,
                                  std::uint64_t seed,
                                  const std::set<std::string>& protected_tokens = {});

// Paraphrase or synonym. With a generator, returns its rewrite (trimmed);
// `subject_id` is passed to the generator as call context.
// with generator_ref == "lexicon" (synonym only) uses the lexicon.
// Throws GeneratorUnavailable on generator failure or empty output, and
// ConfigError for paraphrase with "lexicon".
std::string apply_meaning_bearing(std::string_view text, const std::string& gold_answer,
                                  const OperatorConfig& config, ChatModel* generator,
                                  const Lexicon* lexicon, const PromptTemplate* prompt,
                                  const std::string& subject_id = "");

// --- Answer equivalence and judging ------------------------------------------

struct Rational {
  long long num = 0;
  long long den = 1;
  bool operator==(const Rational&) const = default;
};

// Parses integers, decimals, a/b, \frac{a}{b}, with optional sign, thousands
// separators, $ and %, after stripping \boxed{} and surrounding $...$.
// Returns the reduced rational, or nullopt if not numeric or out of range.
std::optional<Rational> parse_rational(std::string_view answer);
std::optional<double> parse_number(std::string_view answer);

// Text normalization for non-numeric answers: lower case, punctuation and
// articles dropped, whitespace collapsed.
std::string normalize_answer_text(std::string_view answer);

// Numeric answers compare as exact rationals (or to 1e-9 relative when a
// value does not fit); everything else compares by normalized text.
bool answers_equivalent(std::string_view a, std::string_view b);

// Rules-based screening of a presentation variant: the original question's
// numeric literals (as a multiset) and any gold-answer tokens present in the
// question must survive in the variant. Throws ConfigError for meaning-bearing
// operators, which the rules judge does not screen.
JudgeDecision judge_rules(const Question& original, const Variant& variant);

// Reads a yes/no verdict: a JSON object {"equivalent": bool} or a leading
// yes/no word. Anything else is indeterminate.
Verdict parse_judge_response(std::string_view response);

JudgeDecision judge_llm(const Question& original, const Variant& variant, ChatModel& judge,
                        const PromptTemplate& prompt, const std::string& judge_id);

// --- Variant generation ---------------------------------------------------------

struct GenerationResources {
  ChatModel* generator = nullptr;
  const Lexicon* lexicon = nullptr;
  const PromptTemplate* paraphrase_prompt = nullptr;
  const PromptTemplate* synonym_prompt = nullptr;
  // Per-operator generator overriding `generator` (e.g. paraphrase only).
  std::map<Operator, ChatModel*> generators;
};

struct GenerationLog {
  std::size_t not_perturbable = 0;
  std::size_t generator_unavailable = 0;
  std::vector<std::string> messages;
};

// Variant ids are "<question>::<operator>::<sample>". Each sample uses a seed
// derived from (config seed, question id, sample). Items an operator cannot
// perturb are skipped and logged, never passed through unchanged.
std::vector<Variant> generate_variants(const Question& question,
                                       const std::vector<OperatorConfig>& configs,
                                       int samples_per_operator,
                                       const GenerationResources& resources, GenerationLog& log);

}  // namespace agentdiff::perturb
