#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agentdiff/corpus.hpp"
#include "agentdiff/error.hpp"
#include "agentdiff/stats.hpp"

namespace agentdiff::divergence {

// Collapses whitespace runs to single spaces and trims; case and punctuation
// are kept.
std::string normalize_step(std::string_view text);

// How two steps are compared: normalized string equality, or TF-IDF cosine at
// or above a threshold.
struct AlignMode {
  enum class Kind { exact, tfidf };
  Kind kind = Kind::exact;
  double threshold = 1.0;

  static AlignMode exact() { return {Kind::exact, 1.0}; }
  static AlignMode tfidf(double tau) { return {Kind::tfidf, tau}; }
  // "exact" or "tfidf@0.3"
  std::string label() const;
  static AlignMode parse(std::string_view label);
};

// The four modes reported per pair.
std::vector<AlignMode> standard_modes();

using SparseVector = std::map<std::string, double>;

// TF-IDF over a small document set: raw term counts, idf = ln((1+D)/(1+df)) + 1,
// L2-normalized. An empty document maps to the zero vector.
std::vector<SparseVector> tfidf_vectors(std::span<const std::string> documents);

// Dot product of two normalized vectors; 0 if either is zero.
double cosine(const SparseVector& a, const SparseVector& b);

// Text used for step equality: thought and action, observation ignored.
std::string step_text(const Step& step);

// Precomputes step texts and the pair's TF-IDF vectors so all modes can be
// evaluated on one pair cheaply.
class PairAligner {
 public:
  PairAligner(const Trajectory& original, const Trajectory& variant);
  PairAligner(std::vector<std::string> original_steps, std::vector<std::string> variant_steps);

  std::size_t original_size() const { return orig_.size(); }
  std::size_t variant_size() const { return var_.size(); }

  // 0-based indices.
  bool matches(std::size_t variant_step, std::size_t original_step, const AlignMode& mode) const;

  // 1-based divergence step, absent when the trajectories align fully.
  std::optional<int> divergence_step(const AlignMode& mode) const;
  int cascade_depth(const AlignMode& mode) const;
  // Whether the cascade scan ran off the end of the variant without resync.
  bool cascade_unresolved(const AlignMode& mode) const;

 private:
  std::vector<std::string> orig_;
  std::vector<std::string> var_;
  std::vector<SparseVector> orig_vec_;
  std::vector<SparseVector> var_vec_;
};

std::optional<int> divergence_step(const Trajectory& original, const Trajectory& variant,
                                   const AlignMode& mode);
int cascade_depth(const Trajectory& original, const Trajectory& variant, const AlignMode& mode);

enum class Pattern { no_divergence, self_correct, propagated, truncated };
std::string_view to_string(Pattern p);
Pattern parse_pattern(std::string_view s);

struct PropagationDetails {
  std::string cell_key;
  std::string original_id;
  std::string variant_id;
  std::optional<int> divergence_step;  // exact mode
  std::map<std::string, int> cascade_depth;  // keyed by AlignMode::label()
  Pattern pattern = Pattern::no_divergence;
  // Thought-only TF-IDF cosine between step k of each trajectory, k = 1..min.
  std::vector<double> step_similarity;

  bool operator==(const PropagationDetails&) const = default;
};

// Per-step thought similarity (thought text only, TF-IDF over the pair).
std::vector<double> thought_similarity(const Trajectory& original, const Trajectory& variant);

using AnswerEquivalence = std::function<bool(std::string_view, std::string_view)>;

// no_divergence without a divergence step; self_correct when the final
// answers are equivalent; truncated when the variant hit max_steps before
// resyncing; propagated otherwise.
Pattern classify_pattern(std::optional<int> divergence, bool answers_equivalent,
                         bool variant_hit_max_steps, bool unresolved);

PropagationDetails analyze_pair(const Trajectory& original, const Trajectory& variant,
                                const AnswerEquivalence& equivalent);

// One analyzed pair with the grouping keys the probes need.
struct ProbePair {
  std::string question_id;
  Scaffold scaffold = Scaffold::cot;
  Side side = Side::meaning_bearing;
  PropagationDetails details;
};

struct ProbeReport {
  // M1: paired t on per-(question, scaffold) mean divergence step, sem − sur.
  stats::StatResult m1_divergence_step;
  // M2: Fisher exact on self_correct counts; rates are per side.
  stats::StatResult m2_self_correct;
  double m2_rate_meaning_bearing = stats::kNaN;
  double m2_rate_presentation = stats::kNaN;
  // M3: paired t on per-group mean exact-mode cascade depth, sem − sur.
  stats::StatResult m3_cascade_depth;
  // M4: per-step paired t on thought similarity, k = 1..6.
  std::vector<stats::StatResult> m4_step_similarity;
  std::size_t groups = 0;
  bool insufficient = false;
};

inline constexpr int kProbeSteps = 6;

// Pairs are grouped by (question, scaffold); each side's values are averaged
// within the group before the paired tests, and only groups holding both
// sides contribute.
ProbeReport mechanism_probes(std::span<const ProbePair> pairs);

}  // namespace agentdiff::divergence
