#include "agentdiff/divergence.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "agentdiff/error.hpp"
#include "agentdiff/text.hpp"

namespace agentdiff::divergence {

namespace {

constexpr double kCosineSlack = 1e-12;

}  // namespace

std::string normalize_step(std::string_view text) { return text::collapse_whitespace(text); }

std::string AlignMode::label() const {
  if (kind == Kind::exact) return "exact";
  char buf[32];
  std::snprintf(buf, sizeof buf, "tfidf@%g", threshold);
  return buf;
}

AlignMode AlignMode::parse(std::string_view label) {
  if (label == "exact") return exact();
  if (label.substr(0, 6) == "tfidf@") {
    const std::string num(label.substr(6));
    char* end = nullptr;
    const double tau = std::strtod(num.c_str(), &end);
    if (end != num.c_str() && *end == '\0' && tau >= 0.0 && tau <= 1.0) return tfidf(tau);
  }
  throw ConfigError("unknown alignment mode '" + std::string(label) + "'");
}

std::vector<AlignMode> standard_modes() {
  return {AlignMode::exact(), AlignMode::tfidf(0.3), AlignMode::tfidf(0.5), AlignMode::tfidf(0.7)};
}

std::vector<SparseVector> tfidf_vectors(std::span<const std::string> documents) {
  std::vector<std::map<std::string, double>> counts(documents.size());
  std::map<std::string, double> df;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    for (auto& tok : text::tokens(documents[i])) counts[i][tok] += 1.0;
    for (const auto& [term, c] : counts[i]) df[term] += 1.0;
  }
  const auto d = static_cast<double>(documents.size());
  std::vector<SparseVector> out(documents.size());
  for (std::size_t i = 0; i < documents.size(); ++i) {
    double norm = 0.0;
    for (const auto& [term, tf] : counts[i]) {
      const double w = tf * (std::log((1.0 + d) / (1.0 + df[term])) + 1.0);
      out[i][term] = w;
      norm += w * w;
    }
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (auto& [term, w] : out[i]) w /= norm;
    }
  }
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot, -1.0, 1.0);
}

std::string step_text(const Step& step) {
  return normalize_step(step.thought + " " + step.action);
}

namespace {

std::vector<std::string> step_texts(const Trajectory& t) {
  std::vector<std::string> out;
  out.reserve(t.steps.size());
  for (const auto& s : t.steps) out.push_back(step_text(s));
  return out;
}

}  // namespace

PairAligner::PairAligner(const Trajectory& original, const Trajectory& variant)
    : PairAligner(step_texts(original), step_texts(variant)) {}

PairAligner::PairAligner(std::vector<std::string> original_steps,
                         std::vector<std::string> variant_steps)
    : orig_(std::move(original_steps)), var_(std::move(variant_steps)) {
  for (auto& s : orig_) s = normalize_step(s);
  for (auto& s : var_) s = normalize_step(s);
  std::vector<std::string> docs = orig_;
  docs.insert(docs.end(), var_.begin(), var_.end());
  auto vecs = tfidf_vectors(docs);
  orig_vec_.assign(vecs.begin(), vecs.begin() + static_cast<std::ptrdiff_t>(orig_.size()));
  var_vec_.assign(vecs.begin() + static_cast<std::ptrdiff_t>(orig_.size()), vecs.end());
}

bool PairAligner::matches(std::size_t v, std::size_t o, const AlignMode& mode) const {
  if (mode.kind == AlignMode::Kind::exact) return var_[v] == orig_[o];
  return cosine(var_vec_[v], orig_vec_[o]) >= mode.threshold - kCosineSlack;
}

std::optional<int> PairAligner::divergence_step(const AlignMode& mode) const {
  const std::size_t common = std::min(orig_.size(), var_.size());
  for (std::size_t k = 0; k < common; ++k) {
    if (!matches(k, k, mode)) return static_cast<int>(k) + 1;
  }
  if (orig_.size() == var_.size()) return std::nullopt;
  return static_cast<int>(common) + 1;
}

namespace {

struct CascadeScan {
  int depth = 0;
  bool unresolved = false;
};

}  // namespace

static CascadeScan scan(const PairAligner& a, std::optional<int> d, const AlignMode& mode) {
  CascadeScan out;
  if (!d) return out;
  const auto start = static_cast<std::size_t>(*d - 1);
  for (std::size_t k = start; k < a.variant_size(); ++k) {
    for (std::size_t j = start; j < a.original_size(); ++j) {
      if (a.matches(k, j, mode)) return out;
    }
    ++out.depth;
  }
  out.unresolved = true;
  return out;
}

int PairAligner::cascade_depth(const AlignMode& mode) const {
  return scan(*this, divergence_step(mode), mode).depth;
}

bool PairAligner::cascade_unresolved(const AlignMode& mode) const {
  return scan(*this, divergence_step(mode), mode).unresolved;
}

std::optional<int> divergence_step(const Trajectory& original, const Trajectory& variant,
                                   const AlignMode& mode) {
  return PairAligner(original, variant).divergence_step(mode);
}

int cascade_depth(const Trajectory& original, const Trajectory& variant, const AlignMode& mode) {
  return PairAligner(original, variant).cascade_depth(mode);
}

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::no_divergence:
      return "no_divergence";
    case Pattern::self_correct:
      return "self_correct";
    case Pattern::propagated:
      return "propagated";
    case Pattern::truncated:
      return "truncated";
  }
  return "?";
}

Pattern parse_pattern(std::string_view s) {
  for (auto p : {Pattern::no_divergence, Pattern::self_correct, Pattern::propagated,
                 Pattern::truncated}) {
    if (to_string(p) == s) return p;
  }
  throw ConfigError("unknown propagation pattern '" + std::string(s) + "'");
}

std::vector<double> thought_similarity(const Trajectory& original, const Trajectory& variant) {
  const std::size_t common = std::min(original.steps.size(), variant.steps.size());
  std::vector<std::string> docs;
  for (const auto& s : original.steps) docs.push_back(s.thought);
  for (const auto& s : variant.steps) docs.push_back(s.thought);
  const auto vecs = tfidf_vectors(docs);
  std::vector<double> out(common);
  for (std::size_t k = 0; k < common; ++k) {
    out[k] = cosine(vecs[k], vecs[original.steps.size() + k]);
  }
  return out;
}

Pattern classify_pattern(std::optional<int> divergence, bool answers_equivalent,
                         bool variant_hit_max_steps, bool unresolved) {
  if (!divergence) return Pattern::no_divergence;
  if (answers_equivalent) return Pattern::self_correct;
  if (variant_hit_max_steps && unresolved) return Pattern::truncated;
  return Pattern::propagated;
}

PropagationDetails analyze_pair(const Trajectory& original, const Trajectory& variant,
                                const AnswerEquivalence& equivalent) {
  PairAligner aligner(original, variant);
  PropagationDetails d;
  d.cell_key = variant.cell_key;
  d.original_id = original.subject_id;
  d.variant_id = variant.subject_id;
  const auto exact = AlignMode::exact();
  d.divergence_step = aligner.divergence_step(exact);
  for (const auto& mode : standard_modes()) d.cascade_depth[mode.label()] = aligner.cascade_depth(mode);
  d.pattern = classify_pattern(d.divergence_step,
                               equivalent(original.final_answer, variant.final_answer),
                               variant.hit_max_steps, aligner.cascade_unresolved(exact));
  d.step_similarity = thought_similarity(original, variant);
  return d;
}

namespace {

struct SideAcc {
  std::vector<double> divergence;
  std::vector<double> cascade;
  std::vector<std::vector<double>> sim = std::vector<std::vector<double>>(kProbeSteps);
};

std::optional<double> avg(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return stats::mean(v);
}

stats::StatResult paired_gap(const std::vector<double>& diffs, const std::string& method) {
  auto r = stats::paired_t(diffs);
  r.method = method;
  if (diffs.size() < 2) r.degenerate = true;
  return r;
}

}  // namespace

ProbeReport mechanism_probes(std::span<const ProbePair> pairs) {
  using Key = std::pair<std::string, Scaffold>;
  std::map<Key, std::array<SideAcc, 2>> groups;
  std::array<long, 2> self_correct{0, 0};
  std::array<long, 2> totals{0, 0};
  for (const auto& p : pairs) {
    const int s = p.side == Side::meaning_bearing ? 0 : 1;
    auto& acc = groups[{p.question_id, p.scaffold}][s];
    if (p.details.divergence_step) acc.divergence.push_back(*p.details.divergence_step);
    auto it = p.details.cascade_depth.find("exact");
    acc.cascade.push_back(it == p.details.cascade_depth.end() ? 0.0 : it->second);
    for (int k = 0; k < kProbeSteps && k < static_cast<int>(p.details.step_similarity.size()); ++k) {
      acc.sim[k].push_back(p.details.step_similarity[k]);
    }
    totals[s] += 1;
    self_correct[s] += p.details.pattern == Pattern::self_correct;
  }

  ProbeReport report;
  std::vector<double> m1, m3;
  std::vector<std::vector<double>> m4(kProbeSteps);
  for (const auto& [key, sides] : groups) {
    const auto& sem = sides[0];
    const auto& sur = sides[1];
    if (sem.cascade.empty() || sur.cascade.empty()) continue;
    ++report.groups;
    if (auto a = avg(sem.divergence), b = avg(sur.divergence); a && b) m1.push_back(*a - *b);
    m3.push_back(*avg(sem.cascade) - *avg(sur.cascade));
    for (int k = 0; k < kProbeSteps; ++k) {
      if (auto a = avg(sem.sim[k]), b = avg(sur.sim[k]); a && b) m4[k].push_back(*a - *b);
    }
  }
  report.insufficient = report.groups < 2;
  report.m1_divergence_step = paired_gap(m1, "M1_divergence_step");
  report.m3_cascade_depth = paired_gap(m3, "M3_cascade_depth");
  for (int k = 0; k < kProbeSteps; ++k) {
    report.m4_step_similarity.push_back(
        paired_gap(m4[k], "M4_step_similarity_k" + std::to_string(k + 1)));
  }
  report.m2_self_correct = stats::fisher_exact_2x2(
      {{{self_correct[0], totals[0] - self_correct[0]}, {self_correct[1], totals[1] - self_correct[1]}}});
  report.m2_self_correct.method = "M2_self_correct";
  if (totals[0] > 0) report.m2_rate_meaning_bearing = static_cast<double>(self_correct[0]) / totals[0];
  if (totals[1] > 0) report.m2_rate_presentation = static_cast<double>(self_correct[1]) / totals[1];
  report.m2_self_correct.estimate = report.m2_rate_meaning_bearing - report.m2_rate_presentation;
  return report;
}

}  // namespace agentdiff::divergence
