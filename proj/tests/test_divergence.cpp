#include <gtest/gtest.h>

#include <cmath>

#include "agentdiff/divergence.hpp"
#include "oracles.hpp"

using namespace agentdiff;
using namespace agentdiff::divergence;

namespace {

Trajectory from_symbols(const std::string& symbols, bool hit_max = false) {
  Trajectory t;
  int i = 1;
  for (char c : symbols) t.steps.push_back({i++, std::string("step ") + c, "", ""});
  t.hit_max_steps = hit_max;
  return t;
}

}  // namespace

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_step("a  b\n"), "a b");
  EXPECT_EQ(normalize_step(""), "");
  const std::string x = "  Mixed\tCase,  punct!  ";
  EXPECT_EQ(normalize_step(normalize_step(x)), normalize_step(x));
  EXPECT_EQ(normalize_step(x), "Mixed Case, punct!");
}

TEST(Divergence, Examples) {
  EXPECT_FALSE(divergence_step(from_symbols("abc"), from_symbols("abc"), AlignMode::exact()).has_value());
  EXPECT_EQ(divergence_step(from_symbols("abc"), from_symbols("xbc"), AlignMode::exact()), 1);
  EXPECT_EQ(divergence_step(from_symbols("abc"), from_symbols("abx"), AlignMode::exact()), 3);
  EXPECT_EQ(divergence_step(from_symbols("ab"), from_symbols("abc"), AlignMode::exact()), 3);
}

TEST(Cascade, Examples) {
  EXPECT_EQ(cascade_depth(from_symbols("abc"), from_symbols("abc"), AlignMode::exact()), 0);
  // Diverge at 2, variant steps 2-4 unmatched, step 5 resyncs with original step 3.
  EXPECT_EQ(cascade_depth(from_symbols("abcd"), from_symbols("axyzc"), AlignMode::exact()), 3);
}

TEST(Cascade, ObservationIgnored) {
  auto a = from_symbols("ab");
  auto b = from_symbols("ab");
  b.steps[0].observation = "different";
  EXPECT_FALSE(divergence_step(a, b, AlignMode::exact()).has_value());
}

TEST(Cascade, MatchesOracleOnSmallPairs) {
  const auto seqs = oracle::all_strings("xyz", 3);
  for (const auto& o : seqs) {
    if (o.empty()) continue;
    for (const auto& v : seqs) {
      if (v.empty()) continue;
      const auto eq = [&](std::size_t vi, std::size_t oi) { return v[vi] == o[oi]; };
      const auto a = from_symbols(o), b = from_symbols(v);
      ASSERT_EQ(divergence_step(a, b, AlignMode::exact()), oracle::divergence_step(o.size(), v.size(), eq));
      ASSERT_EQ(cascade_depth(a, b, AlignMode::exact()), oracle::cascade_depth(o.size(), v.size(), eq));
    }
  }
}

TEST(Cascade, IdentityIsZeroInEveryMode) {
  const auto t = from_symbols("abcab");
  for (const auto& m : standard_modes()) {
    EXPECT_EQ(cascade_depth(t, t, m), 0);
    EXPECT_FALSE(divergence_step(t, t, m).has_value());
  }
}

TEST(Modes, LabelsRoundTrip) {
  EXPECT_EQ(AlignMode::parse("exact").label(), "exact");
  EXPECT_EQ(AlignMode::parse("tfidf@0.5").label(), "tfidf@0.5");
  EXPECT_EQ(standard_modes().size(), 4u);
  EXPECT_THROW(AlignMode::parse("fuzzy"), ConfigError);
}

TEST(Modes, ExactEqualsTfidfAtOneOnTokenIdenticalSteps) {
  const auto a = from_symbols("abca");
  const auto b = from_symbols("abcb");
  EXPECT_EQ(divergence_step(a, b, AlignMode::exact()), divergence_step(a, b, AlignMode::tfidf(1.0)));
  EXPECT_EQ(cascade_depth(a, b, AlignMode::exact()), cascade_depth(a, b, AlignMode::tfidf(1.0)));
}

TEST(Tfidf, HandComputedThreeDocuments) {
  const std::vector<std::string> docs{"a b", "b c", "A"};
  const auto v = tfidf_vectors(docs);
  // df(a)=2, df(b)=2, df(c)=1 over D=3.
  const double ia = std::log(4.0 / 3.0) + 1.0;
  const double ib = ia;
  const double ic = std::log(2.0) + 1.0;
  const double cos01 = (ib * ib) / (std::sqrt(ia * ia + ib * ib) * std::sqrt(ib * ib + ic * ic));
  const double cos02 = ia / std::sqrt(ia * ia + ib * ib);
  EXPECT_NEAR(cosine(v[0], v[1]), cos01, 1e-12);
  EXPECT_NEAR(cosine(v[0], v[2]), cos02, 1e-12);
  EXPECT_NEAR(cosine(v[1], v[2]), 0.0, 1e-12);
  EXPECT_NEAR(cosine(v[0], v[0]), 1.0, 1e-12);
}

TEST(Tfidf, EmptyDocumentIsZero) {
  const std::vector<std::string> docs{"", "x"};
  const auto v = tfidf_vectors(docs);
  EXPECT_EQ(cosine(v[0], v[1]), 0.0);
  EXPECT_EQ(cosine(v[0], v[0]), 0.0);
}

TEST(Pattern, Classification) {
  EXPECT_EQ(classify_pattern(std::nullopt, false, false, false), Pattern::no_divergence);
  EXPECT_EQ(classify_pattern(2, true, false, false), Pattern::self_correct);
  EXPECT_EQ(classify_pattern(2, false, false, false), Pattern::propagated);
  EXPECT_EQ(classify_pattern(2, false, true, true), Pattern::truncated);
}

TEST(Pattern, AnalyzePairFillsEveryMode) {
  auto o = from_symbols("abc");
  auto v = from_symbols("axc");
  o.final_answer = "3";
  v.final_answer = "3";
  const auto d = analyze_pair(o, v, [](std::string_view a, std::string_view b) { return a == b; });
  EXPECT_EQ(d.divergence_step, 2);
  EXPECT_EQ(d.pattern, Pattern::self_correct);
  EXPECT_EQ(d.cascade_depth.size(), 4u);
  EXPECT_EQ(d.cascade_depth.at("exact"), 1);
  ASSERT_EQ(d.step_similarity.size(), 3u);
  for (double s : d.step_similarity) {
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_NEAR(d.step_similarity[0], 1.0, 1e-12);
}

TEST(Probes, IdenticalTrajectoriesAreDegenerate) {
  std::vector<ProbePair> pairs;
  const auto t = from_symbols("abc");
  for (int q = 0; q < 4; ++q) {
    for (auto side : {Side::meaning_bearing, Side::presentation}) {
      ProbePair p;
      p.question_id = "q" + std::to_string(q);
      p.side = side;
      p.details = analyze_pair(t, t, [](std::string_view, std::string_view) { return true; });
      pairs.push_back(p);
    }
  }
  const auto r = mechanism_probes(pairs);
  EXPECT_FALSE(r.insufficient);
  EXPECT_EQ(r.groups, 4u);
  EXPECT_TRUE(r.m3_cascade_depth.degenerate);
  EXPECT_EQ(r.m3_cascade_depth.estimate, 0.0);
  ASSERT_FALSE(r.m4_step_similarity.empty());
  EXPECT_TRUE(r.m4_step_similarity[0].degenerate);
}

TEST(Probes, TooFewPairsInsufficient) {
  std::vector<ProbePair> pairs(1);
  pairs[0].question_id = "q";
  EXPECT_TRUE(mechanism_probes(pairs).insufficient);
}
