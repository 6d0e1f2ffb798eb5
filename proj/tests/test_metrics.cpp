#include <gtest/gtest.h>

#include <algorithm>

#include "agentdiff/metrics.hpp"

using namespace agentdiff;
using namespace agentdiff::metrics;

namespace {

Trajectory traj(const std::string& subject, const std::string& answer, bool original,
                bool failed = false) {
  Trajectory t;
  t.cell_key = "m__gsm8k__cot";
  t.subject_id = subject;
  t.is_original = original;
  t.final_answer = answer;
  t.failed = failed;
  if (!failed) t.steps = {{1, "step", "", ""}};
  return t;
}

Variant variant(const std::string& qid, Operator op, int k, std::optional<bool> judged = true) {
  Variant v;
  v.id = qid + "::" + std::string(to_string(op)) + "::" + std::to_string(k);
  v.question_id = qid;
  v.op = op;
  v.side = side_of(op);
  v.text = "t";
  v.judge_equivalent = judged;
  return v;
}

Question gsm(const std::string& text) { return {"g", Benchmark::gsm8k, text, "1", {}}; }

}  // namespace

TEST(Ir, ThreeOfTenDiffer) {
  std::vector<Trajectory> orig{traj("q", "5", true)};
  std::vector<Trajectory> vars;
  std::vector<Variant> vs;
  for (int i = 0; i < 10; ++i) {
    vs.push_back(variant("q", Operator::format, i));
    vars.push_back(traj(vs.back().id, i < 3 ? "6" : "5.0", false));
  }
  const auto trajs = CellTrajectories::from(orig, vars);
  EXPECT_DOUBLE_EQ(*inconsistency_rate(trajs, vs, Operator::format), 0.3);
  EXPECT_FALSE(inconsistency_rate(trajs, vs, Operator::reorder).has_value());
}

TEST(Ir, AllEqualIsZero) {
  std::vector<Trajectory> orig{traj("q", "5", true)};
  std::vector<Variant> vs{variant("q", Operator::synonym, 0)};
  std::vector<Trajectory> vars{traj(vs[0].id, "5", false)};
  EXPECT_EQ(*inconsistency_rate(CellTrajectories::from(orig, vars), vs, Operator::synonym), 0.0);
}

TEST(Ir, RejectedAndFailedNeverInDenominator) {
  std::vector<Trajectory> orig{traj("q", "5", true), traj("r", "1", true, true)};
  std::vector<Variant> vs{variant("q", Operator::format, 0), variant("q", Operator::format, 1, false),
                          variant("q", Operator::format, 2), variant("r", Operator::format, 0),
                          variant("q", Operator::format, 3, std::nullopt)};
  std::vector<Trajectory> vars{traj(vs[0].id, "6", false), traj(vs[1].id, "6", false),
                               traj(vs[2].id, "6", false, true), traj(vs[3].id, "6", false),
                               traj(vs[4].id, "5", false)};
  std::vector<std::string> audited;
  const auto c = inconsistency_count(CellTrajectories::from(orig, vars), vs, Operator::format, {},
                                     [&](const Variant& v) {
                                       EXPECT_NE(v.judge_equivalent, std::optional<bool>(false));
                                       audited.push_back(v.id);
                                     });
  EXPECT_EQ(c.n, 2u);
  EXPECT_EQ(c.differ, 1u);
  EXPECT_EQ(audited, (std::vector<std::string>{vs[0].id, vs[4].id}));
}

TEST(Ir, InvariantToTrajectoryOrder) {
  std::vector<Trajectory> orig{traj("a", "1", true), traj("b", "2", true)};
  std::vector<Variant> vs{variant("a", Operator::reorder, 0), variant("b", Operator::reorder, 0)};
  std::vector<Trajectory> vars{traj(vs[0].id, "1", false), traj(vs[1].id, "3", false)};
  auto rev_orig = orig;
  auto rev_vars = vars;
  std::reverse(rev_orig.begin(), rev_orig.end());
  std::reverse(rev_vars.begin(), rev_vars.end());
  EXPECT_EQ(ir_per_operator(CellTrajectories::from(orig, vars), vs),
            ir_per_operator(CellTrajectories::from(rev_orig, rev_vars), vs));
}

TEST(Delta, HandArithmetic) {
  const std::map<Operator, double> ir{{Operator::paraphrase, 0.5}, {Operator::synonym, 0.5},
                                      {Operator::reorder, 0.2}, {Operator::format, 0.2},
                                      {Operator::distractor, 0.2}};
  EXPECT_NEAR(*delta(ir), 30.0, 1e-12);
  const std::map<Operator, double> same{{Operator::paraphrase, 0.3}, {Operator::format, 0.3}};
  EXPECT_EQ(*delta(same), 0.0);
  EXPECT_FALSE(delta({{Operator::format, 0.3}}).has_value());
}

TEST(Delta, UndefinedIrExcludedNotZero) {
  // Synonym undefined: sem mean is paraphrase alone.
  const std::map<Operator, double> ir{{Operator::paraphrase, 0.4}, {Operator::format, 0.1}};
  EXPECT_NEAR(*delta(ir), 30.0, 1e-12);
}

TEST(CellMetricsTest, DeltaRecomputableFromIr) {
  std::vector<Trajectory> orig{traj("q", "5", true)};
  std::vector<Variant> vs;
  std::vector<Trajectory> vars;
  int k = 0;
  for (auto op : kOperators) {
    for (int i = 0; i < 4; ++i) {
      vs.push_back(variant("q", op, k++));
      vars.push_back(traj(vs.back().id, (i < (side_of(op) == Side::meaning_bearing ? 2 : 1)) ? "x" : "5", false));
      vs.back().severity[Proxy::edit_norm] = 0.1 * (i + 1);
    }
  }
  Cell cell{"m", "f", Benchmark::gsm8k, Scaffold::cot, std::nullopt, std::nullopt};
  MetricsOptions opt;
  opt.proxies = {Proxy::edit_norm};
  const auto c = compute_cell_metrics(cell, CellTrajectories::from(orig, vars), vs, opt);
  ASSERT_TRUE(c.metrics.delta_raw.has_value());
  EXPECT_NEAR(*c.metrics.delta_raw, *delta(c.metrics.ir_per_operator), 1e-12);
  EXPECT_NEAR(*c.metrics.delta_raw, 25.0, 1e-12);
  EXPECT_EQ(c.metrics.n_originals, 1);
}

TEST(Tractability, GsmRules) {
  TractabilityRules rules;
  rules.keywords = {"each", "total", "remaining"};
  EXPECT_EQ(tag_tractability(gsm("Tom has 3 apples."), rules).stratum, Stratum::single_route);
  EXPECT_EQ(tag_tractability(gsm("Numbers 1, 2, 3 and 4."), rules).stratum, Stratum::multi_route);
  EXPECT_EQ(tag_tractability(gsm("Each box, total 2."), rules).stratum, Stratum::multi_route);
  EXPECT_EQ(tag_tractability(gsm("Repeated 5 and 5 and 5 and 5."), rules).stratum, Stratum::single_route);
}

TEST(Tractability, MathSubjects) {
  TractabilityRules rules;
  auto math = [](const std::string& subject) {
    return Question{"m", Benchmark::math, "P", "1", {{"subject", subject}}};
  };
  EXPECT_EQ(tag_tractability(math("algebra"), rules).stratum, Stratum::multi_method);
  EXPECT_EQ(tag_tractability(math("counting_and_probability"), rules).stratum, Stratum::multi_method);
  EXPECT_EQ(tag_tractability(math("geometry"), rules).stratum, Stratum::single_canonical);
  const auto other = tag_tractability(math("precalculus"), rules);
  EXPECT_EQ(other.stratum, Stratum::single_canonical);
  EXPECT_FALSE(other.assumption.empty());
  EXPECT_THROW(tag_tractability(Question{"m", Benchmark::math, "P", "1", {}}, rules), TagUnavailable);
}

TEST(Tractability, HotpotTypes) {
  TractabilityRules rules;
  auto hp = [](const std::string& type, const std::string& facts) {
    return Question{"h", Benchmark::hotpotqa, "Q", "A", {{"type", type}, {"supporting_facts", facts}}};
  };
  EXPECT_EQ(tag_tractability(hp("bridge", "4"), rules).stratum, Stratum::unique_chain);
  EXPECT_EQ(tag_tractability(hp("comparison", "3"), rules).stratum, Stratum::multi_evidence);
  EXPECT_EQ(tag_tractability(hp("comparison", "2"), rules).stratum, Stratum::unique_chain);
}

TEST(Tractability, ShippedKeywordListLoads) {
  const auto rules = TractabilityRules::load(std::filesystem::path(AGENTDIFF_SOURCE_DIR) / "data");
  EXPECT_GE(rules.keywords.size(), 10u);
}

TEST(Tiers, Thresholds) {
  auto cell = [](const std::string& m, double acc) {
    return Cell{m, "f", Benchmark::gsm8k, Scaffold::cot, std::nullopt, acc};
  };
  TierRules rules;
  rules.overrides["front"] = Tier::frontier;
  const auto tiers = assign_tier({cell("s", 0.80), cell("s", 0.82), cell("w", 0.64), cell("mid", 0.70),
                                  cell("edge", 0.65), cell("front", 0.1)},
                                 rules);
  EXPECT_EQ(tiers.at("s"), Tier::strong);
  EXPECT_EQ(tiers.at("w"), Tier::weak);
  EXPECT_EQ(tiers.at("mid"), Tier::mid);
  EXPECT_EQ(tiers.at("edge"), Tier::mid);
  EXPECT_EQ(tiers.at("front"), Tier::frontier);
  EXPECT_THROW(assign_tier({Cell{"x", "f", Benchmark::gsm8k, Scaffold::cot, std::nullopt, std::nullopt}}, rules),
               Error);
}

TEST(Partition, TruthTable) {
  // Hand-written: rows weak, mid, strong, frontier; columns shallow_arith,
  // deep_math, multi_hop.
  const Group expected[4][3] = {
      {Group::B, Group::B, Group::B},
      {Group::excluded, Group::B, Group::excluded},
      {Group::A, Group::B, Group::A},
      {Group::A, Group::B, Group::A},
  };
  const Tier tiers[4] = {Tier::weak, Tier::mid, Tier::strong, Tier::frontier};
  const TaskClass tasks[3] = {TaskClass::shallow_arith, TaskClass::deep_math, TaskClass::multi_hop};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(partition_group(tiers[i], tasks[j]), expected[i][j]);
  }
}

TEST(Partition, BenchmarkTaskMapping) {
  EXPECT_EQ(task_class(Benchmark::gsm8k), TaskClass::shallow_arith);
  EXPECT_EQ(task_class(Benchmark::math), TaskClass::deep_math);
  EXPECT_EQ(task_class(Benchmark::hotpotqa), TaskClass::multi_hop);
  Cell c{"m", "f", Benchmark::hotpotqa, Scaffold::react, std::nullopt, 0.7};
  EXPECT_EQ(assign_partition(c, Tier::mid).group, Group::excluded);
  c.benchmark = Benchmark::gsm8k;
  EXPECT_EQ(assign_partition(c, Tier::strong).group, Group::A);
  EXPECT_EQ(assign_partition(c, Tier::weak).group, Group::B);
}
