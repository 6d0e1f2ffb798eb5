#include <gtest/gtest.h>

#include <cmath>

#include "agentdiff/probe.hpp"
#include "synthetic.hpp"

using namespace agentdiff;
using namespace agentdiff::probe;

namespace {

CellMetrics panel_cell(const std::string& model, Benchmark b, double delta) {
  CellMetrics m;
  m.cell.model_id = model;
  m.cell.family = model;
  m.cell.benchmark = b;
  m.delta_raw = delta;
  m.delta_matched[Proxy::edit_norm] = delta;
  return m;
}

CalibrationCell calibration(const synthetic::PlantedCell& pc) {
  return {pc.cell, metrics::CellTrajectories::from(pc.originals, pc.variant_trajectories)};
}

}  // namespace

TEST(Shrink, EndpointsAndMonotone) {
  EXPECT_EQ(shrink(12.0, 4.0, 0.0), 12.0);
  EXPECT_EQ(shrink(12.0, 4.0, 1.0), 4.0);
  EXPECT_EQ(shrink(std::nullopt, 4.0, 0.3), 4.0);
  double prev = shrink(12.0, 4.0, 0.0);
  for (double l = 0.1; l <= 1.0001; l += 0.1) {
    const double v = shrink(12.0, 4.0, l);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 4.0);
    prev = v;
  }
}

TEST(Estimate, PlantedEffectAtLambdaZero) {
  const auto a = synthetic::planted_cell("m", Scaffold::cot, 200, 0.5, 0.2, 1);
  const auto b = synthetic::planted_cell("m", Scaffold::react, 200, 0.5, 0.2, 2);
  std::vector<Variant> vars = a.variants;
  vars.insert(vars.end(), b.variants.begin(), b.variants.end());
  CalibrationSpec spec;
  spec.lambda = 0.0;
  const auto est = estimate_delta({calibration(a), calibration(b)}, vars, 99.0, spec);
  ASSERT_EQ(est.size(), 2u);
  for (const auto& e : est) {
    EXPECT_NEAR(e.estimate, 30.0, 5.0);
    EXPECT_EQ(e.estimate, *e.plug_in);
    EXPECT_FALSE(e.low_confidence);
    EXPECT_EQ(e.n_originals, 200u);
  }
  spec.lambda = 1.0;
  for (const auto& e : estimate_delta({calibration(a), calibration(b)}, vars, 7.5, spec)) {
    EXPECT_EQ(e.estimate, 7.5);
  }
}

TEST(Estimate, CalibrationMinimaEnforced) {
  const auto small = synthetic::planted_cell("m", Scaffold::cot, 10, 0.5, 0.2, 1);
  const auto other = synthetic::planted_cell("m", Scaffold::react, 10, 0.5, 0.2, 2);
  std::vector<Variant> vars = small.variants;
  vars.insert(vars.end(), other.variants.begin(), other.variants.end());
  EXPECT_THROW(estimate_delta({calibration(small), calibration(other)}, vars, 0.0, {}), ConfigError);

  const auto big = synthetic::planted_cell("m", Scaffold::cot, 30, 0.5, 0.2, 1);
  EXPECT_THROW(estimate_delta({calibration(big)}, big.variants, 0.0, {}), ConfigError);
  CalibrationSpec bad;
  bad.lambda = 1.5;
  EXPECT_THROW(validate_calibration({calibration(big)}, big.variants, bad), ConfigError);
}

TEST(Lomo, AllSameDelta) {
  std::vector<CellMetrics> panel;
  for (const char* m : {"a", "b", "c"}) {
    panel.push_back(panel_cell(m, Benchmark::gsm8k, 12.0));
    panel.push_back(panel_cell(m, Benchmark::math, 12.0));
  }
  const auto r = evaluate_lomo(panel, {});
  EXPECT_NEAR(r.mae, 0.0, 1e-12);
  EXPECT_EQ(r.sign_accuracy, 1.0);
}

TEST(Lomo, HandComputedToyPanel) {
  // a: {10, 20}; b: {0, -10}; c: {30}.
  // Priors: a = (0 - 10 + 30) / 3 = 20/3; b = 20; c = 5.
  // |errors| = 10/3, 40/3, 20, 30, 25 -> MAE = (275/3) / 5.
  // Signs: a ++ right, b (0, -) both wrong, c right -> 3/5.
  const std::vector<CellMetrics> panel{panel_cell("a", Benchmark::gsm8k, 10), panel_cell("a", Benchmark::math, 20),
                                       panel_cell("b", Benchmark::gsm8k, 0), panel_cell("b", Benchmark::math, -10),
                                       panel_cell("c", Benchmark::gsm8k, 30)};
  const auto r = evaluate_lomo(panel, {});
  EXPECT_NEAR(r.mae, 275.0 / 15.0, 1e-12);
  EXPECT_NEAR(r.sign_accuracy, 0.6, 1e-12);
  EXPECT_NEAR(r.trivial_sign_accuracy, 0.6, 1e-12);
  EXPECT_EQ(r.n, 5u);
}

TEST(Lomo, OwnCellsNeverInPrior) {
  std::vector<CellMetrics> panel{panel_cell("a", Benchmark::gsm8k, 5), panel_cell("b", Benchmark::gsm8k, 7),
                                 panel_cell("c", Benchmark::gsm8k, 9), panel_cell("s", Benchmark::gsm8k, 1e9)};
  const auto r = evaluate_lomo(panel, {});
  for (const auto& p : r.predictions) {
    if (p.model_id == "s") {
      EXPECT_NEAR(p.prior, 7.0, 1e-9);
    } else {
      EXPECT_GT(p.prior, 1e8);
    }
  }
}

TEST(Lomo, NeedsThreeModels) {
  const std::vector<CellMetrics> panel{panel_cell("a", Benchmark::gsm8k, 1), panel_cell("b", Benchmark::gsm8k, 2)};
  EXPECT_THROW(evaluate_lomo(panel, {}), ConfigError);
}

TEST(Lomo, PlugInOverridesPrior) {
  const std::vector<CellMetrics> panel{panel_cell("a", Benchmark::gsm8k, 10), panel_cell("b", Benchmark::gsm8k, 20),
                                       panel_cell("c", Benchmark::gsm8k, 30)};
  LomoOptions opt;
  opt.lambda = 0.0;
  for (const auto& m : panel) opt.plug_in[m.cell.key()] = *m.delta_raw;
  EXPECT_NEAR(evaluate_lomo(panel, opt).mae, 0.0, 1e-12);
}

TEST(Prior, PanelMean) {
  const std::vector<CellMetrics> panel{panel_cell("a", Benchmark::gsm8k, 10), panel_cell("b", Benchmark::gsm8k, 20)};
  EXPECT_EQ(panel_prior(panel, stats::DeltaSource::raw, Proxy::edit_norm), 15.0);
  EXPECT_FALSE(panel_prior({}, stats::DeltaSource::raw, Proxy::edit_norm).has_value());
}
