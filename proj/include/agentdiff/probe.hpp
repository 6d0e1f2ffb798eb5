#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentdiff/corpus.hpp"
#include "agentdiff/error.hpp"
#include "agentdiff/metrics.hpp"
#include "agentdiff/stats.hpp"

namespace agentdiff::probe {

struct CalibrationSpec {
  std::size_t min_originals = 30;
  std::size_t min_scaffolds = 2;
  double lambda = 0.25;
};

// One scaffold's calibration run for the model under test.
struct CalibrationCell {
  Cell cell;
  metrics::CellTrajectories trajectories;
};

struct ProbeEstimate {
  std::string cell_key;
  double estimate = 0.0;
  std::optional<double> plug_in;
  double prior = 0.0;
  double lambda = 0.0;
  bool low_confidence = false;
  std::size_t n_originals = 0;
};

// lambda * prior + (1 - lambda) * plug-in; the prior alone when the plug-in
// is undefined.
double shrink(std::optional<double> plug_in, double prior, double lambda);

// Rejects calibration sets below the minima (ConfigError naming the shortfall).
void validate_calibration(const std::vector<CalibrationCell>& cells,
                          const std::vector<Variant>& variants, const CalibrationSpec& spec);

std::vector<ProbeEstimate> estimate_delta(const std::vector<CalibrationCell>& cells,
                                          const std::vector<Variant>& variants, double prior,
                                          const CalibrationSpec& spec);

// Mean Δ over panel cells where it is defined.
std::optional<double> panel_prior(const std::vector<CellMetrics>& panel,
                                  stats::DeltaSource source, Proxy proxy);

struct LomoOptions {
  stats::DeltaSource source = stats::DeltaSource::raw;
  Proxy proxy = Proxy::edit_norm;
  double lambda = 0.25;
  // Optional per-cell plug-in estimates; cells without one are predicted by
  // the prior.
  std::map<std::string, double> plug_in;
};

struct LomoPrediction {
  std::string cell_key;
  std::string model_id;
  double truth = 0.0;
  double prior = 0.0;
  double prediction = 0.0;
};

struct LomoResult {
  double mae = 0.0;
  double sign_accuracy = 0.0;
  double trivial_sign_accuracy = 0.0;
  std::size_t n = 0;
  std::vector<LomoPrediction> predictions;
};

// Leave-one-model-out: each model's cells are predicted from the mean Δ of
// the other models' cells. The trivial baseline predicts the sign of that
// mean for every held-out cell. Throws ConfigError with fewer than 3 models.
LomoResult evaluate_lomo(const std::vector<CellMetrics>& panel, const LomoOptions& options);

}  // namespace agentdiff::probe
