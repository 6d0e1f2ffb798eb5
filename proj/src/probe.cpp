#include "agentdiff/probe.hpp"

#include <cmath>
#include <set>

#include "agentdiff/error.hpp"

namespace agentdiff::probe {

namespace {

std::optional<double> truth_of(const CellMetrics& m, stats::DeltaSource source, Proxy proxy) {
  if (source == stats::DeltaSource::raw) return m.delta_raw;
  auto it = m.delta_matched.find(proxy);
  if (it == m.delta_matched.end()) return std::nullopt;
  return it->second;
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

double shrink(std::optional<double> plug_in, double prior, double lambda) {
  if (!plug_in) return prior;
  return lambda * prior + (1.0 - lambda) * *plug_in;
}

void validate_calibration(const std::vector<CalibrationCell>& cells,
                          const std::vector<Variant>& variants, const CalibrationSpec& spec) {
  if (spec.lambda < 0.0 || spec.lambda > 1.0) throw ConfigError("lambda must lie in [0, 1]");
  std::set<Scaffold> scaffolds;
  for (const auto& c : cells) {
    scaffolds.insert(c.cell.scaffold);
    std::size_t n = 0;
    for (const auto& [id, t] : c.trajectories.originals) n += t.failed ? 0 : 1;
    if (n < spec.min_originals) {
      throw ConfigError("calibration cell " + c.cell.key() + " has " + std::to_string(n) +
                        " originals; at least " + std::to_string(spec.min_originals) +
                        " are required");
    }
    std::set<Operator> ops;
    for (const auto& v : variants) {
      if (v.passes_judge() && c.trajectories.variants.count(v.id)) ops.insert(v.op);
    }
    if (ops.size() < kOperators.size()) {
      throw ConfigError("calibration cell " + c.cell.key() + " covers " +
                        std::to_string(ops.size()) + " of 5 operators");
    }
  }
  if (scaffolds.size() < spec.min_scaffolds) {
    throw ConfigError("calibration covers " + std::to_string(scaffolds.size()) +
                      " scaffold(s); at least " + std::to_string(spec.min_scaffolds) +
                      " are required");
  }
}

std::vector<ProbeEstimate> estimate_delta(const std::vector<CalibrationCell>& cells,
                                          const std::vector<Variant>& variants, double prior,
                                          const CalibrationSpec& spec) {
  validate_calibration(cells, variants, spec);
  std::vector<ProbeEstimate> out;
  for (const auto& c : cells) {
    ProbeEstimate e;
    e.cell_key = c.cell.key();
    e.prior = prior;
    e.lambda = spec.lambda;
    for (const auto& [id, t] : c.trajectories.originals) e.n_originals += t.failed ? 0 : 1;
    e.plug_in = metrics::delta(metrics::ir_per_operator(c.trajectories, variants));
    e.low_confidence = !e.plug_in.has_value();
    e.estimate = shrink(e.plug_in, prior, spec.lambda);
    out.push_back(e);
  }
  return out;
}

std::optional<double> panel_prior(const std::vector<CellMetrics>& panel,
                                  stats::DeltaSource source, Proxy proxy) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : panel) {
    if (auto d = truth_of(m, source, proxy)) {
      sum += *d;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

LomoResult evaluate_lomo(const std::vector<CellMetrics>& panel, const LomoOptions& options) {
  std::set<std::string> models;
  for (const auto& m : panel) models.insert(m.cell.model_id);
  if (models.size() < 3) {
    throw ConfigError("leave-one-model-out needs at least 3 models, got " +
                      std::to_string(models.size()));
  }
  LomoResult r;
  std::size_t sign_hits = 0, trivial_hits = 0;
  double abs_err = 0.0;
  for (const auto& held : models) {
    std::vector<CellMetrics> rest;
    for (const auto& m : panel) {
      if (m.cell.model_id != held) rest.push_back(m);
    }
    const auto prior = panel_prior(rest, options.source, options.proxy);
    if (!prior) continue;
    for (const auto& m : panel) {
      if (m.cell.model_id != held) continue;
      const auto truth = truth_of(m, options.source, options.proxy);
      if (!truth) continue;
      LomoPrediction p;
      p.cell_key = m.cell.key();
      p.model_id = held;
      p.truth = *truth;
      p.prior = *prior;
      std::optional<double> plug;
      if (auto it = options.plug_in.find(p.cell_key); it != options.plug_in.end()) plug = it->second;
      p.prediction = shrink(plug, *prior, options.lambda);
      abs_err += std::abs(p.prediction - p.truth);
      sign_hits += sign(p.prediction) == sign(p.truth) ? 1 : 0;
      trivial_hits += sign(*prior) == sign(p.truth) ? 1 : 0;
      r.predictions.push_back(p);
    }
  }
  r.n = r.predictions.size();
  if (r.n > 0) {
    const double n = static_cast<double>(r.n);
    r.mae = abs_err / n;
    r.sign_accuracy = static_cast<double>(sign_hits) / n;
    r.trivial_sign_accuracy = static_cast<double>(trivial_hits) / n;
  }
  return r;
}

}  // namespace agentdiff::probe
