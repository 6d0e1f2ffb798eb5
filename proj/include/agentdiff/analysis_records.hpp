#pragma once

#include <optional>
#include <string>

#include "agentdiff/divergence.hpp"
#include "agentdiff/probe.hpp"
#include "agentdiff/records.hpp"

namespace agentdiff {

// One row of the flat results file. Reports are rendered from these rows only.
struct ResultRow {
  std::string section;  // e.g. "panel_delta", "regression", "probe"
  std::string scope;    // cell key, benchmark, operator, "panel", ...
  std::string method;
  std::optional<double> estimate;
  std::optional<double> statistic;
  std::optional<double> p;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  std::optional<double> df;
  std::optional<double> se;
  std::optional<double> q;
  long n = 0;
  std::optional<long> count;
  std::string note;
  bool operator==(const ResultRow&) const = default;
};

// Fills estimate/statistic/p/ci/df/n from a StatResult.
ResultRow make_row(std::string section, std::string scope, const stats::StatResult& r);

template <>
struct RecordTraits<ResultRow> {
  static constexpr std::string_view kind = "result";
  static std::string key(const ResultRow& r) {
    return r.section + "\x1f" + r.scope + "\x1f" + r.method;
  }
};
template <>
struct RecordTraits<divergence::PropagationDetails> {
  static constexpr std::string_view kind = "propagation";
  static std::string key(const divergence::PropagationDetails& d) {
    return d.cell_key + "\x1f" + d.variant_id;
  }
};
template <>
struct RecordTraits<probe::ProbeEstimate> {
  static constexpr std::string_view kind = "probe_estimate";
  static std::string key(const probe::ProbeEstimate& e) { return e.cell_key; }
};

void to_json(nlohmann::json& j, const ResultRow& r);
void from_json(const nlohmann::json& j, ResultRow& r);

namespace divergence {
void to_json(nlohmann::json& j, const PropagationDetails& d);
void from_json(const nlohmann::json& j, PropagationDetails& d);
}  // namespace divergence

namespace probe {
void to_json(nlohmann::json& j, const ProbeEstimate& e);
void from_json(const nlohmann::json& j, ProbeEstimate& e);
}  // namespace probe

}  // namespace agentdiff
