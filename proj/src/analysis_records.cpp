#include "agentdiff/analysis_records.hpp"

#include <cmath>

namespace agentdiff {

namespace {

template <class T>
void put(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

template <class T>
void get(const nlohmann::json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key) && !j.at(key).is_null()) {
    v = j.at(key).get<T>();
  } else {
    v.reset();
  }
}

std::optional<double> finite(double v) {
  if (std::isfinite(v)) return v;
  return std::nullopt;
}

}  // namespace

ResultRow make_row(std::string section, std::string scope, const stats::StatResult& r) {
  ResultRow row;
  row.section = std::move(section);
  row.scope = std::move(scope);
  row.method = r.method;
  row.estimate = finite(r.estimate);
  if (!r.degenerate) row.statistic = finite(r.statistic);
  if (r.p_two_sided) row.p = *r.p_two_sided;
  if (r.ci95) {
    row.ci_lo = r.ci95->first;
    row.ci_hi = r.ci95->second;
  }
  if (r.df) row.df = *r.df;
  row.n = static_cast<long>(r.n);
  if (r.degenerate) row.note = "degenerate";
  if (r.warning) row.note += (row.note.empty() ? "" : "; ") + std::string("discard warning");
  return row;
}

void to_json(nlohmann::json& j, const ResultRow& r) {
  j = nlohmann::json::object();
  j["section"] = r.section;
  j["scope"] = r.scope;
  j["method"] = r.method;
  put(j, "estimate", r.estimate);
  put(j, "statistic", r.statistic);
  put(j, "p", r.p);
  put(j, "ci_lo", r.ci_lo);
  put(j, "ci_hi", r.ci_hi);
  put(j, "df", r.df);
  put(j, "se", r.se);
  put(j, "q", r.q);
  j["n"] = r.n;
  put(j, "count", r.count);
  j["note"] = r.note;
}

void from_json(const nlohmann::json& j, ResultRow& r) {
  r.section = j.at("section").get<std::string>();
  r.scope = j.at("scope").get<std::string>();
  r.method = j.at("method").get<std::string>();
  get(j, "estimate", r.estimate);
  get(j, "statistic", r.statistic);
  get(j, "p", r.p);
  get(j, "ci_lo", r.ci_lo);
  get(j, "ci_hi", r.ci_hi);
  get(j, "df", r.df);
  get(j, "se", r.se);
  get(j, "q", r.q);
  r.n = j.at("n").get<long>();
  get(j, "count", r.count);
  r.note = j.value("note", std::string());
}

namespace divergence {

void to_json(nlohmann::json& j, const PropagationDetails& d) {
  j = nlohmann::json::object();
  j["cell_key"] = d.cell_key;
  j["original_id"] = d.original_id;
  j["variant_id"] = d.variant_id;
  put(j, "divergence_step", d.divergence_step);
  j["cascade_depth"] = d.cascade_depth;
  j["pattern"] = std::string(to_string(d.pattern));
  j["step_similarity"] = d.step_similarity;
}

void from_json(const nlohmann::json& j, PropagationDetails& d) {
  d.cell_key = j.at("cell_key").get<std::string>();
  d.original_id = j.at("original_id").get<std::string>();
  d.variant_id = j.at("variant_id").get<std::string>();
  get(j, "divergence_step", d.divergence_step);
  d.cascade_depth = j.at("cascade_depth").get<std::map<std::string, int>>();
  d.pattern = parse_pattern(j.at("pattern").get<std::string>());
  d.step_similarity = j.at("step_similarity").get<std::vector<double>>();
}

}  // namespace divergence

namespace probe {

void to_json(nlohmann::json& j, const ProbeEstimate& e) {
  j = nlohmann::json::object();
  j["cell_key"] = e.cell_key;
  j["estimate"] = e.estimate;
  put(j, "plug_in", e.plug_in);
  j["prior"] = e.prior;
  j["lambda"] = e.lambda;
  j["low_confidence"] = e.low_confidence;
  j["n_originals"] = e.n_originals;
}

void from_json(const nlohmann::json& j, ProbeEstimate& e) {
  e.cell_key = j.at("cell_key").get<std::string>();
  e.estimate = j.at("estimate").get<double>();
  get(j, "plug_in", e.plug_in);
  e.prior = j.at("prior").get<double>();
  e.lambda = j.at("lambda").get<double>();
  e.low_confidence = j.at("low_confidence").get<bool>();
  e.n_originals = j.at("n_originals").get<std::size_t>();
}

}  // namespace probe

}  // namespace agentdiff
