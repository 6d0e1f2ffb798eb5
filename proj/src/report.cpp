#include <cstdio>
#include <fstream>
#include <set>

#include "agentdiff/pipeline.hpp"
#include "agentdiff/records.hpp"

namespace agentdiff::pipeline {

namespace {

std::string num(const std::optional<double>& v, const char* fmt = "%.4f") {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

std::string pval(const std::optional<double>& v) {
  if (!v) return "-";
  return num(v, *v < 1e-3 ? "%.2e" : "%.4f");
}

struct Column {
  std::string header;
  std::function<std::string(const ResultRow&)> cell;
};

const std::vector<Column>& standard_columns() {
  static const std::vector<Column> cols = {
      {"scope", [](const ResultRow& r) { return r.scope; }},
      {"method", [](const ResultRow& r) { return r.method; }},
      {"estimate", [](const ResultRow& r) { return num(r.estimate); }},
      {"se", [](const ResultRow& r) { return num(r.se); }},
      {"statistic", [](const ResultRow& r) { return num(r.statistic, "%.3f"); }},
      {"df", [](const ResultRow& r) { return num(r.df, "%.1f"); }},
      {"p", [](const ResultRow& r) { return pval(r.p); }},
      {"q", [](const ResultRow& r) { return pval(r.q); }},
      {"ci95", [](const ResultRow& r) {
         if (!r.ci_lo || !r.ci_hi) return std::string("-");
         return "[" + num(r.ci_lo) + ", " + num(r.ci_hi) + "]";
       }},
      {"n", [](const ResultRow& r) { return std::to_string(r.n); }},
      {"count", [](const ResultRow& r) { return r.count ? std::to_string(*r.count) : std::string("-"); }},
      {"note", [](const ResultRow& r) { return r.note; }},
  };
  return cols;
}

void write_table(std::ostream& out, const std::string& title, const std::vector<const ResultRow*>& rows) {
  out << title << "\n";
  if (rows.empty()) {
    out << "  (no rows)\n\n";
    return;
  }
  const auto& cols = standard_columns();
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width;
  for (const auto& c : cols) width.push_back(c.header.size());
  for (const auto* r : rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      line.push_back(cols[i].cell(*r));
      width[i] = std::max(width[i], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    out << " ";
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << " " << line[i] << std::string(width[i] - line[i].size(), ' ');
    }
    out << "\n";
  };
  std::vector<std::string> header;
  for (const auto& c : cols) header.push_back(c.header);
  emit(header);
  for (const auto& line : cells) emit(line);
  out << "\n";
}

class Renderer {
 public:
  Renderer(std::vector<ResultRow> rows, fs::path dir) : rows_(std::move(rows)), dir_(std::move(dir)) {}

  std::vector<const ResultRow*> select(const std::string& section,
                                       const std::function<bool(const ResultRow&)>& pred = {}) const {
    std::vector<const ResultRow*> out;
    for (const auto& r : rows_) {
      if (r.section == section && (!pred || pred(r))) out.push_back(&r);
    }
    return out;
  }

  void text(const std::string& name, const std::vector<std::pair<std::string, std::vector<const ResultRow*>>>& tables) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    for (const auto& [title, rows] : tables) write_table(out, title, rows);
    written_.push_back(name);
  }

  // Long-format series: one line per row, x = scope, series = method.
  void series(const std::string& name, const std::vector<const ResultRow*>& rows) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    out << "x\tseries\ty\tn\n";
    for (const auto* r : rows) {
      out << r->scope << "\t" << r->method << "\t" << num(r->estimate, "%.6f") << "\t" << r->n << "\n";
    }
    written_.push_back(name);
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::vector<ResultRow> rows_;
  fs::path dir_;
  std::vector<std::string> written_;
};

}  // namespace

void report(const fs::path& ws, Log& log) {
  require_file("report", files::results(ws));
  auto rows = load_records<ResultRow>(files::results(ws));
  const auto dir = files::report_dir(ws);
  fs::create_directories(dir);
  Renderer r(std::move(rows), dir);

  r.series("fig1_delta_distribution.tsv", r.select("delta_cell"));
  r.text("table2_panel_delta.txt",
         {{"Panel delta (pp): paired t and Wilcoxon vs zero; count = cells > 0",
           r.select("panel_delta", [](const ResultRow& x) { return x.scope != "shrinkage"; })},
          {"Mean shrinkage raw - matched (pp)",
           r.select("panel_delta", [](const ResultRow& x) { return x.scope == "shrinkage"; })},
          {"Mean severity per operator", r.select("severity_by_operator")}});
  r.text("table3_severity_proxies.txt",
         {{"Matched delta per severity proxy (pp)",
           r.select("panel_delta", [](const ResultRow& x) {
             return x.scope == "paired_t" && x.method.rfind("matched:", 0) == 0;
           })}});
  r.text("table4_regression.txt",
         {{"Cell-level OLS, CR1 SE, wild cluster bootstrap p, BH q; count = clusters",
           r.select("regression")}});
  r.text("cascade.txt", {{"Cascade gap on inconsistent traces (steps, sem - sur)", r.select("cascade")},
                         {"Alignment audit", r.select("cascade_audit")}});
  r.series("fig4_tractability.tsv", r.select("tractability", [](const ResultRow& x) {
             return x.method.size() > 5 && x.method.substr(x.method.size() - 5) == "_mean";
           }));
  r.text("tractability.txt", {{"Within-benchmark tractability strata (pp)", r.select("tractability")}});
  r.text("table5_partition.txt",
         {{"Capability x tractability partition; count = cells > 0", r.select("partition")},
          {"Accuracy vs delta", r.select("capability_gate")}});
  r.text("table6_mechanism.txt", {{"Mechanism probes; count = (question, scaffold) groups", r.select("probe")}});
  r.series("fig6_step_similarity.tsv", r.select("probe_step"));
  r.text("generator_correlation.txt", {{"Per-cell delta agreement across generators", r.select("generator_corr")}});
  r.text("judge_agreement.txt", {{"Equivalence-judge agreement", r.select("kappa")}});
  r.text("lomo.txt", {{"Leave-one-model-out evaluation", r.select("lomo")}});
  r.text("telemetry.txt", {{"Run telemetry", r.select("telemetry")}});
  for (const auto& f : r.written()) log.push_back("report: wrote " + (dir / f).string());
}

}  // namespace agentdiff::pipeline
