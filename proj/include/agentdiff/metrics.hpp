#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agentdiff/corpus.hpp"
#include "agentdiff/error.hpp"
#include "agentdiff/severity.hpp"

namespace agentdiff::metrics {

// Trajectories of one cell keyed by subject id.
struct CellTrajectories {
  std::map<std::string, Trajectory> originals;  // by question id
  std::map<std::string, Trajectory> variants;   // by variant id

  static CellTrajectories from(const std::vector<Trajectory>& originals,
                               const std::vector<Trajectory>& variants);
};

// Called once for every variant that enters an IR denominator.
using AuditHook = std::function<void(const Variant&)>;
using VariantFilter = std::function<bool(const Variant&)>;

struct IrCount {
  std::size_t n = 0;
  std::size_t differ = 0;
  std::optional<double> rate() const;
};

// Denominator: judge-passing variants of `op` whose own and whose original's
// trajectories both succeeded (and, when given, that pass `include`).
// Numerator: those whose final answer is not equivalent to the original's.
IrCount inconsistency_count(const CellTrajectories& trajs, const std::vector<Variant>& variants,
                            Operator op, const VariantFilter& include = {},
                            const AuditHook& audit = {});

std::optional<double> inconsistency_rate(const CellTrajectories& trajs,
                                         const std::vector<Variant>& variants, Operator op,
                                         const VariantFilter& include = {},
                                         const AuditHook& audit = {});

std::map<Operator, double> ir_per_operator(const CellTrajectories& trajs,
                                           const std::vector<Variant>& variants,
                                           const VariantFilter& include = {},
                                           const AuditHook& audit = {});

// 100 * (mean defined sem IR - mean defined sur IR); nullopt when a side has
// no defined IR.
std::optional<double> delta(const std::map<Operator, double>& ir);

struct MetricsOptions {
  std::vector<Proxy> proxies{kProxies.begin(), kProxies.end()};
  int n_bins = 10;
  std::uint64_t seed = 0;
};

struct CellComputation {
  CellMetrics metrics;
  std::map<Proxy, severity::MatchedSample> matched;
  std::vector<std::string> notes;
};

CellComputation compute_cell_metrics(const Cell& cell, const CellTrajectories& trajs,
                                     const std::vector<Variant>& variants,
                                     const MetricsOptions& options,
                                     const AuditHook& audit = {});

// --- tractability -----------------------------------------------------------------

enum class Stratum {
  multi_route,
  single_route,
  multi_method,
  single_canonical,
  multi_evidence,
  unique_chain
};
std::string_view to_string(Stratum s);
Stratum parse_stratum(std::string_view s);
bool is_multi_path(Stratum s);

struct TractabilityTag {
  std::string question_id;
  Stratum stratum = Stratum::single_route;
  // Set when the tag relies on a default rather than a documented rule.
  std::string assumption;
};

struct TractabilityRules {
  std::size_t min_numbers = 4;
  std::size_t min_keywords = 2;
  std::set<std::string> keywords;

  // Keywords from <data_dir>/arith_keywords.txt.
  static TractabilityRules load(const std::filesystem::path& data_dir);
};

// Throws TagUnavailable when the needed meta fields are missing.
TractabilityTag tag_tractability(const Question& q, const TractabilityRules& rules);

// --- tiers and partition --------------------------------------------------------------

struct TierRules {
  double capable_floor = 0.65;
  double strong_floor = 0.75;
  std::map<std::string, Tier> overrides;  // model id -> tier (e.g. frontier)
};

// Per-model tier from the mean accuracy of its cells.
std::map<std::string, Tier> assign_tier(const std::vector<Cell>& cells, const TierRules& rules);

enum class TaskClass { shallow_arith, deep_math, multi_hop };
enum class Group { A, B, excluded };
std::string_view to_string(TaskClass t);
std::string_view to_string(Group g);
TaskClass task_class(Benchmark b);
Group partition_group(Tier tier, TaskClass task);

struct PartitionAssignment {
  std::string cell_key;
  TaskClass task = TaskClass::shallow_arith;
  Group group = Group::excluded;
};
PartitionAssignment assign_partition(const Cell& cell, Tier tier);

}  // namespace agentdiff::metrics
