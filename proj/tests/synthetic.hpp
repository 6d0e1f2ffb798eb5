#pragma once

// Synthetic cells with planted flip rates: every original answers "0"; each
// variant answers "1" (a flip) with the probability of its side.

#include <string>
#include <vector>

#include "agentdiff/corpus.hpp"
#include "agentdiff/rng.hpp"

namespace synthetic {

struct PlantedCell {
  agentdiff::Cell cell;
  std::vector<agentdiff::Trajectory> originals;
  std::vector<agentdiff::Trajectory> variant_trajectories;
  std::vector<agentdiff::Variant> variants;
};

inline agentdiff::Trajectory answer_trajectory(const std::string& cell_key, const std::string& subject,
                                               bool original, const std::string& answer) {
  agentdiff::Trajectory t;
  t.cell_key = cell_key;
  t.subject_id = subject;
  t.is_original = original;
  t.steps = {{1, "reasoning", "", ""}};
  t.final_answer = answer;
  return t;
}

// One variant per operator per original. Severity scores are drawn from the
// same uniform distribution on both sides unless `sem_shift` moves the
// meaning-bearing side up.
inline PlantedCell planted_cell(const std::string& model, agentdiff::Scaffold scaffold, int n_originals,
                                double p_sem, double p_sur, std::uint64_t seed, double sem_shift = 0.0) {
  using namespace agentdiff;
  PlantedCell pc;
  pc.cell.model_id = model;
  pc.cell.family = model;
  pc.cell.benchmark = Benchmark::gsm8k;
  pc.cell.scaffold = scaffold;
  const std::string key = pc.cell.key();
  Rng rng(seed);
  for (int q = 0; q < n_originals; ++q) {
    const std::string qid = "q" + std::to_string(q);
    pc.originals.push_back(answer_trajectory(key, qid, true, "0"));
    for (auto op : kOperators) {
      Variant v;
      v.id = qid + "::" + std::string(to_string(op)) + "::0";
      v.question_id = qid;
      v.op = op;
      v.side = side_of(op);
      v.text = "variant";
      v.judge_equivalent = true;
      const bool sem = v.side == Side::meaning_bearing;
      double s = rng.uniform();
      if (sem) s = std::min(1.0, s + sem_shift);
      for (auto p : kProxies) v.severity[p] = s;
      const bool flip = rng.bernoulli(sem ? p_sem : p_sur);
      pc.variant_trajectories.push_back(answer_trajectory(key, v.id, false, flip ? "1" : "0"));
      pc.variants.push_back(v);
    }
  }
  return pc;
}

}  // namespace synthetic
