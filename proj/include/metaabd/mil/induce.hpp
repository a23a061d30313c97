#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "metaabd/mil/prover.hpp"

namespace metaabd::mil {

struct InduceOptions {
  std::size_t max_clauses = 3;
  // examples used to generate candidate structures, one per distinct length
  std::size_t structure_examples = 4;
  std::size_t workers = 1;
  std::size_t max_candidates = 20000;
  bool branch_and_bound = true;
  ProveOptions prove;  // per-example settings; max_clauses is overridden
};

struct InduceStats {
  SearchStats search;
  std::size_t candidates = 0;  // distinct structures generated
  std::size_t scored = 0;      // candidates scored to completion
  std::size_t abandoned = 0;   // cut by branch-and-bound
};

struct InduceResult {
  Program program;
  double log_score = 0.0;            // log prior + per-example log-probs
  std::vector<ProofResult> proofs;   // one per example, batch order
  SearchStatus status = SearchStatus::Complete;
  InduceStats stats;
};

struct InduceOutcome {
  std::optional<InduceResult> best;
  SearchStatus status = SearchStatus::Complete;  // BudgetExceeded marks an incomplete search
  InduceStats stats;
};

// Returns the program and per-example labelings maximising
// log prior(c) + sum_i log P(z_i|x_i) over programs that entail every example.
InduceOutcome induce(const logic::KnowledgeBase& kb, const Language& lang, std::span<const Example> batch,
                     const InduceOptions& opts = {});

// Scores a fixed program on a batch; nullopt when some example is not entailed.
std::optional<InduceResult> score_program(const logic::KnowledgeBase& kb, const Language& lang, const Program& p,
                                          std::span<const Example> batch, const InduceOptions& opts = {});

// Evidence placing all mass on the given labels.
Evidence one_hot_evidence(std::span<const std::int64_t> labels, std::size_t classes, std::int64_t value_max);

struct EntailResult {
  bool entailed = false;
  bool resource_exceeded = false;
};

// True iff B, H and the evidence's certain facts prove the goal.
EntailResult entails(const logic::KnowledgeBase& kb, const Language& lang, const Program& p, const Example& ex,
                     const ProveOptions& opts = {});

// Most probable proof of `goal` under `p`; unbound outputs in the goal are
// filled in ProofResult::answer.
std::optional<ProofResult> predict(const logic::KnowledgeBase& kb, const Language& lang, const Program& p,
                                   const Example& ex, const ProveOptions& opts = {});

}  // namespace metaabd::mil
