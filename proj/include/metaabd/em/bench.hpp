#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metaabd/em/trainer.hpp"

namespace metaabd::em {

// Cost of one way of finding (H, z) for a batch.
struct OrderingCost {
  std::uint64_t labelings = 0;  // candidate pseudo-labelings examined
  std::uint64_t nodes = 0;      // resolution steps + solver branch nodes
  double seconds = 0.0;
  bool found = false;
};

struct AbductionBatchReport {
  std::size_t batch = 0;
  OrderingCost h_to_z;  // induce H, then abduce z by constraint solving
  OrderingCost z_to_h;  // enumerate z by probability, then induce H for it
};

struct AbductionBenchOptions {
  std::size_t max_clauses = 2;
  std::uint64_t node_budget = 5'000'000;
  std::size_t max_label_space = 1'000'000;  // refuse longer inputs for z-first enumeration
};

// Runs both orderings on the same batches of a monadic task. H->z is the
// trainer's e-step. z->H walks each example's labelings from most to least
// probable and induces a program for each until one succeeds, then induces
// the batch program under the chosen labelings.
std::vector<AbductionBatchReport> bench_abduction(const tasks::TaskSpec& t, const tasks::Perception& model,
                                                  const std::vector<std::vector<const tasks::Sequence*>>& batches,
                                                  const AbductionBenchOptions& opts = {});

struct MetaruleRun {
  std::vector<std::string> metarules;
  bool found = false;
  std::string program;  // empty when induction failed
  std::uint64_t nodes = 0;
  double seconds = 0.0;
};

struct MetaruleSizeReport {
  std::size_t size = 0;
  std::vector<MetaruleRun> runs;
  std::size_t failures = 0;
  std::uint64_t worst_nodes = 0;  // over successful runs
  double worst_seconds = 0.0;
};

struct MetaruleBenchOptions {
  std::size_t max_clauses = 2;
  std::uint64_t node_budget = 5'000'000;
  std::size_t max_subsets = 0;  // per size; 0: every combination
  std::uint64_t seed = 1;       // picks subsets when capped
};

// Induces on exact labels with every metarule subset of each size, as far
// as max_subsets allows. A subset whose hypothesis space lacks a solution
// counts as a failure.
std::vector<MetaruleSizeReport> bench_metarules(const tasks::TaskSpec& t, const tasks::Dataset& examples,
                                                const std::vector<std::size_t>& sizes,
                                                const MetaruleBenchOptions& opts = {});

}  // namespace metaabd::em
