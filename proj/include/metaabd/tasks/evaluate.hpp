#pragma once

#include <map>
#include <optional>

#include "metaabd/mil/induce.hpp"
#include "metaabd/nn/dyadic.hpp"
#include "metaabd/tasks/data.hpp"

namespace metaabd::tasks {

// The perception half of a task: a digit classifier or a pair relation.
struct Perception {
  LabelArity arity = LabelArity::Monadic;
  nn::MLP classifier;
  nn::DyadicModel relation;
};

Perception make_perception(const TaskSpec& t, std::size_t item_dim, std::size_t hidden, std::uint64_t seed);

// f([x0,...],y), s([x0,...]) or f([x0,...],[r0,...]); the output is a fresh
// variable when `unknown_output` is set.
logic::Atom make_goal(const TaskSpec& t, const Sequence& s, bool unknown_output = false);

// Soft evidence from the model's probabilities.
mil::Evidence model_evidence(const TaskSpec& t, const Perception& p, const Sequence& s);
// Certain evidence from the model's argmax labels (monadic) or its pair
// probabilities (dyadic; a hard relation need not be an order).
mil::Evidence argmax_evidence(const TaskSpec& t, const Perception& p, const Sequence& s);
// Certain evidence from the ground-truth labels.
mil::Evidence truth_evidence(const TaskSpec& t, const Sequence& s);

struct Metrics {
  std::size_t examples = 0;
  std::size_t failures = 0;  // program produced no output
  double acc = 0.0;          // exact-output rate; on length-one inputs, classification accuracy
  double raw_acc = 0.0;      // classifier accuracy per item (per pair for relations), when labels ship
  double mae = 0.0;
  double log_mae = 0.0;      // mean |ln(1+yhat) - ln(1+y)|
  double perm_acc = 0.0;
  double elem_acc = 0.0;
};

struct EvalOptions {
  bool ground_truth = false;  // bypass perception and use dataset labels
  mil::ProveOptions prove;
};

// Executes `program` on every example; returns metrics keyed by input length
// (key 0 holds the totals).
std::map<std::size_t, Metrics> evaluate(const TaskSpec& t, const mil::Program& program, const Perception& p,
                                        const Dataset& d, const EvalOptions& opts = {});

// Predicted output for one example, nullopt when the program fails.
std::optional<std::vector<std::int64_t>> run_program(const TaskSpec& t, const mil::Program& program,
                                                     const Sequence& s, const mil::Evidence& ev,
                                                     const mil::ProveOptions& opts = {});

// Classifier accuracy over all labelled items (pairs for relations).
double item_accuracy(const TaskSpec& t, const Perception& p, const Dataset& d);

}  // namespace metaabd::tasks
