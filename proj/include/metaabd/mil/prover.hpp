#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metaabd/fd/store.hpp"
#include "metaabd/logic/function_ref.hpp"
#include "metaabd/logic/kb.hpp"
#include "metaabd/mil/language.hpp"
#include "metaabd/mil/program.hpp"

namespace metaabd::mil {

struct AbducedItem {
  AbducibleKind kind;
  std::vector<logic::Term> args;  // Add/Mul: X,Y,N  Eq: X,N  PairFact: X,Y
  double log_prob = 0.0;          // 0 for hard constraints
};
std::string to_string(const AbducedItem& a);

// One completed derivation of one example.
struct ProofResult {
  std::vector<AbducedItem> abduced;  // proof order
  double log_prob = 0.0;             // pair facts times solved pseudo-labels
  std::optional<fd::Labeling> labeling;
  std::vector<std::int64_t> labels;  // per item, constraint tasks only
  logic::Atom answer;                // goal with bindings and solved values applied
  std::vector<MetaSub> metasubs;     // program in use when the proof closed
  std::vector<logic::Symbol> invented;
};

struct AbductionResult {
  Program program;
  ProofResult proof;
};

enum class SearchStatus { Complete, Stopped, BudgetExceeded };

struct ProveOptions {
  std::size_t max_clauses = 3;
  bool allow_new_clauses = true;
  bool prune = true;                  // greedy cut at abducible calls
  bool require_coverage = true;       // every item must occur in an abduced atom
  bool solve_labels = true;           // false: propagation-only feasibility
  std::size_t depth_limit = 512;
  std::uint64_t node_budget = 20'000'000;
  bool occurs_check = true;
  fd::SolveOptions solver;
};

struct SearchStats {
  std::uint64_t nodes = 0;          // resolution, abduction and metarule steps
  std::uint64_t solver_nodes = 0;   // constraint-solver branch decisions
  std::uint64_t labelings = 0;      // complete pseudo-labelings examined
  bool depth_exceeded = false;
  bool budget_exceeded = false;
  void merge(const SearchStats& o);
};

// Abductive meta-interpreter. One instance per thread; not reentrant.
class Prover {
 public:
  Prover(const logic::KnowledgeBase& kb, const Language& lang, ProveOptions opts = {});
  ~Prover();

  // Streams every proof of `goals` for one example, starting from `start`
  // and adding metarule instances when allowed. on_result returns false to
  // stop. Pruning compares against the best proof seen in this call.
  SearchStatus prove(std::span<const logic::Atom> goals, const Program& start, const Evidence& ev,
                     FunctionRef<bool(const ProofResult&)> on_result);

  // Highest-probability proof of one example under a fixed program.
  std::optional<ProofResult> best(const Program& p, const Example& ex, SearchStatus* status = nullptr);

  // Programs of at most max_clauses clauses that prove every example in
  // turn, sharing one growing program; only feasibility is checked.
  SearchStatus programs(std::span<const Example> examples, FunctionRef<bool(const Program&)> on_program);

  const SearchStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }
  const ProveOptions& options() const { return opts_; }
  ProveOptions& options() { return opts_; }

 private:
  struct Instance;
  struct Ancestor;
  struct Frame;
  using Cont = FunctionRef<bool()>;

  bool run(const Frame* g, Cont k);
  bool bind_predicate(const Frame* g, const logic::Term& var, Cont k);
  bool resolve_kb(const Frame* g, const logic::PredKey& key, Cont k);
  bool abduce(const Frame* g, const Abducible& a, Cont k);
  bool resolve_program(const Frame* g, logic::Symbol pred, Cont k);
  bool use_instance(const Frame* g, const Instance& inst, const Ancestor* anc, Cont k);
  bool push_abduced(AbducedItem item, Cont k);
  // Items named in the call's arguments all occur in abduced_[from, end).
  bool call_covers(const logic::Atom& goal, std::size_t from) const;
  bool budget_hit();

  void load_program(const Program& p);
  bool is_program_pred(logic::Symbol s, std::size_t arity) const;
  std::vector<MetaSub> current_metasubs() const;
  // Checks coverage and solves pseudo-labels for abduced items [from, end).
  std::optional<ProofResult> close_example(const logic::Atom& goal, std::size_t from, bool solve);

  const logic::KnowledgeBase& kb_;
  const Language& lang_;
  ProveOptions opts_;
  SearchStats stats_;

  logic::Bindings b_;
  std::vector<Instance> instances_;
  std::vector<std::pair<logic::Symbol, std::size_t>> invented_;  // symbol, arity
  std::vector<logic::Symbol> invent_pool_;
  std::vector<AbducedItem> abduced_;
  double acc_ = 0.0;
  std::size_t example_start_ = 0;  // abduced_ index where the current example began
  const Evidence* ev_ = nullptr;
  std::optional<double> incumbent_;
  bool stop_ = false;
};

}  // namespace metaabd::mil
