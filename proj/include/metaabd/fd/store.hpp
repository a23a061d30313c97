#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metaabd/fd/domain.hpp"

namespace metaabd::fd {

using VarIndex = std::size_t;

struct Add {
  VarIndex x, y, z;  // x + y = z
};
struct Mul {
  VarIndex x, y, z;  // x * y = z
};
struct EqConst {
  VarIndex x;
  std::int64_t c;
};
using Constraint = std::variant<Add, Mul, EqConst>;

// Finite-domain store over nonnegative integers. Posting propagates
// immediately; once a domain empties the store stays infeasible.
class ConstraintStore {
 public:
  VarIndex add_var(std::int64_t lo, std::int64_t hi);
  // Pseudo-label variable over 0..k-1, k = log_weights.size(). Values with
  // weight -inf are dropped from the domain up front.
  VarIndex add_weighted_var(std::vector<double> log_weights);

  bool post(const Constraint& c);
  bool propagate();

  bool feasible() const { return feasible_; }
  std::size_t var_count() const { return domains_.size(); }
  const Domain& domain(VarIndex i) const { return domains_[i]; }
  const std::vector<Domain>& domains() const { return domains_; }
  // log-probabilities indexed by value; empty for intermediates
  const std::vector<double>& weights(VarIndex i) const { return weights_[i]; }
  bool weighted(VarIndex i) const { return !weights_[i].empty(); }
  double weight(VarIndex i, std::int64_t v) const { return weights_[i][static_cast<std::size_t>(v)]; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  std::vector<VarIndex> weighted_vars() const;

  // Narrowing used by search; propagates and reports feasibility.
  bool assign(VarIndex i, std::int64_t v);
  bool restrict(VarIndex i, std::int64_t lo, std::int64_t hi);

  // Propagation to a fixed point over an external copy of the domains, so
  // search can branch without copying constraints or weights.
  bool propagate(std::vector<Domain>& domains) const;

  // One line per constraint, e.g. "x0+x1#=v2" or "v2#=15". Weighted vars
  // print as x<i>, the rest as v<i>.
  std::string dump() const;

 private:
  std::vector<Domain> domains_;
  std::vector<std::vector<double>> weights_;
  std::vector<Constraint> constraints_;
  bool feasible_ = true;
};

struct Labeling {
  std::vector<std::pair<VarIndex, std::int64_t>> assignment;  // weighted vars, by index
  double log_prob = 0.0;
};

struct SolveStats {
  std::uint64_t nodes = 0;   // branch decisions on any variable
  std::uint64_t leaves = 0;  // complete pseudo-label assignments reached
  bool truncated = false;
};

struct SolveOptions {
  std::uint64_t node_budget = 2'000'000;
  double tie_epsilon = 0.0;  // scores are compared exactly by default
};

// Maximum summed log-weight assignment of the weighted variables such that
// the whole store (intermediates included) is satisfiable.
std::optional<Labeling> solve_best(const ConstraintStore& store, SolveStats* stats = nullptr,
                                   const SolveOptions& opts = {});

struct SolveAllResult {
  std::vector<Labeling> labelings;  // descending log_prob, ties by assignment
  bool truncated = false;
};
SolveAllResult solve_all(const ConstraintStore& store, std::size_t cap = 100000);

// Summed weights of an assignment in var-index order, the canonical score.
double score(const ConstraintStore& store, const std::vector<std::pair<VarIndex, std::int64_t>>& a);

// Orders labelings as the solvers do: higher score first, then the
// lexicographically smaller assignment.
bool better(const Labeling& a, const Labeling& b, double eps = 0.0);

}  // namespace metaabd::fd
