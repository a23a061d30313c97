#pragma once

#include <functional>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "metaabd/logic/function_ref.hpp"
#include "metaabd/logic/term.hpp"
#include "metaabd/logic/unify.hpp"

namespace metaabd::logic {

// Continuation handed to native predicates. Returns false to stop the search.
using Continuation = FunctionRef<bool()>;

// Native predicate. Calls `k` once per solution with the solution's bindings
// in place and undoes them afterwards. Returns false iff `k` asked to stop.
using Builtin = std::function<bool(std::span<const Term> args, Bindings& b, Continuation k)>;

class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  // Knowledge base preloaded with list, comparison and permutation builtins.
  static KnowledgeBase with_standard_builtins();

  // Throws std::invalid_argument if the clause would override a builtin.
  void add_clause(Clause c);
  void add_builtin(PredKey key, Builtin fn);

  std::span<const Clause> clauses(const PredKey& key) const;
  const Builtin* builtin(const PredKey& key) const;
  bool defines(const PredKey& key) const;
  bool has_builtin(const PredKey& key) const { return builtin(key) != nullptr; }

  // Keys of clause-defined predicates, in first-definition order.
  const std::vector<PredKey>& clause_predicates() const { return order_; }
  std::vector<PredKey> builtin_predicates() const;
  std::vector<Clause> all_clauses() const;
  std::size_t clause_count() const;

  // Every symbol that occurs in a clause or names a builtin.
  bool mentions_symbol(Symbol s) const;

 private:
  std::unordered_map<PredKey, std::vector<Clause>> clauses_;
  std::vector<PredKey> order_;
  std::map<PredKey, Builtin> builtins_;
};

}  // namespace metaabd::logic
