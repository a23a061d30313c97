#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "metaabd/logic/term.hpp"

namespace metaabd::logic {

// Value-type substitution. Stored bindings are fully resolved, so applying
// a substitution twice gives the same result as applying it once.
class Substitution {
 public:
  Substitution() = default;

  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const Term* find(VarId v) const;
  const std::unordered_map<VarId, Term>& bindings() const { return map_; }

  // Adds a binding and re-resolves the existing ones. The caller is
  // responsible for `v` not occurring in `t`.
  void bind(VarId v, const Term& t);

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  friend class Bindings;
  std::unordered_map<VarId, Term> map_;
};

// Mutable binding store with a trail, used for backtracking search.
class Bindings {
 public:
  Bindings() = default;
  explicit Bindings(const Substitution& s);

  // Follows variable bindings at the top of `t` only.
  Term deref(Term t) const;
  // Applies all bindings recursively.
  Term resolve(const Term& t) const;
  Atom resolve(const Atom& a) const;

  bool bound(VarId v) const { return map_.contains(v); }
  void bind(VarId v, Term t);

  // Unifies two terms, recording new bindings on the trail. On failure the
  // store is left as it was.
  bool unify(const Term& a, const Term& b, bool occurs_check = true);
  bool unify(const Atom& a, const Atom& b, bool occurs_check = true);

  std::size_t mark() const { return trail_.size(); }
  void undo(std::size_t mark);

  // Snapshot of the bindings restricted to `vars` (all bindings when empty).
  Substitution export_substitution(const std::vector<VarId>& vars = {}) const;

 private:
  bool occurs(VarId v, const Term& t) const;
  bool unify_rec(const Term& a, const Term& b, bool occurs_check);

  std::unordered_map<VarId, Term> map_;
  std::vector<VarId> trail_;
};

// Most general unifier extending `s`, or nullopt.
std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& s = {},
                                  bool occurs_check = true);

Term apply(const Substitution& s, const Term& t);
Atom apply(const Substitution& s, const Atom& a);

}  // namespace metaabd::logic
