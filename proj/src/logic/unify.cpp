#include "metaabd/logic/unify.hpp"

namespace metaabd::logic {

const Term* Substitution::find(VarId v) const {
  auto it = map_.find(v);
  return it == map_.end() ? nullptr : &it->second;
}

void Substitution::bind(VarId v, const Term& t) {
  Substitution single;
  single.map_.emplace(v, t);
  for (auto& [_, value] : map_) value = apply(single, value);
  map_.insert_or_assign(v, apply(*this, t));
}

Bindings::Bindings(const Substitution& s) : map_(s.map_) {}

Term Bindings::deref(Term t) const {
  while (t.is_var()) {
    auto it = map_.find(t.var_id());
    if (it == map_.end()) break;
    t = it->second;
  }
  return t;
}

Term Bindings::resolve(const Term& t) const {
  Term d = deref(t);
  if (!d.is_compound() || d.ground() || map_.empty()) return d;
  std::vector<Term> args;
  args.reserve(d.arity());
  bool changed = false;
  for (const Term& a : d.args()) {
    args.push_back(resolve(a));
    changed = changed || !(args.back() == a);
  }
  if (!changed) return d;
  return Term::compound(d.symbol(), std::move(args));
}

Atom Bindings::resolve(const Atom& a) const {
  Atom out;
  out.predicate = resolve(a.predicate);
  out.args.reserve(a.args.size());
  for (const Term& t : a.args) out.args.push_back(resolve(t));
  return out;
}

void Bindings::bind(VarId v, Term t) {
  map_.insert_or_assign(v, std::move(t));
  trail_.push_back(v);
}

void Bindings::undo(std::size_t mark) {
  while (trail_.size() > mark) {
    map_.erase(trail_.back());
    trail_.pop_back();
  }
}

bool Bindings::occurs(VarId v, const Term& t) const {
  Term d = deref(t);
  if (d.is_var()) return d.var_id() == v;
  if (!d.is_compound() || d.ground()) return false;
  for (const Term& a : d.args()) {
    if (occurs(v, a)) return true;
  }
  return false;
}

bool Bindings::unify_rec(const Term& a, const Term& b, bool occurs_check) {
  Term x = deref(a);
  Term y = deref(b);
  if (x.is_var()) {
    if (y.is_var() && y.var_id() == x.var_id()) return true;
    if (occurs_check && occurs(x.var_id(), y)) return false;
    bind(x.var_id(), y);
    return true;
  }
  if (y.is_var()) {
    if (occurs_check && occurs(y.var_id(), x)) return false;
    bind(y.var_id(), x);
    return true;
  }
  if (x.kind() != y.kind()) return false;
  switch (x.kind()) {
    case TermKind::Int:
      return x.int_value() == y.int_value();
    case TermKind::Sym:
      return x.symbol() == y.symbol();
    case TermKind::Compound: {
      if (x.symbol() != y.symbol() || x.arity() != y.arity()) return false;
      if (x.ground() && y.ground()) return x == y;
      for (std::size_t i = 0; i < x.arity(); ++i) {
        if (!unify_rec(x.arg(i), y.arg(i), occurs_check)) return false;
      }
      return true;
    }
    case TermKind::Var:
      break;
  }
  return false;
}

bool Bindings::unify(const Term& a, const Term& b, bool occurs_check) {
  const std::size_t m = mark();
  if (unify_rec(a, b, occurs_check)) return true;
  undo(m);
  return false;
}

bool Bindings::unify(const Atom& a, const Atom& b, bool occurs_check) {
  if (a.args.size() != b.args.size()) return false;
  const std::size_t m = mark();
  bool ok = unify_rec(a.predicate, b.predicate, occurs_check);
  for (std::size_t i = 0; ok && i < a.args.size(); ++i) {
    ok = unify_rec(a.args[i], b.args[i], occurs_check);
  }
  if (!ok) undo(m);
  return ok;
}

Substitution Bindings::export_substitution(const std::vector<VarId>& vars) const {
  Substitution s;
  if (vars.empty()) {
    for (const auto& [v, _] : map_) s.map_.emplace(v, resolve(Term::var(v)));
  } else {
    for (VarId v : vars) {
      if (map_.contains(v)) s.map_.emplace(v, resolve(Term::var(v)));
    }
  }
  return s;
}

std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& s,
                                  bool occurs_check) {
  Bindings store(s);
  if (!store.unify(a, b, occurs_check)) return std::nullopt;
  return store.export_substitution();
}

Term apply(const Substitution& s, const Term& t) {
  if (s.empty()) return t;
  if (t.is_var()) {
    const Term* bound = s.find(t.var_id());
    if (!bound) return t;
    if (bound->is_var() && bound->var_id() == t.var_id()) return t;
    return apply(s, *bound);
  }
  if (!t.is_compound() || t.ground()) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const Term& a : t.args()) args.push_back(apply(s, a));
  return Term::compound(t.symbol(), std::move(args));
}

Atom apply(const Substitution& s, const Atom& a) {
  Atom out;
  out.predicate = apply(s, a.predicate);
  for (const Term& t : a.args) out.args.push_back(apply(s, t));
  return out;
}

}  // namespace metaabd::logic
