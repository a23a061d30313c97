#include "metaabd/logic/kb.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace metaabd::logic {
namespace {

struct ListView {
  std::vector<Term> items;
  Term tail;  // nil for proper lists, an unbound variable for partial ones
  bool proper() const { return tail.is_nil(); }
  bool partial() const { return tail.is_var(); }
};

ListView walk(const Bindings& b, const Term& t) {
  ListView v;
  Term cur = b.deref(t);
  while (cur.is_cons()) {
    v.items.push_back(cur.arg(0));
    cur = b.deref(cur.arg(1));
  }
  v.tail = cur;
  return v;
}

std::optional<std::int64_t> int_arg(const Bindings& b, const Term& t) {
  Term d = b.deref(t);
  if (!d.is_int()) return std::nullopt;
  return d.int_value();
}

bool unify_then(Bindings& b, const Term& x, const Term& y, Continuation k) {
  const std::size_t m = b.mark();
  if (!b.unify(x, y)) return true;
  const bool go_on = k();
  b.undo(m);
  return go_on;
}

bool builtin_unify(std::span<const Term> a, Bindings& b, Continuation k) {
  return unify_then(b, a[0], a[1], k);
}

bool builtin_length(std::span<const Term> a, Bindings& b, Continuation k) {
  ListView v = walk(b, a[0]);
  if (v.proper()) return unify_then(b, a[1], Term::integer(static_cast<std::int64_t>(v.items.size())), k);
  if (!v.partial()) return true;
  auto n = int_arg(b, a[1]);
  if (!n || *n < static_cast<std::int64_t>(v.items.size())) return true;
  std::vector<Term> extra;
  for (std::int64_t i = static_cast<std::int64_t>(v.items.size()); i < *n; ++i) {
    extra.push_back(Term::fresh_var());
  }
  return unify_then(b, v.tail, Term::list(extra), k);
}

bool builtin_numlist(std::span<const Term> a, Bindings& b, Continuation k) {
  auto lo = int_arg(b, a[0]);
  auto hi = int_arg(b, a[1]);
  if (!lo || !hi || *hi < *lo - 1) return true;
  std::vector<Term> items;
  for (std::int64_t i = *lo; i <= *hi; ++i) items.push_back(Term::integer(i));
  return unify_then(b, a[2], Term::list(items), k);
}

bool builtin_between(std::span<const Term> a, Bindings& b, Continuation k) {
  auto lo = int_arg(b, a[0]);
  auto hi = int_arg(b, a[1]);
  if (!lo || !hi) return true;
  Term x = b.deref(a[2]);
  if (x.is_int()) {
    if (x.int_value() >= *lo && x.int_value() <= *hi) return k();
    return true;
  }
  for (std::int64_t i = *lo; i <= *hi; ++i) {
    if (!unify_then(b, x, Term::integer(i), k)) return false;
  }
  return true;
}

bool builtin_permutation(std::span<const Term> a, Bindings& b, Continuation k) {
  ListView src = walk(b, a[0]);
  Term target = a[1];
  if (!src.proper()) {
    ListView other = walk(b, a[1]);
    if (!other.proper()) return true;
    src = std::move(other);
    target = a[0];
  }
  std::vector<std::size_t> idx(src.items.size());
  std::iota(idx.begin(), idx.end(), 0);
  do {
    std::vector<Term> perm;
    perm.reserve(idx.size());
    for (std::size_t i : idx) perm.push_back(src.items[i]);
    if (!unify_then(b, target, Term::list(perm), k)) return false;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return true;
}

bool builtin_nth1(std::span<const Term> a, Bindings& b, Continuation k) {
  auto index = int_arg(b, a[0]);
  if (index) {
    if (*index < 1) return true;
    const std::size_t m = b.mark();
    Term cur = b.deref(a[1]);
    for (std::int64_t i = 1;; ++i) {
      if (cur.is_var()) {
        Term cell = Term::cons(Term::fresh_var(), Term::fresh_var());
        b.bind(cur.var_id(), cell);
        cur = cell;
      }
      if (!cur.is_cons()) {
        b.undo(m);
        return true;
      }
      if (i == *index) break;
      cur = b.deref(cur.arg(1));
    }
    bool go_on = true;
    if (b.unify(cur.arg(0), a[2])) go_on = k();
    b.undo(m);
    return go_on;
  }
  ListView v = walk(b, a[1]);
  for (std::size_t i = 0; i < v.items.size(); ++i) {
    const std::size_t m = b.mark();
    if (b.unify(a[0], Term::integer(static_cast<std::int64_t>(i + 1))) && b.unify(v.items[i], a[2])) {
      if (!k()) {
        b.undo(m);
        return false;
      }
    }
    b.undo(m);
  }
  return true;
}

template <typename Cmp>
Builtin comparison(Cmp cmp) {
  return [cmp](std::span<const Term> a, Bindings& b, Continuation k) {
    auto x = int_arg(b, a[0]);
    auto y = int_arg(b, a[1]);
    if (!x || !y || !cmp(*x, *y)) return true;
    return k();
  };
}

bool term_mentions(const Term& t, Symbol s) {
  if (t.is_sym()) return t.symbol() == s;
  if (!t.is_compound()) return false;
  if (t.symbol() == s) return true;
  for (const Term& a : t.args()) {
    if (term_mentions(a, s)) return true;
  }
  return false;
}

}  // namespace

KnowledgeBase KnowledgeBase::with_standard_builtins() {
  KnowledgeBase kb;
  kb.add_builtin({Symbol::intern("="), 2}, builtin_unify);
  kb.add_builtin({Symbol::intern("length"), 2}, builtin_length);
  kb.add_builtin({Symbol::intern("numlist"), 3}, builtin_numlist);
  kb.add_builtin({Symbol::intern("between"), 3}, builtin_between);
  kb.add_builtin({Symbol::intern("permutation"), 2}, builtin_permutation);
  kb.add_builtin({Symbol::intern("nth1"), 3}, builtin_nth1);
  kb.add_builtin({Symbol::intern("<"), 2}, comparison(std::less<>{}));
  kb.add_builtin({Symbol::intern(">"), 2}, comparison(std::greater<>{}));
  kb.add_builtin({Symbol::intern("=<"), 2}, comparison(std::less_equal<>{}));
  kb.add_builtin({Symbol::intern(">="), 2}, comparison(std::greater_equal<>{}));
  return kb;
}

void KnowledgeBase::add_clause(Clause c) {
  if (!c.head.predicate.is_sym()) {
    throw std::invalid_argument("clause head must have a symbol predicate: " + to_string(c));
  }
  const PredKey key = c.head.key();
  if (builtins_.contains(key)) {
    throw std::invalid_argument("clause redefines builtin " + to_string(key));
  }
  auto [it, inserted] = clauses_.try_emplace(key);
  if (inserted) order_.push_back(key);
  it->second.push_back(std::move(c));
}

void KnowledgeBase::add_builtin(PredKey key, Builtin fn) {
  if (clauses_.contains(key)) {
    throw std::invalid_argument("builtin collides with defined predicate " + to_string(key));
  }
  builtins_.insert_or_assign(key, std::move(fn));
}

std::span<const Clause> KnowledgeBase::clauses(const PredKey& key) const {
  auto it = clauses_.find(key);
  if (it == clauses_.end()) return {};
  return it->second;
}

const Builtin* KnowledgeBase::builtin(const PredKey& key) const {
  auto it = builtins_.find(key);
  return it == builtins_.end() ? nullptr : &it->second;
}

bool KnowledgeBase::defines(const PredKey& key) const {
  return clauses_.contains(key) || builtins_.contains(key);
}

std::vector<PredKey> KnowledgeBase::builtin_predicates() const {
  std::vector<PredKey> out;
  for (const auto& [k, _] : builtins_) out.push_back(k);
  return out;
}

std::vector<Clause> KnowledgeBase::all_clauses() const {
  std::vector<Clause> out;
  for (const PredKey& k : order_) {
    const auto& cs = clauses_.at(k);
    out.insert(out.end(), cs.begin(), cs.end());
  }
  return out;
}

std::size_t KnowledgeBase::clause_count() const {
  std::size_t n = 0;
  for (const auto& [_, cs] : clauses_) n += cs.size();
  return n;
}

bool KnowledgeBase::mentions_symbol(Symbol s) const {
  for (const auto& [k, _] : builtins_) {
    if (k.name == s) return true;
  }
  auto in_atom = [&](const Atom& a) {
    if (term_mentions(a.predicate, s)) return true;
    for (const Term& t : a.args) {
      if (term_mentions(t, s)) return true;
    }
    return false;
  };
  for (const auto& [_, cs] : clauses_) {
    for (const Clause& c : cs) {
      if (in_atom(c.head)) return true;
      for (const Atom& a : c.body) {
        if (in_atom(a)) return true;
      }
    }
  }
  return false;
}

}  // namespace metaabd::logic
