#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "metaabd/logic/symbol.hpp"

namespace metaabd::logic {

using VarId = std::uint64_t;

// Returns a variable id that has never been handed out before.
VarId next_var_id();

enum class TermKind : std::uint8_t { Var, Int, Sym, Compound };

// Immutable first-order term. Copies share structure.
//
// Lists are compounds: `'[]'/0` for the empty list, `'.'/2` for cells.
class Term {
 public:
  Term() : Term(TermKind::Sym, 0) {}

  static Term var(VarId id) { return Term(TermKind::Var, id); }
  static Term fresh_var() { return var(next_var_id()); }
  static Term integer(std::int64_t value) {
    return Term(TermKind::Int, static_cast<std::uint64_t>(value));
  }
  static Term sym(Symbol s) { return Term(TermKind::Sym, s.id(), s); }
  static Term sym(std::string_view name) { return sym(Symbol::intern(name)); }
  static Term compound(Symbol functor, std::vector<Term> args);
  static Term compound(std::string_view functor, std::vector<Term> args) {
    return compound(Symbol::intern(functor), std::move(args));
  }

  static Term nil();
  static Term cons(Term head, Term tail);
  static Term list(std::span<const Term> items, Term tail = nil());

  TermKind kind() const { return kind_; }
  bool is_var() const { return kind_ == TermKind::Var; }
  bool is_int() const { return kind_ == TermKind::Int; }
  bool is_sym() const { return kind_ == TermKind::Sym; }
  bool is_compound() const { return kind_ == TermKind::Compound; }
  bool is_atomic() const { return kind_ == TermKind::Int || kind_ == TermKind::Sym; }
  bool is_nil() const;
  bool is_cons() const;

  VarId var_id() const { return payload_; }
  std::int64_t int_value() const { return static_cast<std::int64_t>(payload_); }
  Symbol symbol() const { return symbol_; }  // Sym name or compound functor
  std::span<const Term> args() const;
  std::size_t arity() const { return args().size(); }
  const Term& arg(std::size_t i) const { return args()[i]; }

  bool ground() const;
  std::size_t hash() const;

  friend bool operator==(const Term& a, const Term& b);

 private:
  struct Node;

  Term(TermKind kind, std::uint64_t payload, Symbol sym = {})
      : kind_(kind), payload_(payload), symbol_(sym) {}

  TermKind kind_;
  std::uint64_t payload_;
  Symbol symbol_;
  std::shared_ptr<const Node> node_;
};

struct Term::Node {
  std::vector<Term> args;
  std::size_t hash = 0;
  bool ground = true;
};

// `pred(args...)` where the predicate slot may hold a variable inside
// metarule templates.
struct Atom {
  Term predicate;
  std::vector<Term> args;

  Atom() = default;
  Atom(Term pred, std::vector<Term> a) : predicate(std::move(pred)), args(std::move(a)) {}
  Atom(std::string_view pred, std::vector<Term> a)
      : predicate(Term::sym(pred)), args(std::move(a)) {}

  bool has_symbol_predicate() const { return predicate.is_sym(); }
  PredKey key() const { return {predicate.symbol(), args.size()}; }
  Term to_term() const;
  static Atom from_term(const Term& t);

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Clause {
  Atom head;
  std::vector<Atom> body;

  bool is_fact() const { return body.empty(); }
  friend bool operator==(const Clause&, const Clause&) = default;
};

// Structural size used for the recursion order guard: every node counts 1.
std::size_t term_size(const Term& t);

// All distinct variables of `t` in first-occurrence order.
void collect_vars(const Term& t, std::vector<VarId>& out);
std::vector<VarId> clause_vars(const Clause& c);

// True when `a` and `b` are equal up to a consistent renaming of variables.
bool is_variant(const Term& a, const Term& b);
bool is_variant(const Clause& a, const Clause& b);

// Replaces every variable with a globally fresh one.
Clause rename_apart(const Clause& c);
// Same, reusing and extending `mapping`; pre-seeded entries are honoured,
// so mapping a variable to itself keeps it shared.
Clause rename_apart(const Clause& c, std::unordered_map<VarId, Term>& mapping);

std::string to_string(const Term& t);
std::string to_string(const Atom& a);
// Clause text with variables named A, B, C, ... by first occurrence.
std::string to_string(const Clause& c);

// Proper list elements, or nullopt when `t` is not a nil-terminated list.
std::optional<std::vector<Term>> list_elements(const Term& t);

}  // namespace metaabd::logic

template <>
struct std::hash<metaabd::logic::Term> {
  std::size_t operator()(const metaabd::logic::Term& t) const noexcept { return t.hash(); }
};
