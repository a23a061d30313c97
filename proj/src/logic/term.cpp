#include "metaabd/logic/term.hpp"

#include <atomic>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

namespace metaabd::logic {
namespace {

std::atomic<VarId> g_next_var{1};

const Symbol& nil_symbol() {
  static const Symbol s = Symbol::intern("[]");
  return s;
}

const Symbol& cons_symbol() {
  static const Symbol s = Symbol::intern(".");
  return s;
}

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

bool is_bare_atom(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return s == "[]";
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

std::string quote_atom(const std::string& s) {
  if (is_bare_atom(s)) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  out += '\'';
  return out;
}

class Printer {
 public:
  explicit Printer(bool canonical_names) : canonical_(canonical_names) {}

  void term(const Term& t, std::string& out) {
    switch (t.kind()) {
      case TermKind::Var:
        out += var_name(t.var_id());
        return;
      case TermKind::Int:
        out += std::to_string(t.int_value());
        return;
      case TermKind::Sym:
        out += quote_atom(t.symbol().name());
        return;
      case TermKind::Compound:
        break;
    }
    if (t.is_nil()) {
      out += "[]";
      return;
    }
    if (t.is_cons()) {
      out += '[';
      Term cur = t;
      bool first = true;
      while (cur.is_cons()) {
        if (!first) out += ',';
        first = false;
        term(cur.arg(0), out);
        cur = cur.arg(1);
      }
      if (!cur.is_nil()) {
        out += '|';
        term(cur, out);
      }
      out += ']';
      return;
    }
    out += quote_atom(t.symbol().name());
    out += '(';
    for (std::size_t i = 0; i < t.arity(); ++i) {
      if (i) out += ',';
      term(t.arg(i), out);
    }
    out += ')';
  }

  void atom(const Atom& a, std::string& out) {
    term(a.predicate, out);
    if (a.args.empty()) return;
    out += '(';
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) out += ',';
      term(a.args[i], out);
    }
    out += ')';
  }

 private:
  std::string var_name(VarId id) {
    if (!canonical_) return "_G" + std::to_string(id);
    auto [it, inserted] = names_.try_emplace(id, "");
    if (inserted) {
      const std::size_t n = names_.size() - 1;
      it->second = std::string(1, static_cast<char>('A' + n % 26));
      if (n >= 26) it->second += std::to_string(n / 26);
    }
    return it->second;
  }

  bool canonical_;
  std::unordered_map<VarId, std::string> names_;
};

bool variant_rec(const Term& a, const Term& b, std::unordered_map<VarId, VarId>& ab,
                 std::unordered_map<VarId, VarId>& ba) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Var: {
      auto [i, ins1] = ab.try_emplace(a.var_id(), b.var_id());
      auto [j, ins2] = ba.try_emplace(b.var_id(), a.var_id());
      return i->second == b.var_id() && j->second == a.var_id();
    }
    case TermKind::Int:
      return a.int_value() == b.int_value();
    case TermKind::Sym:
      return a.symbol() == b.symbol();
    case TermKind::Compound:
      if (a.symbol() != b.symbol() || a.arity() != b.arity()) return false;
      for (std::size_t i = 0; i < a.arity(); ++i) {
        if (!variant_rec(a.arg(i), b.arg(i), ab, ba)) return false;
      }
      return true;
  }
  return false;
}

Term rename_term(const Term& t, std::unordered_map<VarId, Term>& fresh) {
  if (t.is_var()) {
    auto [it, inserted] = fresh.try_emplace(t.var_id());
    if (inserted) it->second = Term::fresh_var();
    return it->second;
  }
  if (!t.is_compound() || t.ground()) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const Term& a : t.args()) args.push_back(rename_term(a, fresh));
  return Term::compound(t.symbol(), std::move(args));
}

Atom rename_atom(const Atom& a, std::unordered_map<VarId, Term>& fresh) {
  Atom out;
  out.predicate = rename_term(a.predicate, fresh);
  out.args.reserve(a.args.size());
  for (const Term& t : a.args) out.args.push_back(rename_term(t, fresh));
  return out;
}

}  // namespace

VarId next_var_id() { return g_next_var.fetch_add(1, std::memory_order_relaxed); }

Term Term::compound(Symbol functor, std::vector<Term> args) {
  if (args.empty() && functor != nil_symbol()) return sym(functor);
  Term t(TermKind::Compound, 0, functor);
  auto node = std::make_shared<Node>();
  std::size_t h = mix(0x51ed27, functor.id());
  for (const Term& a : args) {
    h = mix(h, a.hash());
    node->ground = node->ground && a.ground();
  }
  node->hash = h;
  node->args = std::move(args);
  t.node_ = std::move(node);
  return t;
}

Term Term::nil() {
  static const Term n = [] {
    Term t(TermKind::Compound, 0, nil_symbol());
    auto node = std::make_shared<Node>();
    node->hash = mix(0x51ed27, nil_symbol().id());
    t.node_ = std::move(node);
    return t;
  }();
  return n;
}

Term Term::cons(Term head, Term tail) {
  return compound(cons_symbol(), {std::move(head), std::move(tail)});
}

Term Term::list(std::span<const Term> items, Term tail) {
  Term out = std::move(tail);
  for (auto it = items.rbegin(); it != items.rend(); ++it) out = cons(*it, std::move(out));
  return out;
}

bool Term::is_nil() const { return kind_ == TermKind::Compound && symbol_ == nil_symbol(); }

bool Term::is_cons() const {
  return kind_ == TermKind::Compound && symbol_ == cons_symbol() && node_->args.size() == 2;
}

std::span<const Term> Term::args() const {
  if (kind_ != TermKind::Compound) return {};
  return node_->args;
}

bool Term::ground() const {
  switch (kind_) {
    case TermKind::Var:
      return false;
    case TermKind::Compound:
      return node_->ground;
    default:
      return true;
  }
}

std::size_t Term::hash() const {
  switch (kind_) {
    case TermKind::Var:
      return mix(1, payload_);
    case TermKind::Int:
      return mix(2, payload_);
    case TermKind::Sym:
      return mix(3, symbol_.id());
    case TermKind::Compound:
      return node_->hash;
  }
  return 0;
}

bool operator==(const Term& a, const Term& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case TermKind::Var:
    case TermKind::Int:
      return a.payload_ == b.payload_;
    case TermKind::Sym:
      return a.symbol_ == b.symbol_;
    case TermKind::Compound: {
      if (a.node_ == b.node_) return true;
      if (a.symbol_ != b.symbol_ || a.node_->hash != b.node_->hash) return false;
      const auto& x = a.node_->args;
      const auto& y = b.node_->args;
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] == y[i])) return false;
      }
      return true;
    }
  }
  return false;
}

Term Atom::to_term() const {
  if (!predicate.is_sym()) throw std::logic_error("atom with non-symbol predicate: " + to_string(*this));
  return Term::compound(predicate.symbol(), args);
}

Atom Atom::from_term(const Term& t) {
  if (t.is_sym()) return Atom(t, {});
  if (t.is_compound() && !t.is_nil()) {
    return Atom(Term::sym(t.symbol()), std::vector<Term>(t.args().begin(), t.args().end()));
  }
  throw std::invalid_argument("not a callable term: " + to_string(t));
}

std::size_t term_size(const Term& t) {
  if (!t.is_compound()) return 1;
  std::size_t n = 1;
  for (const Term& a : t.args()) n += term_size(a);
  return n;
}

void collect_vars(const Term& t, std::vector<VarId>& out) {
  if (t.is_var()) {
    for (VarId v : out) {
      if (v == t.var_id()) return;
    }
    out.push_back(t.var_id());
    return;
  }
  if (t.is_compound() && !t.ground()) {
    for (const Term& a : t.args()) collect_vars(a, out);
  }
}

std::vector<VarId> clause_vars(const Clause& c) {
  std::vector<VarId> out;
  auto visit = [&](const Atom& a) {
    collect_vars(a.predicate, out);
    for (const Term& t : a.args) collect_vars(t, out);
  };
  visit(c.head);
  for (const Atom& a : c.body) visit(a);
  return out;
}

bool is_variant(const Term& a, const Term& b) {
  std::unordered_map<VarId, VarId> ab, ba;
  return variant_rec(a, b, ab, ba);
}

bool is_variant(const Clause& a, const Clause& b) {
  if (a.body.size() != b.body.size()) return false;
  std::unordered_map<VarId, VarId> ab, ba;
  auto atoms = [&](const Atom& x, const Atom& y) {
    if (x.args.size() != y.args.size() || !variant_rec(x.predicate, y.predicate, ab, ba)) return false;
    for (std::size_t i = 0; i < x.args.size(); ++i) {
      if (!variant_rec(x.args[i], y.args[i], ab, ba)) return false;
    }
    return true;
  };
  if (!atoms(a.head, b.head)) return false;
  for (std::size_t i = 0; i < a.body.size(); ++i) {
    if (!atoms(a.body[i], b.body[i])) return false;
  }
  return true;
}

Clause rename_apart(const Clause& c) {
  std::unordered_map<VarId, Term> fresh;
  return rename_apart(c, fresh);
}

Clause rename_apart(const Clause& c, std::unordered_map<VarId, Term>& fresh) {
  Clause out;
  out.head = rename_atom(c.head, fresh);
  out.body.reserve(c.body.size());
  for (const Atom& a : c.body) out.body.push_back(rename_atom(a, fresh));
  return out;
}

std::string to_string(const Term& t) {
  std::string out;
  Printer(false).term(t, out);
  return out;
}

std::string to_string(const Atom& a) {
  std::string out;
  Printer(false).atom(a, out);
  return out;
}

std::string to_string(const Clause& c) {
  std::string out;
  Printer p(true);
  p.atom(c.head, out);
  if (!c.body.empty()) {
    out += ":-";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i) out += ',';
      p.atom(c.body[i], out);
    }
  }
  out += '.';
  return out;
}

std::optional<std::vector<Term>> list_elements(const Term& t) {
  std::vector<Term> out;
  Term cur = t;
  while (cur.is_cons()) {
    out.push_back(cur.arg(0));
    cur = cur.arg(1);
  }
  if (!cur.is_nil()) return std::nullopt;
  return out;
}

}  // namespace metaabd::logic
