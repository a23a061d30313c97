#include "metaabd/mil/prover.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace metaabd::mil {

using logic::Atom;
using logic::Clause;
using logic::PredKey;
using logic::Symbol;
using logic::Term;
using logic::VarId;

struct Prover::Instance {
  const Metarule* rule = nullptr;  // null for clauses of a fixed program
  Clause clause;                   // existential variables shared across uses
  std::vector<VarId> exist;        // in the rule's existential order
  std::optional<MetaSub> fixed;
};

// Nearest enclosing call of a program predicate, for the recursion guard.
struct Prover::Ancestor {
  Symbol pred;
  std::size_t size;
  const Ancestor* next;
};

struct Prover::Frame {
  const Atom* goal;
  const Frame* next;
  std::size_t depth;
  const Ancestor* anc;
};

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t size_under(const logic::Bindings& b, const Term& t) {
  const Term d = b.deref(t);
  if (!d.is_compound()) return 1;
  std::size_t n = 1;
  for (const Term& a : d.args()) n += size_under(b, a);
  return n;
}

bool operand_ok(const Term& t) {
  if (t.is_var() || t.is_int()) return true;
  return t.is_sym() && item_index(t.symbol()).has_value();
}

void mark_items(const Term& t, std::vector<bool>& seen) {
  if (t.is_sym()) {
    if (auto i = item_index(t.symbol()); i && *i < seen.size()) seen[*i] = true;
  } else if (t.is_compound()) {
    for (const Term& a : t.args()) mark_items(a, seen);
  }
}

void collect_goal_vars(const Term& t, std::vector<VarId>& out) { logic::collect_vars(t, out); }

// Maps abduced arithmetic onto a finite-domain store. Items become weighted
// pseudo-label variables, logic variables become bounded intermediates.
class StoreBuilder {
 public:
  StoreBuilder(const Evidence& ev) : ev_(ev) {
    for (std::size_t i = 0; i < ev.label_logp.size(); ++i) store.add_weighted_var(ev.label_logp[i]);
  }

  std::optional<fd::VarIndex> of(const Term& t) {
    if (t.is_int()) {
      auto [it, fresh] = consts_.try_emplace(t.int_value());
      if (fresh) it->second = store.add_var(t.int_value(), t.int_value());
      return it->second;
    }
    if (t.is_var()) {
      auto [it, fresh] = vars.try_emplace(t.var_id());
      if (fresh) it->second = store.add_var(0, ev_.value_max);
      return it->second;
    }
    if (t.is_sym()) {
      auto i = item_index(t.symbol());
      if (i && *i < ev_.label_logp.size()) return *i;
    }
    return std::nullopt;
  }

  bool post(const AbducedItem& a) {
    std::vector<fd::VarIndex> ix;
    for (const Term& t : a.args) {
      auto v = of(t);
      if (!v) return false;
      ix.push_back(*v);
    }
    switch (a.kind) {
      case AbducibleKind::Add: return store.post(fd::Add{ix[0], ix[1], ix[2]});
      case AbducibleKind::Mul: return store.post(fd::Mul{ix[0], ix[1], ix[2]});
      case AbducibleKind::Eq: {
        auto zero = of(Term::integer(0));
        return store.post(fd::Add{ix[0], *zero, ix[1]});
      }
      case AbducibleKind::PairFact: return true;
    }
    return true;
  }

  fd::ConstraintStore store;
  std::unordered_map<VarId, fd::VarIndex> vars;

 private:
  const Evidence& ev_;
  std::unordered_map<std::int64_t, fd::VarIndex> consts_;
};

}  // namespace

std::string to_string(const AbducedItem& a) {
  auto s = [](const Term& t) { return logic::to_string(t); };
  switch (a.kind) {
    case AbducibleKind::Add: return s(a.args[0]) + "+" + s(a.args[1]) + "#=" + s(a.args[2]);
    case AbducibleKind::Mul: return s(a.args[0]) + "*" + s(a.args[1]) + "#=" + s(a.args[2]);
    case AbducibleKind::Eq: return s(a.args[0]) + "#=" + s(a.args[1]);
    case AbducibleKind::PairFact: return "nn_pred(" + s(a.args[0]) + "," + s(a.args[1]) + ")";
  }
  return {};
}

void SearchStats::merge(const SearchStats& o) {
  nodes += o.nodes;
  solver_nodes += o.solver_nodes;
  labelings += o.labelings;
  depth_exceeded = depth_exceeded || o.depth_exceeded;
  budget_exceeded = budget_exceeded || o.budget_exceeded;
}

Prover::Prover(const logic::KnowledgeBase& kb, const Language& lang, ProveOptions opts)
    : kb_(kb), lang_(lang), opts_(opts) {
  std::string base = lang.invent_base;
  if (base.empty() && !lang.targets.empty()) base = lang.targets.front().name.name();
  SymbolInventor inv(base, &kb);
  for (std::size_t i = 0; i < std::max<std::size_t>(opts.max_clauses, 8); ++i) invent_pool_.push_back(inv.next());
}

Prover::~Prover() = default;

bool Prover::budget_hit() {
  ++stats_.nodes;
  if (opts_.node_budget != 0 && stats_.nodes > opts_.node_budget) {
    stats_.budget_exceeded = true;
    stop_ = true;
    return true;
  }
  return false;
}

bool Prover::is_program_pred(Symbol s, std::size_t arity) const {
  if (lang_.is_target({s, arity})) return true;
  for (const auto& [sym, ar] : invented_) {
    if (sym == s && ar == arity) return true;
  }
  for (const Instance& inst : instances_) {
    const Term p = b_.deref(inst.clause.head.predicate);
    if (p.is_sym() && p.symbol() == s && inst.clause.head.args.size() == arity) return true;
  }
  return false;
}

bool Prover::run(const Frame* g, Cont k) {
  if (stop_) return false;
  if (g == nullptr) return k();
  if (budget_hit()) return false;
  const Atom& goal = *g->goal;
  const Term pred = b_.deref(goal.predicate);
  if (pred.is_var()) return bind_predicate(g, pred, k);
  if (!pred.is_sym()) return true;
  const PredKey key{pred.symbol(), goal.args.size()};

  if (const logic::Builtin* fn = kb_.builtin(key)) {
    return (*fn)(goal.args, b_, [&] { return run(g->next, k); });
  }
  if (!kb_.clauses(key).empty()) return resolve_kb(g, key, k);
  if (const Abducible* a = lang_.abducible(key)) return abduce(g, *a, k);
  if (is_program_pred(key.name, key.arity)) return resolve_program(g, key.name, k);
  return true;
}

bool Prover::bind_predicate(const Frame* g, const Term& var, Cont k) {
  const std::size_t arity = g->goal->args.size();
  std::vector<Symbol> cands;
  for (const PredKey& p : lang_.primitives) {
    if (p.arity == arity) cands.push_back(p.name);
  }
  for (const Abducible& a : lang_.abducibles) {
    if (a.arity == arity) cands.push_back(a.name);
  }
  for (const PredKey& t : lang_.targets) {
    if (t.arity == arity) cands.push_back(t.name);
  }
  for (const auto& [s, ar] : invented_) {
    if (ar == arity) cands.push_back(s);
  }
  for (Symbol s : cands) {
    const std::size_t m = b_.mark();
    b_.bind(var.var_id(), Term::sym(s));
    const bool go_on = run(g, k);
    b_.undo(m);
    if (!go_on) return false;
  }
  if (opts_.allow_new_clauses && instances_.size() < opts_.max_clauses && invented_.size() < invent_pool_.size()) {
    const Symbol s = invent_pool_[invented_.size()];
    invented_.emplace_back(s, arity);
    const std::size_t m = b_.mark();
    b_.bind(var.var_id(), Term::sym(s));
    const bool go_on = run(g, k);
    b_.undo(m);
    invented_.pop_back();
    if (!go_on) return false;
  }
  return true;
}

bool Prover::resolve_kb(const Frame* g, const PredKey& key, Cont k) {
  if (g->depth >= opts_.depth_limit) {
    stats_.depth_exceeded = true;
    return true;
  }
  const Atom& goal = *g->goal;
  const bool covered = opts_.require_coverage && lang_.is_covered_call(key);
  const std::size_t from = abduced_.size();
  // covered calls end the body early and check their items before moving on
  auto after = [&] {
    if (!call_covers(goal, from)) return true;
    return run(g->next, k);
  };
  for (const Clause& stored : kb_.clauses(key)) {
    Clause c = logic::rename_apart(stored);
    const std::size_t m = b_.mark();
    bool ok = true;
    for (std::size_t i = 0; ok && i < goal.args.size(); ++i) ok = b_.unify(c.head.args[i], goal.args[i], opts_.occurs_check);
    if (ok) {
      const Frame* tail = covered ? nullptr : g->next;
      std::vector<Frame> body(c.body.size());
      for (std::size_t i = c.body.size(); i-- > 0;) {
        body[i] = {&c.body[i], i + 1 < c.body.size() ? &body[i + 1] : tail, g->depth + 1, g->anc};
      }
      const Frame* first = body.empty() ? tail : &body[0];
      if (!(covered ? run(first, after) : run(first, k))) {
        b_.undo(m);
        return false;
      }
    }
    b_.undo(m);
  }
  return true;
}

bool Prover::call_covers(const Atom& goal, std::size_t from) const {
  std::vector<bool> want(ev_->items(), false);
  for (const Term& a : goal.args) mark_items(b_.resolve(a), want);
  if (ev_->label_logp.empty() && std::count(want.begin(), want.end(), true) < 2) return true;
  std::vector<bool> seen(ev_->items(), false);
  for (std::size_t i = from; i < abduced_.size(); ++i) {
    for (const Term& t : abduced_[i].args) mark_items(b_.resolve(t), seen);
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i] && !seen[i]) return false;
  }
  return true;
}

bool Prover::push_abduced(AbducedItem item, Cont k) {
  const double next = acc_ + item.log_prob;
  if (opts_.prune && incumbent_ && next <= *incumbent_) return true;
  const double saved = acc_;
  acc_ = next;
  abduced_.push_back(std::move(item));
  const bool go_on = k();
  abduced_.pop_back();
  acc_ = saved;
  return go_on;
}

bool Prover::abduce(const Frame* g, const Abducible& a, Cont k) {
  const Atom& goal = *g->goal;
  const Term list = b_.deref(goal.args[0]);
  if (!list.is_cons()) return true;
  auto next = [&] { return run(g->next, k); };

  if (a.kind == AbducibleKind::PairFact) {
    const Term rest = b_.deref(list.arg(1));
    if (!rest.is_cons()) return true;
    const Term x = b_.deref(list.arg(0));
    const Term y = b_.deref(rest.arg(0));
    if (!x.is_sym() || !y.is_sym()) return true;
    auto i = item_index(x.symbol());
    auto j = item_index(y.symbol());
    if (!i || !j || *i >= ev_->pair_logp.size() || *j >= ev_->pair_logp.size()) return true;
    double lp = ev_->pair_logp[*i][*j];
    if (lp == kNegInf) return true;
    for (std::size_t q = example_start_; q < abduced_.size(); ++q) {
      const AbducedItem& prev = abduced_[q];
      if (prev.kind == AbducibleKind::PairFact && prev.args[0] == x && prev.args[1] == y) {
        lp = 0.0;  // same fact already paid for in this proof
        break;
      }
    }
    return push_abduced({a.kind, {x, y}, lp}, next);
  }

  std::vector<Term> operands;
  Term tail;
  if (a.kind == AbducibleKind::Eq) {
    operands.push_back(b_.deref(list.arg(0)));
    tail = list.arg(1);
  } else {
    const Term rest = b_.deref(list.arg(1));
    if (!rest.is_cons()) return true;
    operands.push_back(b_.deref(list.arg(0)));
    operands.push_back(b_.deref(rest.arg(0)));
    tail = rest.arg(1);
  }
  for (const Term& t : operands) {
    if (!operand_ok(t)) return true;
  }
  const Term n = Term::fresh_var();
  const std::size_t m = b_.mark();
  if (!b_.unify(goal.args[1], Term::cons(n, tail), opts_.occurs_check)) return true;
  const Term nv = b_.deref(n);
  bool go_on = true;
  if (nv.is_var() || nv.is_int()) {
    operands.push_back(n);
    go_on = push_abduced({a.kind, std::move(operands), 0.0}, next);
  }
  b_.undo(m);
  return go_on;
}

bool Prover::use_instance(const Frame* g, const Instance& inst, const Ancestor* anc, Cont k) {
  std::unordered_map<VarId, Term> keep;
  for (VarId v : inst.exist) keep.emplace(v, Term::var(v));
  Clause c = logic::rename_apart(inst.clause, keep);
  const Atom& goal = *g->goal;
  const std::size_t m = b_.mark();
  bool ok = true;
  for (std::size_t i = 0; ok && i < goal.args.size(); ++i) ok = b_.unify(c.head.args[i], goal.args[i], opts_.occurs_check);
  bool go_on = true;
  if (ok) {
    std::vector<Frame> body(c.body.size());
    for (std::size_t i = c.body.size(); i-- > 0;) {
      body[i] = {&c.body[i], i + 1 < c.body.size() ? &body[i + 1] : g->next, g->depth + 1, anc};
    }
    go_on = run(body.empty() ? g->next : &body[0], k);
  }
  b_.undo(m);
  return go_on;
}

bool Prover::resolve_program(const Frame* g, Symbol pred, Cont k) {
  if (g->depth >= opts_.depth_limit) {
    stats_.depth_exceeded = true;
    return true;
  }
  const Atom& goal = *g->goal;
  const std::size_t arity = goal.args.size();
  // recursion guard: the first argument must shrink between nested calls
  const std::size_t size = arity == 0 ? 0 : size_under(b_, goal.args[0]);
  for (const Ancestor* a = g->anc; a != nullptr; a = a->next) {
    if (a->pred == pred) {
      if (size >= a->size) return true;
      break;
    }
  }
  const Ancestor anc{pred, size, g->anc};

  const std::size_t existing = instances_.size();
  for (std::size_t i = 0; i < existing; ++i) {
    const Term hp = b_.deref(instances_[i].clause.head.predicate);
    if (!hp.is_sym() || hp.symbol() != pred || instances_[i].clause.head.args.size() != arity) continue;
    const Instance inst = instances_[i];  // the vector may grow underneath us
    if (!use_instance(g, inst, &anc, k)) return false;
  }

  if (!opts_.allow_new_clauses || existing >= opts_.max_clauses) return true;
  for (const Metarule& rule : lang_.metarules) {
    if (rule.head_arity() != arity) continue;
    std::unordered_map<VarId, Term> map;
    Instance inst;
    inst.rule = &rule;
    inst.clause = logic::rename_apart(rule.clause, map);
    for (VarId v : rule.existentials) {
      auto it = map.find(v);
      inst.exist.push_back(it == map.end() ? logic::next_var_id() : it->second.var_id());
    }
    const std::size_t m = b_.mark();
    b_.bind(inst.clause.head.predicate.var_id(), Term::sym(pred));
    instances_.push_back(inst);
    const bool go_on = use_instance(g, inst, &anc, k);
    instances_.pop_back();
    b_.undo(m);
    if (!go_on) return false;
  }
  return true;
}

void Prover::load_program(const Program& p) {
  instances_.clear();
  invented_.clear();
  abduced_.clear();
  acc_ = 0.0;
  example_start_ = 0;
  stop_ = false;
  incumbent_.reset();
  b_ = logic::Bindings();
  for (std::size_t i = 0; i < p.clauses().size(); ++i) {
    Instance inst;
    inst.clause = p.clauses()[i];
    inst.fixed = p.metasubs()[i];
    instances_.push_back(std::move(inst));
  }
  for (Symbol s : p.invented()) {
    for (const Clause& c : p.clauses()) {
      if (c.head.predicate.symbol() == s) {
        invented_.emplace_back(s, c.head.args.size());
        break;
      }
    }
  }
}

std::vector<MetaSub> Prover::current_metasubs() const {
  std::vector<MetaSub> out;
  for (const Instance& inst : instances_) {
    if (inst.fixed) {
      out.push_back(*inst.fixed);
      continue;
    }
    MetaSub ms;
    ms.metarule = inst.rule->name;
    for (VarId v : inst.exist) {
      const Term t = b_.deref(Term::var(v));
      ms.bindings.push_back(t.is_sym() ? t.symbol() : Symbol());
    }
    out.push_back(std::move(ms));
  }
  return out;
}

std::optional<ProofResult> Prover::close_example(const Atom& goal, std::size_t from, bool solve) {
  ProofResult r;
  bool constraints = false;
  for (std::size_t i = from; i < abduced_.size(); ++i) {
    AbducedItem item = abduced_[i];
    for (Term& t : item.args) t = b_.resolve(t);
    constraints = constraints || item.kind != AbducibleKind::PairFact;
    r.log_prob += item.log_prob;
    r.abduced.push_back(std::move(item));
  }
  // a lone item cannot occur in a pair fact, so it is exempt
  const bool pairs_only = ev_->label_logp.empty();
  if (opts_.require_coverage && !(pairs_only && ev_->items() < 2)) {
    std::vector<bool> seen(ev_->items(), false);
    for (const AbducedItem& a : r.abduced) {
      for (const Term& t : a.args) mark_items(t, seen);
    }
    for (bool s : seen) {
      if (!s) return std::nullopt;
    }
  }
  r.answer = b_.resolve(goal);
  if (!constraints) return r;

  StoreBuilder sb(*ev_);
  for (const AbducedItem& a : r.abduced) {
    if (!sb.post(a)) return std::nullopt;
  }
  if (!sb.store.feasible()) return std::nullopt;
  if (!solve) return r;

  fd::SolveStats st;
  auto lab = fd::solve_best(sb.store, &st, opts_.solver);
  stats_.solver_nodes += st.nodes;
  stats_.labelings += st.leaves;
  if (!lab) return std::nullopt;
  r.log_prob += lab->log_prob;
  r.labels.assign(ev_->label_logp.size(), -1);
  std::vector<fd::Domain> d = sb.store.domains();
  for (const auto& [var, value] : lab->assignment) {
    if (var < r.labels.size()) r.labels[var] = value;
    d[var].assign(value);
  }
  // substitute values that the labeling pins down, e.g. a predicted output
  if (sb.store.propagate(d)) {
    std::vector<VarId> vars;
    collect_goal_vars(r.answer.to_term(), vars);
    logic::Substitution s;
    for (VarId v : vars) {
      auto it = sb.vars.find(v);
      if (it != sb.vars.end() && d[it->second].fixed()) s.bind(v, Term::integer(d[it->second].min()));
    }
    if (!s.empty()) r.answer = logic::apply(s, r.answer);
  }
  r.labeling = std::move(lab);
  return r;
}

SearchStatus Prover::prove(std::span<const Atom> goals, const Program& start, const Evidence& ev,
                           FunctionRef<bool(const ProofResult&)> on_result) {
  load_program(start);
  ev_ = &ev;
  std::vector<Frame> frames(goals.size());
  for (std::size_t i = goals.size(); i-- > 0;) {
    frames[i] = {&goals[i], i + 1 < goals.size() ? &frames[i + 1] : nullptr, 0, nullptr};
  }
  const Atom& first = goals.empty() ? Atom() : goals[0];
  bool stopped_by_caller = false;
  run(goals.empty() ? nullptr : &frames[0], [&] {
    auto r = close_example(first, 0, opts_.solve_labels);
    if (!r) return true;
    if (opts_.prune && (!incumbent_ || r->log_prob > *incumbent_)) incumbent_ = r->log_prob;
    r->metasubs = current_metasubs();
    for (const auto& [s, _] : invented_) r->invented.push_back(s);
    if (!on_result(*r)) {
      stopped_by_caller = true;
      return false;
    }
    return true;
  });
  ev_ = nullptr;
  if (stats_.budget_exceeded) return SearchStatus::BudgetExceeded;
  return stopped_by_caller ? SearchStatus::Stopped : SearchStatus::Complete;
}

std::optional<ProofResult> Prover::best(const Program& p, const Example& ex, SearchStatus* status) {
  const bool saved = opts_.allow_new_clauses;
  opts_.allow_new_clauses = false;
  std::optional<ProofResult> best;
  const Atom goals[] = {ex.goal};
  const SearchStatus st = prove(goals, p, ex.evidence, [&](const ProofResult& r) {
    if (!best || r.log_prob > best->log_prob) best = r;
    return true;
  });
  opts_.allow_new_clauses = saved;
  if (status) *status = st;
  return best;
}

SearchStatus Prover::programs(std::span<const Example> examples, FunctionRef<bool(const Program&)> on_program) {
  load_program(Program());
  bool stopped_by_caller = false;
  auto rec = [&](auto&& self, std::size_t i) -> bool {
    if (i == examples.size()) {
      std::vector<Symbol> inv;
      for (const auto& [s, _] : invented_) inv.push_back(s);
      if (!on_program(Program(current_metasubs(), lang_.metarules, inv))) {
        stopped_by_caller = true;
        return false;
      }
      return true;
    }
    const Evidence* saved_ev = ev_;
    const std::size_t saved_start = example_start_;
    ev_ = &examples[i].evidence;
    example_start_ = abduced_.size();
    const Frame f{&examples[i].goal, nullptr, 0, nullptr};
    const bool go_on = run(&f, [&] {
      if (!close_example(examples[i].goal, example_start_, false)) return true;
      return self(self, i + 1);
    });
    ev_ = saved_ev;
    example_start_ = saved_start;
    return go_on;
  };
  const bool saved_prune = opts_.prune;
  opts_.prune = false;
  rec(rec, 0);
  opts_.prune = saved_prune;
  if (stats_.budget_exceeded) return SearchStatus::BudgetExceeded;
  return stopped_by_caller ? SearchStatus::Stopped : SearchStatus::Complete;
}

}  // namespace metaabd::mil
