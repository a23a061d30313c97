#include "metaabd/logic/deduce.hpp"

namespace metaabd::logic {

// Goal lists live on the C++ stack: a body's frames point at the caller's
// continuation, so nothing is copied on backtracking.
struct Deducer::Frame {
  const Atom* goal;
  const Frame* next;
  std::size_t depth;
};

bool Deducer::solve(std::span<const Atom> goals, Bindings& b, Continuation k) {
  std::vector<Frame> frames(goals.size());
  for (std::size_t i = goals.size(); i-- > 0;) {
    frames[i] = {&goals[i], i + 1 < goals.size() ? &frames[i + 1] : nullptr, 0};
  }
  return run(goals.empty() ? nullptr : &frames[0], b, k);
}

bool Deducer::run(const Frame* g, Bindings& b, Continuation k) {
  if (g == nullptr) return k();
  if (opts_.max_steps != 0 && steps_ >= opts_.max_steps) {
    exceeded_ = true;
    return true;
  }
  ++steps_;
  const Atom& goal = *g->goal;
  Term pred = b.deref(goal.predicate);
  if (!pred.is_sym()) return true;  // unbound predicate variable: nothing to call
  const PredKey key{pred.symbol(), goal.args.size()};

  if (const Builtin* fn = kb_.builtin(key)) {
    return (*fn)(goal.args, b, [&] { return run(g->next, b, k); });
  }

  auto clauses = kb_.clauses(key);
  if (clauses.empty()) return true;
  if (g->depth >= opts_.depth_limit) {
    exceeded_ = true;
    return true;
  }
  for (const Clause& stored : clauses) {
    Clause c = rename_apart(stored);
    const std::size_t m = b.mark();
    bool ok = true;
    for (std::size_t i = 0; ok && i < goal.args.size(); ++i) {
      ok = b.unify(c.head.args[i], goal.args[i], opts_.occurs_check);
    }
    if (ok) {
      std::vector<Frame> body(c.body.size());
      for (std::size_t i = c.body.size(); i-- > 0;) {
        body[i] = {&c.body[i], i + 1 < c.body.size() ? &body[i + 1] : g->next, g->depth + 1};
      }
      // the continuation frame keeps its own depth; only body goals go deeper
      if (!run(body.empty() ? g->next : &body[0], b, k)) {
        b.undo(m);
        return false;
      }
    }
    b.undo(m);
  }
  return true;
}

DeduceResult deduce(const Atom& goal, const KnowledgeBase& kb, std::size_t depth_limit,
                    std::size_t max_solutions) {
  DeduceResult out;
  if (max_solutions == 0) return out;
  std::vector<VarId> vars;
  collect_vars(goal.to_term(), vars);
  Deducer d(kb, {.depth_limit = depth_limit});
  Bindings b;
  const Atom goals[] = {goal};
  d.solve(goals, b, [&] {
    out.solutions.push_back(vars.empty() ? Substitution{} : b.export_substitution(vars));
    return out.solutions.size() < max_solutions;
  });
  out.resource_exceeded = d.resource_exceeded();
  return out;
}

}  // namespace metaabd::logic
