#include "metaabd/tasks/task.hpp"

#include <limits>
#include <set>
#include <stdexcept>

#include "metaabd/logic/parser.hpp"
#include "metaabd/mil/metarule.hpp"

namespace metaabd::tasks {
namespace {

using logic::PredKey;
using logic::Symbol;

constexpr std::string_view kListBk =
    "head([H|_],H).\n"
    "tail([_|T],T).\n"
    "empty([]).\n";

// permutation generation over the index list 1..N; numlist stands in for
// the findall/between idiom
constexpr std::string_view kPermuteBk =
    "permute(L1,O,L2) :- length(L1,N), numlist(1,N,O1), permutation(O1,O), length(L2,N), permute1(L1,O,L2).\n"
    "permute1([],[],_).\n"
    "permute1([S|List],[O|Os],List2) :- nth1(O,List2,S), permute1(List,Os,List2).\n";

PredKey key(std::string_view name, std::size_t arity) { return {Symbol::intern(name), arity}; }

mil::Abducible abducible(std::string_view name, std::size_t arity, mil::AbducibleKind kind) {
  return {Symbol::intern(name), arity, kind};
}

void load(logic::KnowledgeBase& kb, std::string_view text) {
  for (logic::Clause& c : logic::parse_clauses(text)) kb.add_clause(std::move(c));
}

}  // namespace

std::string_view to_string(TaskId id) {
  switch (id) {
    case TaskId::Sum: return "sum";
    case TaskId::Product: return "product";
    case TaskId::SortedConcept: return "sorted_concept";
    case TaskId::Bogosort: return "bogosort";
  }
  return "?";
}

std::optional<TaskId> parse_task_id(std::string_view s) {
  for (TaskId id : {TaskId::Sum, TaskId::Product, TaskId::SortedConcept, TaskId::Bogosort}) {
    if (s == to_string(id)) return id;
  }
  return std::nullopt;
}

TaskSpec make_task(TaskId id) {
  TaskSpec t{id, logic::KnowledgeBase::with_standard_builtins(), {}, LabelArity::Monadic, 10, 2, {}};
  load(t.kb, kListBk);
  t.lang.metarules = mil::default_metarules();
  t.lang.primitives = {key("head", 2), key("tail", 2), key("empty", 1)};
  switch (id) {
    case TaskId::Sum:
    case TaskId::Product:
      t.target = Symbol::intern("f");
      t.lang.targets = {key("f", 2)};
      t.lang.abducibles = {abducible(id == TaskId::Sum ? "add" : "mult", 2,
                                     id == TaskId::Sum ? mil::AbducibleKind::Add : mil::AbducibleKind::Mul),
                           abducible("eq", 2, mil::AbducibleKind::Eq)};
      break;
    case TaskId::SortedConcept:
      t.target = Symbol::intern("s");
      t.lang.targets = {key("s", 1)};
      t.lang.abducibles = {abducible("nn_pred", 1, mil::AbducibleKind::PairFact)};
      t.arity = LabelArity::Dyadic;
      t.classes = 2;
      t.max_clauses = 3;
      break;
    case TaskId::Bogosort:
      load(t.kb, kPermuteBk);
      t.target = Symbol::intern("f");
      t.lang.targets = {key("f", 2)};
      t.lang.primitives.push_back(key("permute", 3));
      t.lang.abducibles = {abducible("nn_pred", 1, mil::AbducibleKind::PairFact)};
      t.arity = LabelArity::Dyadic;
      t.classes = 2;
      t.max_clauses = 3;
      break;
  }
  t.lang.invent_base = t.target.name();
  return t;
}

TaskSpec make_task(std::string_view id) {
  auto parsed = parse_task_id(id);
  if (!parsed) throw std::invalid_argument("unknown task '" + std::string(id) + "'");
  return make_task(*parsed);
}

void install_program(TaskSpec& spec, const std::vector<logic::Clause>& clauses) {
  std::set<PredKey> heads;
  for (const logic::Clause& c : clauses) {
    spec.kb.add_clause(c);
    heads.insert(c.head.key());
  }
  // only the top-level predicates become callable primitives
  for (const PredKey& k : heads) {
    bool called_elsewhere = false;
    for (const logic::Clause& c : clauses) {
      if (c.head.key() == k) continue;
      for (const logic::Atom& a : c.body) {
        if (a.predicate.is_sym() && a.key() == k) called_elsewhere = true;
      }
    }
    if (!called_elsewhere && !spec.lang.is_target(k)) {
      spec.lang.primitives.push_back(k);
      spec.lang.covered_calls.push_back(k);
    }
  }
}

std::int64_t value_max(TaskId id, std::size_t length, std::size_t classes) {
  const std::int64_t top = static_cast<std::int64_t>(classes) - 1;
  if (id == TaskId::Product) {
    std::int64_t v = 1;
    for (std::size_t i = 0; i < length; ++i) {
      if (v > std::numeric_limits<std::int64_t>::max() / 4 / std::max<std::int64_t>(top, 1)) {
        return std::numeric_limits<std::int64_t>::max() / 4;
      }
      v *= std::max<std::int64_t>(top, 1);
    }
    return v;
  }
  return top * static_cast<std::int64_t>(std::max<std::size_t>(length, 1));
}

}  // namespace metaabd::tasks
