#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "metaabd/logic/kb.hpp"
#include "metaabd/mil/metarule.hpp"

namespace metaabd::mil {

enum class AbducibleKind {
  Add,       // add([X,Y|T],[N|T]) abduces X+Y#=N
  Mul,       // mult([X,Y|T],[N|T]) abduces X*Y#=N
  Eq,        // eq([X|T],[N|T]) abduces X#=N
  PairFact,  // nn_pred([X,Y|_]) abduces the probabilistic fact nn_pred(X,Y)
};

struct Abducible {
  logic::Symbol name;
  std::size_t arity;
  AbducibleKind kind;
  logic::PredKey key() const { return {name, arity}; }
};

// What induction may use: predicates to learn, background predicates allowed
// in clause bodies, abducibles and metarules.
struct Language {
  std::vector<logic::PredKey> targets;
  std::vector<logic::PredKey> primitives;
  std::vector<Abducible> abducibles;
  std::vector<Metarule> metarules;
  std::string invent_base;  // defaults to the first target's name
  // Learned predicates reused as background knowledge. Each call must cover
  // the items in its own arguments, as it did when it was learned.
  std::vector<logic::PredKey> covered_calls;

  const Abducible* abducible(const logic::PredKey& k) const;
  bool is_target(const logic::PredKey& k) const;
  bool is_covered_call(const logic::PredKey& k) const;
  bool uses_constraints() const;
};

// Item symbols x0, x1, ... stand for the perceived inputs of one example.
logic::Symbol item_symbol(std::size_t i);
std::optional<std::size_t> item_index(logic::Symbol s);

// Per-example perception output, all in log space.
struct Evidence {
  // label_logp[i][v]: log P(item i has label v); used by constraint abducibles
  std::vector<std::vector<double>> label_logp;
  // pair_logp[i][j]: log P(nn_pred(item i, item j)); used by pair facts
  std::vector<std::vector<double>> pair_logp;
  std::int64_t value_max = 0;  // upper bound for intermediate results

  std::size_t items() const { return std::max(label_logp.size(), pair_logp.size()); }
};

struct Example {
  logic::Atom goal;  // e.g. f([x0,x1,x2],6)
  Evidence evidence;
};

}  // namespace metaabd::mil
