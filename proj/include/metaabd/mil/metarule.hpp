#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "metaabd/logic/term.hpp"

namespace metaabd::mil {

// Second-order clause template. Existential variables occupy predicate
// positions and are bound to predicate symbols during induction.
struct Metarule {
  std::string name;
  std::vector<logic::VarId> existentials;
  logic::Clause clause;  // head predicate is an existential variable

  std::size_t head_arity() const { return clause.head.args.size(); }
  bool is_existential(logic::VarId v) const;
};

// Parses `metarule(Name, [P,Q], [P,A], [[Q,A,B],[P,B]]).` entries; the
// name may be omitted, in which case entries are named m1, m2, ...
// Throws std::invalid_argument on malformed entries.
std::vector<Metarule> parse_metarules(std::string_view text);

// The nine-rule library used for every task, in search order.
const std::vector<Metarule>& default_metarules();
std::string_view default_metarules_text();

// Subset by name, preserving library order. Unknown names throw.
std::vector<Metarule> select_metarules(const std::vector<Metarule>& all, const std::vector<std::string>& names);

std::string to_string(const Metarule& m);

}  // namespace metaabd::mil
