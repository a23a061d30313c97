#include "metaabd/mil/metarule.hpp"

#include <algorithm>
#include <stdexcept>

#include "metaabd/logic/parser.hpp"

namespace metaabd::mil {
namespace {

constexpr std::string_view kDefaults =
    "% name, existential predicate variables, head, body\n"
    "metarule(identity1, [P,Q], [P,A], [[Q,A]]).\n"
    "metarule(tailrec1, [P,Q], [P,A], [[Q,A,B],[P,B]]).\n"
    "metarule(chain1, [P,Q,R], [P,A], [[Q,A,B],[R,B]]).\n"
    "metarule(precon, [P,Q,R], [P,A,B], [[Q,A],[R,A,B]]).\n"
    "metarule(identity2, [P,Q], [P,A,B], [[Q,A,B]]).\n"
    "metarule(conj, [P,Q,R], [P,A,B], [[Q,A,B],[R,A,B]]).\n"
    "metarule(tripost, [P,Q,R], [P,A,B], [[Q,A,B,C],[R,C]]).\n"
    "metarule(postcon, [P,Q,R], [P,A,B], [[Q,A,B],[R,B]]).\n"
    "metarule(chain, [P,Q,R], [P,A,B], [[Q,A,C],[R,C,B]]).\n";

logic::Atom atom_from_list(const logic::Term& t, const std::string& where) {
  auto items = logic::list_elements(t);
  if (!items || items->empty() || !(*items)[0].is_var()) {
    throw std::invalid_argument(where + ": expected [PredVar, Args...], got " + logic::to_string(t));
  }
  return logic::Atom((*items)[0], std::vector<logic::Term>(items->begin() + 1, items->end()));
}

}  // namespace

bool Metarule::is_existential(logic::VarId v) const {
  return std::find(existentials.begin(), existentials.end(), v) != existentials.end();
}

std::vector<Metarule> parse_metarules(std::string_view text) {
  std::vector<Metarule> out;
  for (const logic::Clause& c : logic::parse_clauses(text)) {
    const logic::Atom& a = c.head;
    if (!c.body.empty() || a.predicate.symbol().name() != "metarule" || a.args.size() < 3 || a.args.size() > 4) {
      throw std::invalid_argument("not a metarule entry: " + logic::to_string(c));
    }
    Metarule m;
    std::size_t at = 0;
    if (a.args.size() == 4) {
      if (!a.args[0].is_sym()) throw std::invalid_argument("metarule name must be a symbol");
      m.name = a.args[0].symbol().name();
      at = 1;
    } else {
      m.name = "m" + std::to_string(out.size() + 1);
    }
    auto exist = logic::list_elements(a.args[at]);
    if (!exist) throw std::invalid_argument(m.name + ": existentials must be a list");
    for (const logic::Term& v : *exist) {
      if (!v.is_var()) throw std::invalid_argument(m.name + ": existentials must be variables");
      m.existentials.push_back(v.var_id());
    }
    m.clause.head = atom_from_list(a.args[at + 1], m.name);
    auto body = logic::list_elements(a.args[at + 2]);
    if (!body || body->empty()) throw std::invalid_argument(m.name + ": body must be a nonempty list");
    for (const logic::Term& b : *body) m.clause.body.push_back(atom_from_list(b, m.name));

    if (!m.is_existential(m.clause.head.predicate.var_id())) {
      throw std::invalid_argument(m.name + ": head predicate must be existential");
    }
    for (const logic::Atom& b : m.clause.body) {
      if (!m.is_existential(b.predicate.var_id())) {
        throw std::invalid_argument(m.name + ": body predicate variable not declared existential");
      }
    }
    if (std::any_of(out.begin(), out.end(), [&](const Metarule& o) { return o.name == m.name; })) {
      throw std::invalid_argument("duplicate metarule name " + m.name);
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string_view default_metarules_text() { return kDefaults; }

const std::vector<Metarule>& default_metarules() {
  static const std::vector<Metarule> rules = parse_metarules(kDefaults);
  return rules;
}

std::vector<Metarule> select_metarules(const std::vector<Metarule>& all, const std::vector<std::string>& names) {
  for (const std::string& n : names) {
    if (std::none_of(all.begin(), all.end(), [&](const Metarule& m) { return m.name == n; })) {
      throw std::invalid_argument("unknown metarule " + n);
    }
  }
  std::vector<Metarule> out;
  for (const Metarule& m : all) {
    if (std::find(names.begin(), names.end(), m.name) != names.end()) out.push_back(m);
  }
  return out;
}

std::string to_string(const Metarule& m) {
  // P(A,B):-Q(A,C),R(C,B) style, existentials named P, Q, R by position
  std::string out = m.name + ": ";
  out += logic::to_string(m.clause);
  return out;
}

}  // namespace metaabd::mil
