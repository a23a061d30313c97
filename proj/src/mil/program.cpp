#include "metaabd/mil/program.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "metaabd/logic/parser.hpp"

namespace metaabd::mil {

logic::Clause instantiate(const Metarule& m, const std::vector<logic::Symbol>& bindings) {
  if (bindings.size() != m.existentials.size()) {
    throw std::invalid_argument("metarule " + m.name + " expects " + std::to_string(m.existentials.size()) +
                                " bindings");
  }
  auto subst = [&](const logic::Atom& a) {
    const auto it = std::find(m.existentials.begin(), m.existentials.end(), a.predicate.var_id());
    return logic::Atom(logic::Term::sym(bindings[static_cast<std::size_t>(it - m.existentials.begin())]), a.args);
  };
  logic::Clause c;
  c.head = subst(m.clause.head);
  for (const logic::Atom& b : m.clause.body) c.body.push_back(subst(b));
  return logic::rename_apart(c);
}

Program::Program(std::vector<MetaSub> metasubs, const std::vector<Metarule>& library,
                 std::vector<logic::Symbol> invented)
    : metasubs_(std::move(metasubs)), invented_(std::move(invented)) {
  std::vector<std::string> lines;
  for (const MetaSub& ms : metasubs_) {
    auto it = std::find_if(library.begin(), library.end(), [&](const Metarule& m) { return m.name == ms.metarule; });
    if (it == library.end()) throw std::invalid_argument("unknown metarule " + ms.metarule);
    clauses_.push_back(instantiate(*it, ms.bindings));
    lines.push_back(logic::to_string(clauses_.back()));
  }
  std::sort(lines.begin(), lines.end());
  for (const std::string& l : lines) canonical_ += l + "\n";
}

std::string Program::text() const {
  std::string out;
  for (const logic::Clause& c : clauses_) out += logic::to_string(c) + "\n";
  return out;
}

double prior(std::size_t c) {
  if (c == 0) throw std::invalid_argument("prior needs at least one clause");
  const double d = std::numbers::pi * static_cast<double>(c);
  return 6.0 / (d * d);
}

double log_prior(std::size_t c) { return std::log(prior(c)); }

bool simpler(const Program& a, const Program& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.canonical() < b.canonical();
}

logic::Symbol SymbolInventor::next() {
  while (true) {
    const logic::Symbol s = logic::Symbol::intern(base_ + "_" + std::to_string(++counter_));
    if (kb_ && kb_->mentions_symbol(s)) continue;
    ++issued_;
    return s;
  }
}

std::vector<logic::Clause> parse_program_clauses(std::string_view text) { return logic::parse_clauses(text); }

std::string program_file(const Program& p) {
  std::string out;
  for (const MetaSub& m : p.metasubs()) {
    out += "% metasub " + m.metarule;
    for (logic::Symbol s : m.bindings) out += " " + s.name();
    out += "\n";
  }
  if (!p.invented().empty()) {
    out += "% invented";
    for (logic::Symbol s : p.invented()) out += " " + s.name();
    out += "\n";
  }
  return out + p.text();
}

Program read_program_file(std::string_view text, const std::vector<Metarule>& library) {
  std::vector<MetaSub> subs;
  std::vector<logic::Symbol> invented;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    std::istringstream words(line);
    std::string pct, tag;
    words >> pct >> tag;
    if (pct != "%" || (tag != "metasub" && tag != "invented")) continue;
    std::vector<logic::Symbol> syms;
    std::string w;
    if (tag == "metasub") {
      if (!(words >> w)) throw std::invalid_argument("metasub line without a metarule name");
      MetaSub m{w, {}};
      while (words >> w) m.bindings.push_back(logic::Symbol::intern(w));
      subs.push_back(std::move(m));
    } else {
      while (words >> w) invented.push_back(logic::Symbol::intern(w));
    }
  }
  if (subs.empty()) throw std::invalid_argument("program file has no metasub lines");
  Program p(std::move(subs), library, std::move(invented));
  const auto clauses = logic::parse_clauses(text);
  std::string listed;
  for (const logic::Clause& c : clauses) listed += logic::to_string(c) + "\n";
  if (listed != p.text()) throw std::invalid_argument("program clauses do not match their metasubs");
  return p;
}

}  // namespace metaabd::mil
