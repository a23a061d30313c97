#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "metaabd/logic/kb.hpp"
#include "metaabd/mil/metarule.hpp"

namespace metaabd::mil {

// Ground metarule instance; bindings follow the metarule's existential order.
struct MetaSub {
  std::string metarule;
  std::vector<logic::Symbol> bindings;
  friend bool operator==(const MetaSub&, const MetaSub&) = default;
};

class Program {
 public:
  Program() = default;
  // Throws std::invalid_argument if a metasub names an unknown metarule or
  // has the wrong number of bindings.
  Program(std::vector<MetaSub> metasubs, const std::vector<Metarule>& library,
          std::vector<logic::Symbol> invented = {});

  std::size_t size() const { return metasubs_.size(); }  // c(H)
  bool empty() const { return metasubs_.empty(); }
  const std::vector<MetaSub>& metasubs() const { return metasubs_; }
  const std::vector<logic::Clause>& clauses() const { return clauses_; }
  const std::vector<logic::Symbol>& invented() const { return invented_; }

  // One clause per line, in metasub order.
  std::string text() const;
  // Sorted clause lines; equal for programs that differ only in order.
  const std::string& canonical() const { return canonical_; }

 private:
  std::vector<MetaSub> metasubs_;
  std::vector<logic::Clause> clauses_;
  std::vector<logic::Symbol> invented_;
  std::string canonical_;
};

logic::Clause instantiate(const Metarule& m, const std::vector<logic::Symbol>& bindings);

// Prior over program size: 6 / (pi * c)^2. c must be >= 1.
double prior(std::size_t c);
double log_prior(std::size_t c);

// True when a should be preferred to b at equal score: fewer clauses, then
// the smaller canonical text.
bool simpler(const Program& a, const Program& b);

// Hands out base_1, base_2, ... skipping names the knowledge base uses.
class SymbolInventor {
 public:
  SymbolInventor(std::string base, const logic::KnowledgeBase* kb = nullptr) : base_(std::move(base)), kb_(kb) {}
  logic::Symbol next();
  std::size_t issued() const { return issued_; }

 private:
  std::string base_;
  const logic::KnowledgeBase* kb_;
  std::size_t counter_ = 0;
  std::size_t issued_ = 0;
};

// Programs written by text(): clauses one per line. Metasubs are not
// recovered; the result is usable as interpreted background knowledge.
std::vector<logic::Clause> parse_program_clauses(std::string_view text);

// Program file: "% metasub <metarule> <symbols...>" and "% invented <symbols...>"
// lines followed by the clauses. Reading rebuilds the metasubs; throws
// std::invalid_argument when they are missing or disagree with the clauses.
std::string program_file(const Program& p);
Program read_program_file(std::string_view text, const std::vector<Metarule>& library);

}  // namespace metaabd::mil
