#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "metaabd/logic/term.hpp"

namespace metaabd::logic {

class KnowledgeBase;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Parses clauses in the logic program dialect:
//   head.   head :- a1, ..., an.   % comment
// Variables start uppercase or with `_`; `_` alone is anonymous.
std::vector<Clause> parse_clauses(std::string_view text);

// Parses a single term (no terminating period required).
Term parse_term(std::string_view text);

// Parses clauses into a knowledge base that carries the standard builtins.
// Defining a clause for a builtin predicate is an error.
KnowledgeBase parse_program(std::string_view text);

}  // namespace metaabd::logic
