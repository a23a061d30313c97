#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "metaabd/logic/kb.hpp"
#include "metaabd/mil/language.hpp"

namespace metaabd::tasks {

enum class TaskId { Sum, Product, SortedConcept, Bogosort };

enum class LabelArity {
  Monadic,  // one class label per item (digits)
  Dyadic,   // a binary relation between two items
};

struct TaskSpec {
  TaskId id;
  logic::KnowledgeBase kb;
  mil::Language lang;
  LabelArity arity = LabelArity::Monadic;
  std::size_t classes = 10;   // perception output size
  std::size_t max_clauses = 2;
  logic::Symbol target;       // f or s
};

std::string_view to_string(TaskId id);
std::optional<TaskId> parse_task_id(std::string_view s);

// Throws std::invalid_argument for unknown ids.
TaskSpec make_task(TaskId id);
TaskSpec make_task(std::string_view id);

// Installs learned clauses (e.g. the sortedness check) as interpreted
// background knowledge usable from clause bodies.
void install_program(TaskSpec& spec, const std::vector<logic::Clause>& clauses);

// Largest intermediate value a sequence of `length` digits can produce.
std::int64_t value_max(TaskId id, std::size_t length, std::size_t classes = 10);

}  // namespace metaabd::tasks
