#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "metaabd/logic/kb.hpp"

namespace metaabd::logic {

struct DeduceOptions {
  std::size_t depth_limit = 512;  // nested clause resolutions along one branch
  bool occurs_check = true;
  std::uint64_t max_steps = 0;    // 0: unbounded
};

// Depth-first SLD resolution in clause order, on a caller-owned binding store.
// The same Deducer may be reused; counters accumulate.
class Deducer {
 public:
  explicit Deducer(const KnowledgeBase& kb, DeduceOptions opts = {}) : kb_(kb), opts_(opts) {}

  // Calls k once per proof of the conjunction, bindings in place. Returns
  // false iff k asked to stop. Branches cut by the depth or step limit are
  // treated as failures and flagged via resource_exceeded().
  bool solve(std::span<const Atom> goals, Bindings& b, Continuation k);

  std::uint64_t steps() const { return steps_; }
  bool resource_exceeded() const { return exceeded_; }
  void reset_counters() {
    steps_ = 0;
    exceeded_ = false;
  }
  const KnowledgeBase& kb() const { return kb_; }
  const DeduceOptions& options() const { return opts_; }

 private:
  struct Frame;
  bool run(const Frame* goals, Bindings& b, Continuation k);

  const KnowledgeBase& kb_;
  DeduceOptions opts_;
  std::uint64_t steps_ = 0;
  bool exceeded_ = false;
};

struct DeduceResult {
  std::vector<Substitution> solutions;  // restricted to the goal's variables
  bool resource_exceeded = false;
};

DeduceResult deduce(const Atom& goal, const KnowledgeBase& kb, std::size_t depth_limit = 512,
                    std::size_t max_solutions = std::numeric_limits<std::size_t>::max());

}  // namespace metaabd::logic
