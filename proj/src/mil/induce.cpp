#include "metaabd/mil/induce.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "metaabd/util/parallel.hpp"

namespace metaabd::mil {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t goal_length(const Example& ex) {
  if (ex.goal.args.empty()) return 0;
  auto items = logic::list_elements(ex.goal.args[0]);
  return items ? items->size() : 0;
}

// One example per distinct input length: longest, shortest, then the rest
// from long to short.
std::vector<Example> structure_subset(std::span<const Example> batch, std::size_t cap) {
  std::map<std::size_t, std::size_t, std::greater<>> by_len;
  for (std::size_t i = 0; i < batch.size(); ++i) by_len.try_emplace(goal_length(batch[i]), i);
  std::vector<std::size_t> order;
  for (const auto& [_, i] : by_len) order.push_back(i);
  if (order.size() > 2) std::rotate(order.begin() + 1, order.end() - 1, order.end());
  if (cap != 0 && order.size() > cap) order.resize(cap);
  std::vector<Example> out;
  for (std::size_t i : order) out.push_back(batch[i]);
  return out;
}

bool has_duplicate_clause(const Program& p) {
  std::set<std::string> seen;
  std::istringstream in(p.canonical());
  for (std::string line; std::getline(in, line);) {
    if (!seen.insert(line).second) return true;
  }
  return false;
}

// Scores fixed programs on a batch with one prover per worker.
class Scorer {
 public:
  Scorer(const logic::KnowledgeBase& kb, const Language& lang, const InduceOptions& opts, std::size_t n)
      : opts_(opts) {
    ProveOptions po = opts.prove;
    po.allow_new_clauses = false;
    const std::size_t w = std::clamp<std::size_t>(opts.workers, 1, std::max<std::size_t>(n, 1));
    for (std::size_t i = 0; i < w; ++i) provers_.push_back(std::make_unique<Prover>(kb, lang, po));
  }

  enum class Verdict { Scored, Rejected, Abandoned };

  // `bound`: abandon as soon as the score cannot exceed it.
  Verdict run(const Program& p, std::span<const Example> batch, std::optional<double> bound, InduceResult& out,
              InduceStats& stats) {
    const double lp = log_prior(std::max<std::size_t>(p.size(), 1));
    std::vector<std::optional<ProofResult>> slots(batch.size());
    std::vector<double> partial(provers_.size(), 0.0);
    std::atomic<bool> stop{false};
    std::atomic<bool> rejected{false};
    std::atomic<bool> budget{false};
    parallel_for(batch.size(), provers_.size(), [&](std::size_t w, std::size_t i) {
      if (stop.load(std::memory_order_relaxed)) return;
      SearchStatus st = SearchStatus::Complete;
      slots[i] = provers_[w]->best(p, batch[i], &st);
      if (st == SearchStatus::BudgetExceeded) budget = true;
      if (!slots[i]) {
        rejected = true;
        stop = true;
        return;
      }
      partial[w] += slots[i]->log_prob;
      // every term is <= 0, so one worker's partial already bounds the total
      if (opts_.branch_and_bound && bound && lp + partial[w] <= *bound) stop = true;
    });
    for (auto& pr : provers_) {
      stats.search.merge(pr->stats());
      pr->reset_stats();
    }
    if (budget) out.status = SearchStatus::BudgetExceeded;
    if (rejected) return Verdict::Rejected;
    if (stop) return Verdict::Abandoned;
    out.program = p;
    out.log_score = lp;
    out.proofs.clear();
    for (auto& s : slots) {
      out.log_score += s->log_prob;
      out.proofs.push_back(std::move(*s));
    }
    return Verdict::Scored;
  }

 private:
  const InduceOptions& opts_;
  std::vector<std::unique_ptr<Prover>> provers_;
};

// Exact comparison with the tie-break: fewer clauses, then smaller text.
bool beats(const InduceResult& a, const InduceResult& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  return simpler(a.program, b.program);
}

}  // namespace

InduceOutcome induce(const logic::KnowledgeBase& kb, const Language& lang, std::span<const Example> batch,
                     const InduceOptions& opts) {
  InduceOutcome outcome;
  if (batch.empty()) return outcome;
  const std::vector<Example> subset = structure_subset(batch, opts.structure_examples);
  Scorer scorer(kb, lang, opts, batch.size());
  std::set<std::string> seen;

  for (std::size_t k = 1; k <= opts.max_clauses; ++k) {
    if (outcome.best && log_prior(k) <= outcome.best->log_score) break;
    ProveOptions po = opts.prove;
    po.max_clauses = k;
    Prover gen(kb, lang, po);
    std::vector<Program> level;
    const SearchStatus st = gen.programs(subset, [&](const Program& p) {
      if (p.size() != k || has_duplicate_clause(p)) return true;
      if (!seen.insert(p.canonical()).second) return true;
      level.push_back(p);
      return seen.size() < opts.max_candidates;
    });
    outcome.stats.search.merge(gen.stats());
    if (st != SearchStatus::Complete) outcome.status = SearchStatus::BudgetExceeded;
    outcome.stats.candidates += level.size();
    std::sort(level.begin(), level.end(),
              [](const Program& a, const Program& b) { return a.canonical() < b.canonical(); });

    for (const Program& p : level) {
      InduceResult r;
      std::optional<double> bound;
      if (outcome.best) bound = outcome.best->log_score;
      const auto v = scorer.run(p, batch, bound, r, outcome.stats);
      if (r.status == SearchStatus::BudgetExceeded) outcome.status = SearchStatus::BudgetExceeded;
      if (v == Scorer::Verdict::Abandoned) ++outcome.stats.abandoned;
      if (v != Scorer::Verdict::Scored) continue;
      ++outcome.stats.scored;
      if (!outcome.best || beats(r, *outcome.best)) outcome.best = std::move(r);
    }
    if (st == SearchStatus::Stopped) {
      outcome.status = SearchStatus::BudgetExceeded;  // candidate cap reached
      break;
    }
  }
  if (outcome.best) {
    outcome.best->status = outcome.status;
    outcome.best->stats = outcome.stats;
  }
  return outcome;
}

std::optional<InduceResult> score_program(const logic::KnowledgeBase& kb, const Language& lang, const Program& p,
                                          std::span<const Example> batch, const InduceOptions& opts) {
  Scorer scorer(kb, lang, opts, batch.size());
  InduceResult r;
  if (scorer.run(p, batch, std::nullopt, r, r.stats) != Scorer::Verdict::Scored) return std::nullopt;
  return r;
}

Evidence one_hot_evidence(std::span<const std::int64_t> labels, std::size_t classes, std::int64_t value_max) {
  Evidence ev;
  ev.value_max = value_max;
  for (std::int64_t l : labels) {
    std::vector<double> row(classes, kNegInf);
    if (l >= 0 && static_cast<std::size_t>(l) < classes) row[static_cast<std::size_t>(l)] = 0.0;
    ev.label_logp.push_back(std::move(row));
  }
  return ev;
}

EntailResult entails(const logic::KnowledgeBase& kb, const Language& lang, const Program& p, const Example& ex,
                     const ProveOptions& opts) {
  ProveOptions po = opts;
  po.allow_new_clauses = false;
  Prover prover(kb, lang, po);
  EntailResult r;
  const logic::Atom goals[] = {ex.goal};
  prover.prove(goals, p, ex.evidence, [&](const ProofResult& res) {
    if (res.log_prob == kNegInf) return true;
    r.entailed = true;
    return false;
  });
  r.resource_exceeded = !r.entailed && (prover.stats().depth_exceeded || prover.stats().budget_exceeded);
  return r;
}

std::optional<ProofResult> predict(const logic::KnowledgeBase& kb, const Language& lang, const Program& p,
                                   const Example& ex, const ProveOptions& opts) {
  ProveOptions po = opts;
  po.allow_new_clauses = false;
  Prover prover(kb, lang, po);
  return prover.best(p, ex);
}

}  // namespace metaabd::mil
