#include "metaabd/em/bench.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <stdexcept>

namespace metaabd::em {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t cost(const mil::SearchStats& s) { return s.nodes + s.solver_nodes; }

struct Candidate {
  std::vector<std::int64_t> labels;
  double log_prob;
};

// Every labeling of the example, most probable first; ties keep
// lexicographic order.
std::vector<Candidate> ranked_labelings(const mil::Evidence& ev, std::size_t classes) {
  const std::size_t n = ev.label_logp.size();
  std::vector<Candidate> out;
  std::vector<std::int64_t> z(n, 0);
  while (true) {
    double lp = 0.0;
    for (std::size_t i = 0; i < n; ++i) lp += ev.label_logp[i][static_cast<std::size_t>(z[i])];
    out.push_back({z, lp});
    std::size_t i = n;
    while (i > 0 && ++z[i - 1] == static_cast<std::int64_t>(classes)) z[--i] = 0;
    if (i == 0) break;
  }
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
  return out;
}

std::vector<std::vector<std::string>> combinations(const std::vector<std::string>& names, std::size_t k) {
  std::vector<std::vector<std::string>> out;
  if (k > names.size()) return out;
  std::vector<bool> pick(names.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<std::string> c;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (pick[i]) c.push_back(names[i]);
    }
    out.push_back(std::move(c));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

}  // namespace

std::vector<AbductionBatchReport> bench_abduction(const tasks::TaskSpec& t, const tasks::Perception& model,
                                                  const std::vector<std::vector<const tasks::Sequence*>>& batches,
                                                  const AbductionBenchOptions& opts) {
  if (t.arity != tasks::LabelArity::Monadic) throw std::invalid_argument("abduction bench needs a digit task");
  mil::InduceOptions io;
  io.max_clauses = opts.max_clauses;
  io.prove.node_budget = opts.node_budget;
  mil::ProveOptions po = io.prove;
  po.max_clauses = opts.max_clauses;

  std::vector<AbductionBatchReport> out;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    AbductionBatchReport rep;
    rep.batch = b;
    std::vector<mil::Example> soft;
    for (const tasks::Sequence* s : batches[b]) {
      soft.push_back({tasks::make_goal(t, *s), tasks::model_evidence(t, model, *s)});
    }

    auto start = Clock::now();
    const auto induced = mil::induce(t.kb, t.lang, soft, io);
    rep.h_to_z.seconds = since(start);
    rep.h_to_z.found = induced.best.has_value();
    rep.h_to_z.labelings = induced.stats.search.labelings;
    rep.h_to_z.nodes = cost(induced.stats.search);

    start = Clock::now();
    mil::Prover prover(t.kb, t.lang, po);
    std::vector<mil::Example> hard;
    bool all_found = true;
    for (const mil::Example& ex : soft) {
      std::size_t space = 1;
      for (std::size_t i = 0; i < ex.evidence.label_logp.size(); ++i) {
        space *= t.classes;
        if (space > opts.max_label_space) throw std::invalid_argument("label space too large to enumerate");
      }
      bool found = false;
      for (const Candidate& c : ranked_labelings(ex.evidence, t.classes)) {
        ++rep.z_to_h.labelings;
        mil::Example fixed{ex.goal, mil::one_hot_evidence(c.labels, t.classes, ex.evidence.value_max)};
        const mil::Example one[] = {fixed};
        prover.programs(one, [&](const mil::Program&) {
          found = true;
          return false;
        });
        rep.z_to_h.nodes += cost(prover.stats());
        prover.reset_stats();
        if (found) {
          hard.push_back(std::move(fixed));
          break;
        }
      }
      all_found = all_found && found;
    }
    if (all_found) {
      const auto fixed = mil::induce(t.kb, t.lang, hard, io);
      rep.z_to_h.nodes += cost(fixed.stats.search);
      rep.z_to_h.found = fixed.best.has_value();
    }
    rep.z_to_h.seconds = since(start);
    out.push_back(rep);
  }
  return out;
}

std::vector<MetaruleSizeReport> bench_metarules(const tasks::TaskSpec& t, const tasks::Dataset& examples,
                                                const std::vector<std::size_t>& sizes,
                                                const MetaruleBenchOptions& opts) {
  if (examples.examples.empty()) throw std::invalid_argument("metarule bench needs examples");
  std::vector<mil::Example> batch;
  for (const tasks::Sequence& s : examples.examples) batch.push_back({tasks::make_goal(t, s), tasks::truth_evidence(t, s)});
  std::vector<std::string> names;
  for (const auto& m : t.lang.metarules) names.push_back(m.name);

  mil::InduceOptions io;
  io.max_clauses = opts.max_clauses;
  io.prove.node_budget = opts.node_budget;
  std::mt19937_64 rng(opts.seed);

  std::vector<MetaruleSizeReport> out;
  for (std::size_t k : sizes) {
    if (k == 0 || k > names.size()) {
      throw std::invalid_argument("subset size " + std::to_string(k) + " outside 1.." + std::to_string(names.size()));
    }
    auto subsets = combinations(names, k);
    if (opts.max_subsets && subsets.size() > opts.max_subsets) {
      std::shuffle(subsets.begin(), subsets.end(), rng);
      subsets.resize(opts.max_subsets);
    }
    MetaruleSizeReport rep;
    rep.size = k;
    for (const auto& subset : subsets) {
      const tasks::TaskSpec restricted = restrict_metarules(t, subset);
      const auto start = Clock::now();
      const auto r = mil::induce(restricted.kb, restricted.lang, batch, io);
      MetaruleRun run;
      run.metarules = subset;
      run.seconds = since(start);
      run.nodes = cost(r.stats.search);
      run.found = r.best.has_value() && r.status == mil::SearchStatus::Complete;
      if (run.found) {
        run.program = r.best->program.text();
        rep.worst_nodes = std::max(rep.worst_nodes, run.nodes);
        rep.worst_seconds = std::max(rep.worst_seconds, run.seconds);
      } else {
        ++rep.failures;
      }
      rep.runs.push_back(std::move(run));
    }
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace metaabd::em
