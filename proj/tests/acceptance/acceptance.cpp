// End-to-end acceptance checks. Prints one PASS/FAIL line per check and
// exits non-zero if any fails. Pass check names as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "metaabd/cli/run_config.hpp"
#include "metaabd/em/bench.hpp"
#include "metaabd/fd/store.hpp"
#include "metaabd/tasks/evaluate.hpp"

using namespace metaabd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// [em] settings of a shipped config, so the checks run what users run.
em::EMConfig shipped(const std::string& file, std::size_t stage = 0) {
  std::ifstream in(fs::path(METAABD_CONFIG_DIR) / file);
  if (!in) throw std::runtime_error("cannot open config " + file);
  std::stringstream text;
  text << in.rdbuf();
  return cli::parse_run_config(text.str()).stages.at(stage).em;
}

tasks::Dataset generate(const tasks::DigitGenerator& gen, tasks::TaskId id, std::size_t count, std::size_t min_len,
                        std::size_t max_len, std::uint64_t seed) {
  tasks::GenOptions o;
  o.count = count;
  o.min_len = min_len;
  o.max_len = max_len;
  o.min_digit = id == tasks::TaskId::Product ? 1 : 0;
  o.seed = seed;
  return tasks::gen_sequences(gen, id, o);
}

std::vector<mil::Example> exact_examples(const tasks::TaskSpec& t, const tasks::Dataset& d) {
  std::vector<mil::Example> out;
  for (const auto& s : d.examples) out.push_back({tasks::make_goal(t, s), tasks::truth_evidence(t, s)});
  return out;
}

mil::Program fold_program(const char* op) {
  const auto f = logic::Symbol::intern("f");
  return mil::Program({{"chain", {f, logic::Symbol::intern(op), f}},
                       {"chain", {f, logic::Symbol::intern(op), logic::Symbol::intern("head")}}},
                      mil::default_metarules());
}

// Program induced from 20 exactly labelled examples.
struct Induced {
  std::optional<mil::Program> program;
  double seconds = 0.0;
};

Induced induce_fold(tasks::TaskId id) {
  const auto t = tasks::make_task(id);
  tasks::DigitGenerator gen(10, 4, 0.0, 1);
  const auto d = generate(gen, id, 20, 2, 5, id == tasks::TaskId::Product ? 3 : 2);
  mil::InduceOptions o;
  o.max_clauses = 2;
  const auto t0 = Clock::now();
  auto out = mil::induce(t.kb, t.lang, exact_examples(t, d), o);
  Induced r;
  r.seconds = since(t0);
  if (out.best) r.program = out.best->program;
  return r;
}

Outcome fd_oracle() {
  std::mt19937_64 rng(777);
  std::size_t stores = 0, feasible = 0, mismatches = 0;
  const auto t0 = Clock::now();
  for (; stores < 1000; ++stores) {
    const oracle::Problem p = oracle::random_problem(rng);
    const fd::ConstraintStore s = oracle::build(p);
    const auto expect = oracle::best_answer(p);
    const auto got = fd::solve_best(s);
    if (expect.has_value() != got.has_value()) {
      ++mismatches;
      continue;
    }
    if (!expect) continue;
    ++feasible;
    std::vector<std::int64_t> values;
    for (const auto& [_, v] : got->assignment) values.push_back(v);
    if (values != expect->values || std::abs(got->log_prob - expect->log_prob) > 1e-12 ||
        fd::solve_all(s).labelings.size() != oracle::all_answers(p).size()) {
      ++mismatches;
    }
  }
  const double secs = since(t0);
  return {mismatches == 0 && secs < 30.0,
          std::to_string(stores) + " stores (" + std::to_string(feasible) + " feasible), " +
              std::to_string(mismatches) + " mismatches, " + fmt("%.2f s", secs)};
}

Outcome entailment_table() {
  struct Row {
    bool product;
    std::vector<std::int64_t> digits;
    std::int64_t y;
    bool entailed;
  };
  const std::vector<Row> table = {
      {false, {2, 9, 4, 3, 6}, 24, true},     {true, {9, 4, 8, 6}, 1728, true},
      {false, {8, 9, 3, 4, 8}, 32, true},     {true, {9, 2, 4, 8}, 578, false},
      {false, {3, 6, 0, 5, 6, 7}, 0, false},  {true, {3, 6}, 18, true},
      {false, {5, 5, 3, 5, 6}, 24, true},     {true, {6, 4, 7, 4, 4}, 2688, true},
      {false, {3, 0}, 6, false},              {true, {6, 7, 2, 6, 4, 4}, 29, false},
      {false, {5, 2, 3, 5, 7}, 22, true},     {true, {3, 5, 7, 6, 6, 8}, 30240, true},
      {false, {2, 5, 3}, 10, true},           {true, {2, 2, 3, 1, 3, 8}, 290, false},
      {false, {3, 1, 3, 4}, 36, false},       {true, {8, 5, 8}, 320, true},
      {false, {6, 6, 3, 1, 4, 4}, 24, true},  {true, {3, 5, 9, 2}, 270, true},
      {false, {3, 3, 6, 2, 8}, 24, false},    {true, {6, 1, 9, 7}, 23, false},
      {false, {1, 3}, 4, true},               {true, {9, 3}, 27, true},
      {false, {9, 1, 8}, 18, true},           {true, {4, 8, 3}, 98, false},
      {false, {2, 9}, 18, false},             {true, {9, 1}, 9, true},
      {false, {1, 8, 2, 8, 5, 0}, 24, true},  {true, {5, 1}, 5, true},
      {false, {0, 1, 9}, 12, false},          {true, {4, 4, 8, 3, 8, 6}, 33, false},
      {false, {7, 7, 3, 6}, 23, true},        {true, {8, 7, 3, 4, 3, 5}, 10080, true},
      {false, {3, 2, 5, 7, 0}, 17, true},     {true, {6, 1}, 8, false},
      {false, {6, 0, 3, 9, 7, 8}, 0, false},  {true, {9, 1, 7, 6, 1}, 378, true},
      {false, {5, 8, 4, 2, 3, 9}, 31, true},  {true, {7, 2}, 14, true},
      {false, {2, 0, 5}, 10, false},          {true, {8, 3, 6, 8}, 25, false},
      {false, {7, 9, 5, 2, 0}, 23, true},     {true, {2, 6}, 12, true},
      {false, {2, 8, 1, 0, 6}, 17, true},     {true, {5, 4}, 21, false},
      {false, {8, 9, 2, 3}, 432, false},      {true, {2, 7, 2, 5, 7, 9}, 8820, true},
      {false, {3, 0, 8}, 11, true},           {true, {4, 7}, 28, true},
      {false, {9, 6, 7, 9, 2, 3}, 39, false}, {true, {6, 8, 2, 7}, 23, false},
  };
  const auto sum = tasks::make_task(tasks::TaskId::Sum);
  const auto prod = tasks::make_task(tasks::TaskId::Product);
  const auto sum_p = fold_program("add"), prod_p = fold_program("mult");
  std::size_t agree = 0;
  const auto t0 = Clock::now();
  for (const Row& r : table) {
    const auto& t = r.product ? prod : sum;
    std::vector<logic::Term> items;
    for (std::size_t i = 0; i < r.digits.size(); ++i) items.push_back(logic::Term::sym(mil::item_symbol(i)));
    mil::Example ex{logic::Atom("f", {logic::Term::list(items), logic::Term::integer(r.y)}),
                    mil::one_hot_evidence(r.digits, 10, tasks::value_max(t.id, r.digits.size()))};
    if (mil::entails(t.kb, t.lang, r.product ? prod_p : sum_p, ex).entailed == r.entailed) ++agree;
  }
  const double secs = since(t0);
  return {table.size() == 50 && agree == table.size() && secs < 1.0,
          std::to_string(agree) + "/" + std::to_string(table.size()) + " agree, " + fmt("%.3f s", secs)};
}

Outcome induce_small() {
  std::string detail;
  bool pass = true;
  for (auto id : {tasks::TaskId::Sum, tasks::TaskId::Product}) {
    const Induced r = induce_fold(id);
    double acc = 0.0;
    if (r.program) {
      // the program must compute the task on fresh inputs, not just fit the 20
      tasks::DigitGenerator gen(10, 4, 0.0, 7);
      tasks::EvalOptions gt;
      gt.ground_truth = true;
      acc = tasks::evaluate(tasks::make_task(id), *r.program, {}, generate(gen, id, 50, 2, 6, 8), gt).at(0).acc;
    }
    const bool ok = r.program && r.program->size() <= 2 && acc == 1.0 && r.seconds < 60.0;
    pass = pass && ok;
    detail += std::string(tasks::to_string(id)) + ": " +
              (r.program ? std::to_string(r.program->size()) + " clauses" : std::string("none")) + ", held-out acc " +
              fmt("%.3f", acc) + " in " + fmt("%.3f s", r.seconds) + "; ";
  }
  return {pass, detail};
}

Outcome em_digits() {
  const auto t = tasks::make_task(tasks::TaskId::Sum);
  std::size_t good = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    tasks::DigitGenerator gen(10, 32, 0.36, seed);
    const auto train = generate(gen, t.id, 300, 2, 5, seed * 1000003 + 1);
    const auto val = generate(gen, t.id, 200, 2, 5, seed * 1000003 + 2);
    const auto test10 = generate(gen, t.id, 500, 10, 10, seed * 1000003 + 110);
    em::EMConfig cfg = shipped("sum.ini");
    cfg.seed = seed;
    const auto t0 = Clock::now();
    const em::EMState st = em::train(t, train, val, cfg);
    const double secs = since(t0);
    double acc = 0.0, mae = INFINITY;
    if (st.best_program) {
      acc = tasks::item_accuracy(t, st.model, test10);
      mae = tasks::evaluate(t, *st.best_program, st.model, test10).at(0).mae;
    }
    const bool ok = acc >= 0.9 && mae <= 1.0 && secs < 600.0;
    good += ok;
    detail += "seed " + std::to_string(seed) + (ok ? " ok" : " miss") + " acc " + fmt("%.3f", acc) + " mae10 " +
              fmt("%.2f", mae) + fmt(" %.0fs; ", secs);
  }
  return {good >= 4, std::to_string(good) + "/5 seeds; " + detail};
}

Outcome extrapolation() {
  const Induced sum = induce_fold(tasks::TaskId::Sum);
  const Induced prod = induce_fold(tasks::TaskId::Product);
  if (!sum.program || !prod.program) return {false, "induction failed"};
  tasks::DigitGenerator gen(10, 4, 0.1, 9);
  tasks::EvalOptions gt;
  gt.ground_truth = true;
  bool pass = true;
  std::string detail;
  auto check = [&](tasks::TaskId id, const mil::Program& p, std::size_t len) {
    const auto t = tasks::make_task(id);
    const auto m = tasks::evaluate(t, p, {}, generate(gen, id, 50, len, len, 40 + len), gt).at(0);
    const bool ok = m.acc == 1.0 && m.mae == 0.0 && m.failures == 0;
    pass = pass && ok;
    detail += std::string(tasks::to_string(id)) + "@" + std::to_string(len) + " acc " + fmt("%.3f", m.acc) + "; ";
  };
  for (std::size_t len : {5, 10, 100}) check(tasks::TaskId::Sum, *sum.program, len);
  check(tasks::TaskId::Product, *prod.program, 15);
  return {pass, detail};
}

// First epoch whose held-out accuracy is within 0.03 of the run's best.
std::size_t plateau_epoch(const em::EMState& st) {
  double best = 0.0;
  for (const auto& r : st.history) {
    if (r.batch == -1) best = std::max(best, r.perception_acc);
  }
  for (const auto& r : st.history) {
    if (r.batch == -1 && r.perception_acc >= best - 0.03) return r.epoch;
  }
  return st.epochs_run + 1;
}

Outcome warm_start() {
  const auto t = tasks::make_task(tasks::TaskId::Sum);
  double cold_sum = 0.0, warm_sum = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    tasks::DigitGenerator gen(10, 32, 0.36, seed);
    const auto train = generate(gen, t.id, 300, 2, 5, seed * 1000003 + 1);
    const auto val = generate(gen, t.id, 200, 2, 5, seed * 1000003 + 2);
    em::EMConfig cold = shipped("sum.ini");
    cold.seed = seed;
    em::EMConfig warm = cold;
    warm.pretrain = true;
    const std::size_t pc = plateau_epoch(em::train(t, train, val, cold));
    const std::size_t pw = plateau_epoch(em::train(t, train, val, warm));
    cold_sum += static_cast<double>(pc);
    warm_sum += static_cast<double>(pw);
    detail += "seed " + std::to_string(seed) + " warm " + std::to_string(pw) + " cold " + std::to_string(pc) + "; ";
  }
  return {warm_sum < cold_sum, "mean plateau epoch warm " + fmt("%.2f", warm_sum / 3) + ", cold " +
                                   fmt("%.2f", cold_sum / 3) + "; " + detail};
}

Outcome curriculum() {
  tasks::DigitGenerator gen(10, 32, 0.25, 1);
  const auto all = generate(gen, tasks::TaskId::Bogosort, 3000, 2, 5, 11);
  const auto val = generate(gen, tasks::TaskId::Bogosort, 300, 2, 5, 12);
  em::Stage s1{tasks::TaskId::SortedConcept, shipped("sorting.ini", 0), tasks::sorted_subset(all, 19), {}, 0};
  em::Stage s2{tasks::TaskId::Bogosort, shipped("sorting.ini", 1), all, val, 0};
  const auto t0 = Clock::now();
  const auto st = em::run_curriculum({s1, s2});
  const double secs = since(t0);
  if (!st[0].best_program || !st[1].best_program) return {false, "a stage learned no program"};
  const bool one_invented = st[0].best_program->invented().size() == 1;
  const auto t = em::stage_task(tasks::TaskId::Bogosort, {st[0]}, true);
  tasks::EvalOptions gt;
  gt.ground_truth = true;
  const double exact = tasks::evaluate(t, *st[1].best_program, {}, val, gt).at(0).perm_acc;
  const auto m3 = tasks::evaluate(t, *st[1].best_program, st[1].model, generate(gen, t.id, 300, 3, 3, 13)).at(0);
  const auto m5 = tasks::evaluate(t, *st[1].best_program, st[1].model, generate(gen, t.id, 300, 5, 5, 15)).at(0);
  const bool pass = s1.train.examples.size() < 20 && one_invented && exact == 1.0 && m3.perm_acc >= 0.9 &&
                    m5.elem_acc >= 0.9 && secs < 900.0;
  return {pass, std::to_string(s1.train.examples.size()) + " sorted examples, " +
                    std::to_string(st[0].best_program->invented().size()) + " invented; ground-truth perm " +
                    fmt("%.3f", exact) + "; perm@3 " + fmt("%.3f", m3.perm_acc) + ", elem@5 " +
                    fmt("%.3f", m5.elem_acc) + fmt(", %.0f s", secs)};
}

Outcome abduction_order() {
  const auto t = tasks::make_task(tasks::TaskId::Sum);
  tasks::DigitGenerator gen(10, 32, 0.36, 1);
  const auto pool = generate(gen, t.id, 160, 4, 4, 2);
  std::vector<std::vector<const tasks::Sequence*>> batches(20);
  for (std::size_t i = 0; i < pool.examples.size(); ++i) batches[i / 8].push_back(&pool.examples[i]);
  const auto model = tasks::make_perception(t, 32, 64, 1);
  const auto rows = em::bench_abduction(t, model, batches);
  std::size_t wins = 0;
  for (const auto& r : rows) wins += r.h_to_z.found && r.h_to_z.labelings < r.z_to_h.labelings;
  return {rows.size() >= 20 && wins == rows.size(),
          "H->z examined fewer labelings on " + std::to_string(wins) + "/" + std::to_string(rows.size()) + " batches"};
}

Outcome grad_check() {
  double worst = 0.0;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  auto random_item = [&] {
    nn::Vector x(32);
    for (auto& v : x) v = g(rng);
    return x;
  };
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const nn::MLP digits({32, 64, 10}, seed);
    for (int label = 0; label < 10; ++label) worst = std::max(worst, nn::grad_check(digits, random_item(), label, 40, seed));
    const nn::DyadicModel pairs(32, 64, seed);
    for (int holds : {0, 1}) {
      worst = std::max(worst, nn::grad_check(pairs, random_item(), random_item(), holds, 40, seed));
    }
  }
  return {worst < 1e-4, "max relative error " + fmt("%.2e", worst) + " on 32-64-10 and 32-64-1 pair networks"};
}

Outcome pruning() {
  std::size_t same = 0, trials = 0;
  for (auto id : {tasks::TaskId::Sum, tasks::TaskId::Product}) {
    const auto t = tasks::make_task(id);
    tasks::DigitGenerator gen(10, 32, 0.36, 4);
    const auto d = generate(gen, id, 30, 2, 3, 5);
    const auto model = tasks::make_perception(t, 32, 64, 6);
    for (std::size_t start = 0; start + 2 <= d.examples.size(); start += 2, ++trials) {
      std::vector<mil::Example> batch;
      for (std::size_t k = start; k < start + 2; ++k) {
        const auto& s = d.examples[k];
        batch.push_back({tasks::make_goal(t, s), tasks::model_evidence(t, model, s)});
      }
      mil::InduceOptions on;
      on.max_clauses = 2;
      mil::InduceOptions off = on;
      off.branch_and_bound = false;
      off.prove.prune = false;
      const auto a = mil::induce(t.kb, t.lang, batch, on);
      const auto b = mil::induce(t.kb, t.lang, batch, off);
      if (a.best.has_value() == b.best.has_value() && (!a.best || a.best->log_score == b.best->log_score)) ++same;
    }
  }
  return {same == trials, std::to_string(same) + "/" + std::to_string(trials) + " batches score identically"};
}

Outcome metarule_order() {
  const auto t = tasks::make_task(tasks::TaskId::Sum);
  tasks::DigitGenerator gen(10, 4, 0.0, 1);
  const auto d = generate(gen, t.id, 20, 2, 5, 2);
  const auto reports = em::bench_metarules(t, d, {2, 3, 9});
  std::uint64_t n[3];
  bool found = true;
  for (std::size_t i = 0; i < 3; ++i) {
    n[i] = reports[i].worst_nodes;
    found = found && reports[i].failures < reports[i].runs.size();
  }
  return {found && n[0] < n[1] && n[1] <= n[2], "worst nodes with 2/3/9 metarules: " + std::to_string(n[0]) + " / " +
                                                     std::to_string(n[1]) + " / " + std::to_string(n[2])};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"fd_oracle", fd_oracle},
      {"entailment_table", entailment_table},
      {"induce_sum_product", induce_small},
      {"em_noisy_digits", em_digits},
      {"extrapolation", extrapolation},
      {"warm_start", warm_start},
      {"sorting_curriculum", curriculum},
      {"abduction_order", abduction_order},
      {"grad_check", grad_check},
      {"pruning_invariance", pruning},
      {"metarule_cost", metarule_order},
  };
  const std::vector<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (o.detail.size() >= 2 && o.detail.compare(o.detail.size() - 2, 2, "; ") == 0) o.detail.resize(o.detail.size() - 2);
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt("%.1f s", since(t0)) << "): " << o.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}
