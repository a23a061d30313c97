#include "metaabd/em/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <numeric>
#include <random>

namespace metaabd::em {
namespace {

using tasks::LabelArity;

std::vector<mil::Example> examples_for(const tasks::TaskSpec& t, const tasks::Perception& model,
                                       const std::vector<const tasks::Sequence*>& batch) {
  std::vector<mil::Example> out;
  out.reserve(batch.size());
  for (const auto* s : batch) out.push_back({tasks::make_goal(t, *s), tasks::model_evidence(t, model, *s)});
  return out;
}

// (i, j) for every abduced pair fact over items of the example
std::vector<std::pair<std::size_t, std::size_t>> pair_facts(const mil::ProofResult& p) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& a : p.abduced) {
    if (a.kind != mil::AbducibleKind::PairFact || a.args.size() != 2) continue;
    if (!a.args[0].is_sym() || !a.args[1].is_sym()) continue;
    auto i = mil::item_index(a.args[0].symbol());
    auto j = mil::item_index(a.args[1].symbol());
    if (i && j) out.emplace_back(*i, *j);
  }
  return out;
}

double normalised(const BatchResult& r) {
  const double lp = mil::log_prior(std::max<std::size_t>(r.program.size(), 1));
  return lp + (r.score - lp) / static_cast<double>(std::max<std::size_t>(r.proofs.size(), 1));
}

void pretrain(const tasks::TaskSpec& t, tasks::Perception& model, const tasks::Dataset& d, const EMConfig& cfg) {
  const std::size_t classes = t.arity == LabelArity::Monadic ? t.classes : 10;
  auto shots = few_shot_sample(d, classes, cfg.seed);
  if (t.arity == LabelArity::Monadic) {
    nn::pretrain_few_shot(model.classifier, shots, cfg.pretrain_epochs, cfg.learning_rate, cfg.seed);
    return;
  }
  std::vector<nn::Vector> a, b;
  std::vector<int> holds;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    for (std::size_t j = 0; j < shots.size(); ++j) {
      if (i == j) continue;
      a.push_back(shots[i]);
      b.push_back(shots[j]);
      holds.push_back(i > j);
    }
  }
  nn::FitOptions fo;
  fo.epochs = cfg.pretrain_epochs;
  fo.learning_rate = cfg.learning_rate;
  fo.momentum = cfg.momentum;
  fo.seed = cfg.seed;
  model.relation.fit(a, b, holds, fo);
}

void write_program(const std::filesystem::path& dir, std::size_t epoch, const mil::Program& p, double score) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / ("epoch_" + std::to_string(epoch) + ".pl"));
  out << "% normalised score " << score << "\n" << mil::program_file(p);
  if (!out) throw std::runtime_error("cannot write program to " + dir.string());
}

}  // namespace

MetricsRow refit(const tasks::TaskSpec& t, EMState& st, const tasks::Dataset& train_set, const EMConfig& cfg,
                 double learning_rate) {
  MetricsRow row;
  row.epoch = st.epochs_run;
  row.batch = -2;
  BatchResult all;
  std::vector<const tasks::Sequence*> items;
  mil::InduceOptions io = induce_options(t, cfg);
  double score = 0.0;
  for (const tasks::Sequence& s : train_set.examples) {
    const std::vector<const tasks::Sequence*> one{&s};
    const auto ex = examples_for(t, st.model, one);
    auto r = mil::score_program(t.kb, t.lang, *st.best_program, ex, io);
    if (!r) continue;
    row.nodes_explored += r->stats.search.nodes + r->stats.search.solver_nodes;
    score += r->log_score - mil::log_prior(std::max<std::size_t>(st.best_program->size(), 1));
    items.push_back(&s);
    all.proofs.push_back(std::move(r->proofs.at(0)));
  }
  row.score = items.empty() ? 0.0 : score / static_cast<double>(items.size());
  if (auto pa = pseudo_label_accuracy(t, items, all)) row.pseudo_label_acc = *pa;
  EMConfig fit_cfg = cfg;
  fit_cfg.m_epochs = cfg.refit_epochs;
  // a fresh network: the EM model has memorised its last batches
  st.model = tasks::make_perception(t, train_set.dim(), cfg.hidden, cfg.seed + 1);
  if (auto loss = m_step(t, st.model, items, all, fit_cfg, learning_rate, cfg.seed * 1000003u + 77)) row.loss = *loss;
  return row;
}

tasks::TaskSpec restrict_metarules(const tasks::TaskSpec& t, const std::vector<std::string>& names) {
  tasks::TaskSpec out = t;
  if (!names.empty()) out.lang.metarules = mil::select_metarules(t.lang.metarules, names);
  return out;
}

mil::InduceOptions induce_options(const tasks::TaskSpec& t, const EMConfig& cfg) {
  mil::InduceOptions o;
  o.max_clauses = cfg.max_clauses ? cfg.max_clauses : t.max_clauses;
  o.workers = std::max<std::size_t>(cfg.workers, 1);
  o.max_candidates = cfg.max_candidates;
  o.prove.node_budget = cfg.node_budget;
  return o;
}

std::optional<BatchResult> e_step(const tasks::TaskSpec& t, const tasks::Perception& model,
                                  const std::vector<const tasks::Sequence*>& batch, const EMConfig& cfg,
                                  mil::InduceStats* stats) {
  const auto examples = examples_for(t, model, batch);
  auto outcome = mil::induce(t.kb, t.lang, examples, induce_options(t, cfg));
  if (stats) *stats = outcome.stats;
  if (!outcome.best) return std::nullopt;
  BatchResult r;
  r.program = std::move(outcome.best->program);
  r.score = outcome.best->log_score;
  r.proofs = std::move(outcome.best->proofs);
  r.stats = outcome.stats;
  r.status = outcome.status;
  return r;
}

std::optional<double> m_step(const tasks::TaskSpec& t, tasks::Perception& model,
                             const std::vector<const tasks::Sequence*>& batch, const BatchResult& abduced,
                             const EMConfig& cfg, double learning_rate, std::uint64_t seed) {
  nn::FitOptions fo;
  fo.epochs = cfg.m_epochs;
  fo.learning_rate = learning_rate;
  fo.momentum = cfg.momentum;
  fo.weight_decay = cfg.weight_decay;
  fo.seed = seed;
  if (t.arity == LabelArity::Monadic) {
    std::vector<const nn::Vector*> xs;
    std::vector<int> labels;
    for (std::size_t e = 0; e < batch.size() && e < abduced.proofs.size(); ++e) {
      const auto& z = abduced.proofs[e].labels;
      if (z.size() != batch[e]->items.size()) continue;
      for (std::size_t i = 0; i < z.size(); ++i) {
        xs.push_back(&batch[e]->items[i]);
        labels.push_back(static_cast<int>(z[i]));
      }
    }
    if (xs.empty()) return std::nullopt;
    nn::Matrix X(static_cast<Eigen::Index>(model.classifier.input_dim()), static_cast<Eigen::Index>(xs.size()));
    for (std::size_t k = 0; k < xs.size(); ++k) X.col(static_cast<Eigen::Index>(k)) = *xs[k];
    return nn::fit(model.classifier, X, labels, fo).final_loss;
  }
  std::vector<nn::Vector> a, b;
  std::vector<int> holds;
  for (std::size_t e = 0; e < batch.size() && e < abduced.proofs.size(); ++e) {
    for (auto [i, j] : pair_facts(abduced.proofs[e])) {
      if (i >= batch[e]->items.size() || j >= batch[e]->items.size()) continue;
      a.push_back(batch[e]->items[i]);
      b.push_back(batch[e]->items[j]);
      holds.push_back(1);
    }
  }
  if (a.empty()) return std::nullopt;
  return model.relation.fit(a, b, holds, fo).final_loss;
}

std::optional<double> pseudo_label_accuracy(const tasks::TaskSpec& t,
                                            const std::vector<const tasks::Sequence*>& batch,
                                            const BatchResult& abduced) {
  std::size_t ok = 0, total = 0;
  for (std::size_t e = 0; e < batch.size() && e < abduced.proofs.size(); ++e) {
    const auto& truth = batch[e]->labels;
    if (truth.size() != batch[e]->items.size()) return std::nullopt;
    if (t.arity == LabelArity::Monadic) {
      const auto& z = abduced.proofs[e].labels;
      for (std::size_t i = 0; i < z.size() && i < truth.size(); ++i) {
        ok += z[i] == truth[i];
        ++total;
      }
    } else {
      for (auto [i, j] : pair_facts(abduced.proofs[e])) {
        if (i >= truth.size() || j >= truth.size()) continue;
        ok += truth[i] > truth[j];
        ++total;
      }
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(ok) / static_cast<double>(total);
}

std::vector<nn::Vector> few_shot_sample(const tasks::Dataset& d, std::size_t classes, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t e = 0; e < d.examples.size(); ++e) {
    if (d.examples[e].labels.size() != d.examples[e].items.size()) continue;
    for (std::size_t i = 0; i < d.examples[e].items.size(); ++i) slots.emplace_back(e, i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<nn::Vector> out(classes);
  std::vector<bool> have(classes, false);
  std::size_t found = 0;
  for (auto [e, i] : slots) {
    const int c = d.examples[e].labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= classes || have[static_cast<std::size_t>(c)]) continue;
    out[static_cast<std::size_t>(c)] = d.examples[e].items[i];
    have[static_cast<std::size_t>(c)] = true;
    if (++found == classes) return out;
  }
  throw std::runtime_error("few-shot pretraining needs a labelled item of every class; found " +
                           std::to_string(found) + " of " + std::to_string(classes));
}

void write_metrics_header(std::ostream& out) {
  out << "epoch,batch,score,pseudo_label_acc,perception_acc,loss,nodes_explored\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  // negative means "not measured" and is left blank
  auto opt = [&](double v) {
    if (v >= 0) out << v;
  };
  out << r.epoch << ',' << r.batch << ',' << r.score << ',';
  opt(r.pseudo_label_acc);
  out << ',';
  opt(r.perception_acc);
  out << ',' << r.loss << ',' << r.nodes_explored << '\n';
}

namespace {

// One EM trajectory; restarts keep several alive side by side.
struct Trajectory {
  EMState st;
  std::vector<std::size_t> order;
  std::mt19937_64 rng;
  double lr = 0.0;
  std::vector<MetricsRow> rows;  // rows not yet emitted
  std::size_t last_failed = 0;
  double last_score = -std::numeric_limits<double>::infinity();
};

// Runs one epoch; returns whether the best program improved.
bool run_epoch(const tasks::TaskSpec& t, const tasks::Dataset& train_set, const tasks::Dataset& probe,
               const EMConfig& cfg, std::uint64_t seed, Trajectory& tr, std::size_t epoch) {
  EMState& st = tr.st;
  std::shuffle(tr.order.begin(), tr.order.end(), tr.rng);
  std::size_t batches = 0, failed = 0, budget_failures = 0;
  double loss_sum = 0.0, score_sum = 0.0, pl_ok = 0.0;
  std::size_t loss_n = 0, pl_n = 0;
  std::uint64_t nodes = 0;
  bool improved = false;
  for (std::size_t start = 0; start < tr.order.size(); start += cfg.batch_size, ++batches) {
    std::vector<const tasks::Sequence*> batch;
    for (std::size_t k = start; k < std::min(tr.order.size(), start + cfg.batch_size); ++k) {
      batch.push_back(&train_set.examples[tr.order[k]]);
    }
    mil::InduceStats stats;
    auto r = e_step(t, st.model, batch, cfg, &stats);
    const std::uint64_t explored = stats.search.nodes + stats.search.solver_nodes;
    nodes += explored;
    MetricsRow row;
    row.epoch = epoch;
    row.batch = static_cast<long>(batches);
    row.nodes_explored = explored;
    if (!r) {
      ++failed;
      budget_failures += stats.search.budget_exceeded;
      row.score = -std::numeric_limits<double>::infinity();
      tr.rows.push_back(row);
      continue;
    }
    if (auto pa = pseudo_label_accuracy(t, batch, *r)) {
      row.pseudo_label_acc = *pa;
      pl_ok += *pa;
      ++pl_n;
    }
    const std::uint64_t step_seed = seed * 1000003u + epoch * 1009u + batches;
    if (auto loss = m_step(t, st.model, batch, *r, cfg, tr.lr, step_seed)) {
      row.loss = *loss;
      loss_sum += *loss;
      ++loss_n;
    }
    row.score = r->score;
    score_sum += r->score;
    const double ns = normalised(*r);
    if (ns > st.best_score) {
      st.best_score = ns;
      st.best_program = r->program;
      improved = true;
    }
    tr.rows.push_back(row);
  }
  if (failed == batches) {
    throw TrainingError("epoch " + std::to_string(epoch) + ": no program entails any batch (" +
                            std::to_string(budget_failures) + " of " + std::to_string(batches) +
                            " batches hit the node budget)",
                        budget_failures > 0);
  }
  MetricsRow summary;
  summary.epoch = epoch;
  summary.batch = -1;
  summary.score = score_sum / static_cast<double>(batches - failed);
  summary.pseudo_label_acc = pl_n ? pl_ok / static_cast<double>(pl_n) : -1;
  summary.perception_acc = tasks::item_accuracy(t, st.model, probe);
  summary.loss = loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0;
  summary.nodes_explored = nodes;
  tr.rows.push_back(summary);
  tr.last_failed = failed;
  tr.last_score = summary.score;
  st.epochs_run = epoch;
  tr.lr *= cfg.lr_decay;
  return improved;
}

// Fewer failed batches first, then the higher mean batch score.
bool fits_better(const Trajectory& a, const Trajectory& b) {
  if (a.last_failed != b.last_failed) return a.last_failed < b.last_failed;
  return a.last_score > b.last_score;
}

}  // namespace

EMState train(const tasks::TaskSpec& task, const tasks::Dataset& train_set, const tasks::Dataset& val_set,
              const EMConfig& cfg, std::optional<tasks::Perception> init, EpochHook hook) {
  const tasks::TaskSpec t = restrict_metarules(task, cfg.metarules);
  if (train_set.examples.empty()) throw std::invalid_argument("training set is empty");
  if (cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  const tasks::Dataset& probe = val_set.examples.empty() ? train_set : val_set;

  std::ofstream csv;
  if (!cfg.metrics_csv.empty()) {
    if (cfg.metrics_csv.has_parent_path()) std::filesystem::create_directories(cfg.metrics_csv.parent_path());
    csv.open(cfg.metrics_csv);
    if (!csv) throw std::runtime_error("cannot write metrics to " + cfg.metrics_csv.string());
    write_metrics_header(csv);
  }

  // restart k > 0 draws its network and M-step noise from a shifted seed;
  // restart 0 is the plain run
  auto start = [&](std::size_t k) {
    Trajectory tr;
    const std::uint64_t seed = cfg.seed + k * 7919u;
    if (init) {
      tr.st.model = *init;
    } else {
      tr.st.model = tasks::make_perception(t, train_set.dim(), cfg.hidden, seed);
    }
    if (cfg.pretrain) pretrain(t, tr.st.model, train_set, cfg);
    tr.order.resize(train_set.examples.size());
    std::iota(tr.order.begin(), tr.order.end(), 0);
    tr.rng.seed(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    tr.lr = cfg.learning_rate;
    return tr;
  };

  const std::size_t restarts = init ? 1 : std::max<std::size_t>(1, cfg.restarts);
  const std::size_t probe_epochs = restarts > 1 ? std::min(cfg.restart_epochs, cfg.epochs) : 0;
  Trajectory run;
  std::uint64_t run_seed = cfg.seed;
  std::optional<std::size_t> improved_at;
  if (probe_epochs > 0) {
    std::size_t chosen = 0;
    for (std::size_t k = 0; k < restarts; ++k) {
      Trajectory tr = start(k);
      std::optional<std::size_t> at;
      try {
        for (std::size_t e = 1; e <= probe_epochs; ++e) {
          if (run_epoch(t, train_set, probe, cfg, cfg.seed + k * 7919u, tr, e)) at = e;
        }
      } catch (const TrainingError&) {
        if (k + 1 == restarts && !run.st.best_program) throw;
        continue;
      }
      if (!run.st.best_program || fits_better(tr, run)) {
        run = std::move(tr);
        chosen = k;
        improved_at = at;
      }
    }
    run_seed = cfg.seed + chosen * 7919u;
  } else {
    run = start(0);
  }

  EMState& st = run.st;
  auto flush = [&]() {
    for (const MetricsRow& r : run.rows) {
      st.history.push_back(r);
      if (csv.is_open()) write_metrics_row(csv, r);
    }
    if (csv.is_open()) csv.flush();
    run.rows.clear();
  };
  flush();
  if (improved_at && !cfg.program_dir.empty()) write_program(cfg.program_dir, *improved_at, *st.best_program, st.best_score);
  if (probe_epochs > 0 && hook && !hook(st)) return st;

  for (std::size_t epoch = probe_epochs + 1; epoch <= cfg.epochs; ++epoch) {
    const bool improved = run_epoch(t, train_set, probe, cfg, run_seed, run, epoch);
    flush();
    if (improved && !cfg.program_dir.empty()) write_program(cfg.program_dir, epoch, *st.best_program, st.best_score);
    if (hook && !hook(st)) break;
  }
  if (cfg.refit_epochs && st.best_program) {
    MetricsRow row = refit(t, st, train_set, cfg, run.lr);
    row.perception_acc = tasks::item_accuracy(t, st.model, probe);
    st.history.push_back(row);
    if (csv.is_open()) write_metrics_row(csv, row);
  }
  return st;
}

tasks::TaskSpec stage_task(tasks::TaskId id, const std::vector<EMState>& earlier, bool reuse_programs) {
  auto t = tasks::make_task(id);
  if (!reuse_programs) return t;
  for (const auto& s : earlier) {
    if (s.best_program) tasks::install_program(t, s.best_program->clauses());
  }
  return t;
}

std::vector<EMState> run_curriculum(const std::vector<Stage>& stages, bool reuse_programs) {
  std::vector<EMState> done;
  for (const Stage& stage : stages) {
    const auto t = stage_task(stage.task, done, reuse_programs);
    tasks::Dataset train_set = stage.train;
    if (stage.max_examples && train_set.examples.size() > stage.max_examples) {
      train_set.examples.resize(stage.max_examples);
    }
    std::optional<tasks::Perception> init;
    if (!done.empty() && done.back().model.arity == t.arity) init = done.back().model;
    done.push_back(train(t, train_set, stage.val, stage.config, std::move(init)));
  }
  return done;
}

}  // namespace metaabd::em
