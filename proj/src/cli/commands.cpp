#include "metaabd/cli/commands.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "metaabd/em/bench.hpp"

namespace metaabd::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::size_t parse_size(const std::string& what, std::string_view s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw CliError(kConfigError, what + ": bad number '" + std::string(s) + "'");
  return v;
}

std::pair<std::size_t, std::size_t> parse_lengths(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) {
    const auto n = parse_size("--lengths", s);
    return {n, n};
  }
  return {parse_size("--lengths", std::string_view(s).substr(0, dash)),
          parse_size("--lengths", std::string_view(s).substr(dash + 1))};
}

tasks::TaskId task_or_throw(const std::string& name) {
  auto id = tasks::parse_task_id(name);
  if (!id) throw CliError(kConfigError, "unknown task '" + name + "' (sum, product, sorted_concept, bogosort)");
  return *id;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void ensure_out_dir(const fs::path& out) {
  if (out.empty()) return;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw CliError(kFailure, "cannot create " + out.string() + ": " + ec.message());
}

// Wraps std::invalid_argument from library calls as configuration errors.
template <typename F>
auto config_checked(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw CliError(kConfigError, e.what());
  }
}

}  // namespace

std::string to_ini(const GenDataOptions& o) {
  std::ostringstream out;
  out << "[gen-data]\n"
      << "task = " << o.task << "\n"
      << "train = " << o.train << "\n"
      << "val = " << o.val << "\n"
      << "test = " << o.test << "\n"
      << "lengths = " << o.lengths << "\n";
  if (!o.test_lengths.empty()) {
    out << "test-lengths = ";
    for (std::size_t i = 0; i < o.test_lengths.size(); ++i) out << (i ? "," : "") << o.test_lengths[i];
    out << "\n";
  }
  out << "noise = " << o.noise << "\n"
      << "dim = " << o.dim << "\n"
      << "classes = " << o.classes << "\n"
      << "min-digit = " << o.min_digit << "\n"
      << "max-digit = " << o.max_digit << "\n"
      << "seed = " << o.seed << "\n"
      << "prototype-seed = " << o.prototype_seed.value_or(o.seed) << "\n"
      << "labels = " << (o.labels ? "true" : "false") << "\n"
      << "out = " << o.out.string() << "\n";
  return out.str();
}

int cmd_gen_data(const GenDataOptions& in, std::ostream& log) {
  GenDataOptions o = in;
  const tasks::TaskId task = task_or_throw(o.task);
  if (o.train == 0) throw CliError(kConfigError, "--train must be positive");
  if (o.out.empty()) throw CliError(kConfigError, "--out is required");
  if (o.min_digit < 0) o.min_digit = task == tasks::TaskId::Product ? 1 : 0;
  if (o.max_digit < 0) o.max_digit = static_cast<int>(o.classes) - 1;
  if (!o.prototype_seed) o.prototype_seed = o.seed;
  const auto [lo, hi] = parse_lengths(o.lengths);

  // everything is generated before anything is written
  std::vector<std::pair<std::string, tasks::Dataset>> files;
  config_checked([&] {
    tasks::DigitGenerator gen(o.classes, o.dim, o.noise, *o.prototype_seed);
    auto make = [&](std::size_t count, std::size_t a, std::size_t b, std::uint64_t salt) {
      tasks::GenOptions g;
      g.count = count;
      g.min_len = a;
      g.max_len = b;
      g.min_digit = o.min_digit;
      g.max_digit = o.max_digit;
      g.seed = o.seed * 1000003 + salt;
      return tasks::gen_sequences(gen, task, g);
    };
    files.emplace_back("train.tsv", make(o.train, lo, hi, 1));
    if (o.val) files.emplace_back("val.tsv", make(o.val, lo, hi, 2));
    if (o.test) files.emplace_back("test.tsv", make(o.test, lo, hi, 3));
    for (std::size_t len : o.test_lengths) {
      if (o.test == 0) throw std::invalid_argument("--test-lengths needs --test > 0");
      files.emplace_back("test_len" + std::to_string(len) + ".tsv", make(o.test, len, len, 100 + len));
    }
    return 0;
  });

  ensure_out_dir(o.out);
  for (const auto& [name, d] : files) {
    tasks::write_dataset(d, o.out / name, o.labels);
    log << name << ": " << d.examples.size() << " " << tasks::to_string(task) << " examples\n";
  }
  write_text(o.out / "gen-data.ini", to_ini(o));
  log << "wrote " << files.size() << " files to " << o.out.string() << "\n";
  return kOk;
}

namespace {

struct StageData {
  tasks::Dataset train;
  tasks::Dataset val;
};

// Stage inputs, all read before any output is created.
StageData stage_data(const RunConfig& rc, const StageConfig& s) {
  StageData d;
  const fs::path train_path = s.train.empty() ? rc.train : s.train;
  const fs::path val_path = s.val.empty() ? rc.val : s.val;
  d.train = load_dataset(train_path);
  if (!val_path.empty()) d.val = load_dataset(val_path);
  auto fit = [&](tasks::Dataset& ds, const fs::path& path, std::size_t cap) {
    if (ds.examples.empty()) return;
    if (ds.task == s.task) {
      if (cap && ds.examples.size() > cap) ds.examples.resize(cap);
    } else if (s.task == tasks::TaskId::SortedConcept && ds.task == tasks::TaskId::Bogosort) {
      ds = tasks::sorted_subset(ds, cap ? cap : ds.examples.size());
    } else {
      throw CliError(kDataError, path.string() + " holds " + std::string(tasks::to_string(ds.task)) +
                                     " data, stage needs " + std::string(tasks::to_string(s.task)));
    }
  };
  fit(d.train, train_path, s.max_examples);
  fit(d.val, val_path, 0);
  if (d.train.examples.empty()) throw CliError(kDataError, "no training examples for " + std::string(tasks::to_string(s.task)));
  return d;
}

void print_summary(std::ostream& log, const std::string& title, const em::EMState& st) {
  log << title << ": best score " << fixed(st.best_score) << " after " << st.epochs_run << " epochs\n";
  if (st.best_program) log << st.best_program->text();
}

}  // namespace

int cmd_train(const TrainOptions& o, std::ostream& log) {
  RunConfig rc = load_run_config(o.config);
  if (!o.out.empty()) rc.out = o.out;
  for (StageConfig& s : rc.stages) {
    if (o.seed) s.em.seed = *o.seed;
    if (o.workers) s.em.workers = std::max<std::size_t>(*o.workers, 1);
    if (o.epochs) s.em.epochs = *o.epochs;
  }
  std::vector<StageData> data;
  for (const StageConfig& s : rc.stages) data.push_back(stage_data(rc, s));

  std::error_code ec;
  if (fs::exists(rc.out) && !fs::is_empty(rc.out, ec) && !o.overwrite) {
    throw CliError(kConfigError, rc.out.string() + " exists; pass --overwrite to replace it");
  }
  fs::path staging = rc.out;
  staging += ".partial";
  fs::remove_all(staging, ec);
  ensure_out_dir(staging);

  try {
    std::vector<em::EMState> done;
    std::vector<logic::Clause> background;
    for (std::size_t i = 0; i < rc.stages.size(); ++i) {
      const StageConfig& s = rc.stages[i];
      const fs::path dir = rc.curriculum() ? staging / ("stage" + std::to_string(i + 1)) : staging;
      ensure_out_dir(dir);
      em::EMConfig cfg = s.em;
      cfg.metrics_csv = dir / "metrics.csv";
      cfg.program_dir = dir / "programs";
      const tasks::TaskSpec t = em::stage_task(s.task, done, true);
      std::optional<tasks::Perception> init;
      if (!done.empty() && done.back().model.arity == t.arity) init = done.back().model;
      const std::string name = rc.curriculum() ? "stage " + std::to_string(i + 1) : std::string("train");
      if (!o.quiet) {
        log << name << ": " << tasks::to_string(s.task) << ", " << data[i].train.examples.size() << " examples\n";
      }
      auto hook = [&](const em::EMState& st) {
        if (o.quiet || st.history.empty()) return true;
        const em::MetricsRow& r = st.history.back();
        log << "  epoch " << r.epoch << "  score " << fixed(st.best_score) << "  acc " << fixed(r.perception_acc)
            << "  nodes " << r.nodes_explored << "\n";
        return true;
      };
      em::EMState st = config_checked([&] { return em::train(t, data[i].train, data[i].val, cfg, std::move(init), hook); });
      save_run(dir, s.task, st, background);
      if (!o.quiet) print_summary(log, name, st);
      if (st.best_program) {
        for (const logic::Clause& c : st.best_program->clauses()) background.push_back(c);
      }
      done.push_back(std::move(st));
    }
    write_text(staging / "config.ini", to_ini(rc));
  } catch (const em::TrainingError& e) {
    fs::remove_all(staging, ec);
    throw CliError(e.budget() ? kBudgetError : kFailure, e.what());
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
  fs::remove_all(rc.out, ec);
  fs::rename(staging, rc.out);
  log << "wrote " << rc.out.string() << "\n";
  return kOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& log) {
  const RunArtifacts run = load_run(o.run);
  const tasks::TaskSpec t = run_task(run);
  if (o.data.empty()) throw CliError(kConfigError, "eval needs at least one --data file");
  std::vector<tasks::Dataset> sets;
  for (const fs::path& p : o.data) {
    tasks::Dataset d = load_dataset(p);
    if (d.examples.empty()) throw CliError(kDataError, p.string() + ": evaluation set is empty");
    if (d.task != run.task) {
      throw CliError(kDataError, p.string() + " holds " + std::string(tasks::to_string(d.task)) + " data, run is " +
                                     std::string(tasks::to_string(run.task)));
    }
    sets.push_back(std::move(d));
  }
  tasks::EvalOptions eo;
  eo.ground_truth = o.ground_truth;
  json report = json::array();
  log << "file\tlength\tn\tacc\traw_acc\tmae\tlog_mae\tperm_acc\telem_acc\tfailures\n";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    std::map<std::size_t, tasks::Metrics> m;
    try {
      m = tasks::evaluate(t, run.program, run.model, sets[i], eo);
    } catch (const std::invalid_argument& e) {
      throw CliError(kDataError, o.data[i].string() + ": " + e.what());
    }
    for (const auto& [len, r] : m) {
      const std::string l = len == 0 ? "all" : std::to_string(len);
      log << o.data[i].filename().string() << '\t' << l << '\t' << r.examples << '\t' << fixed(r.acc) << '\t'
          << fixed(r.raw_acc) << '\t' << fixed(r.mae) << '\t' << fixed(r.log_mae) << '\t' << fixed(r.perm_acc) << '\t'
          << fixed(r.elem_acc) << '\t' << r.failures << '\n';
      report.push_back({{"file", o.data[i].string()},
                        {"length", l},
                        {"examples", r.examples},
                        {"acc", r.acc},
                        {"raw_acc", r.raw_acc},
                        {"mae", r.mae},
                        {"log_mae", r.log_mae},
                        {"perm_acc", r.perm_acc},
                        {"elem_acc", r.elem_acc},
                        {"failures", r.failures},
                        {"ground_truth", o.ground_truth}});
    }
  }
  if (!o.out.empty()) {
    ensure_out_dir(o.out);
    write_text(o.out / "eval.json", report.dump(2) + "\n");
  }
  return kOk;
}

int cmd_show_program(const fs::path& dir, std::ostream& log) {
  const RunArtifacts run = load_run(dir);
  log << "% task " << tasks::to_string(run.task) << ", score " << fixed(run.best_score) << ", " << run.epochs_run
      << " epochs\n";
  if (!run.background.empty()) {
    log << "% background\n";
    for (const logic::Clause& c : run.background) log << logic::to_string(c) << "\n";
    log << "% learned\n";
  }
  log << run.program.text();
  return kOk;
}

int cmd_bench_abduction(const BenchAbductionOptions& o, std::ostream& log) {
  if (o.batches == 0 || o.batch_size == 0) throw CliError(kConfigError, "--batches and --batch-size must be positive");
  const tasks::TaskSpec t = tasks::make_task(tasks::TaskId::Sum);
  tasks::Dataset pool;
  if (!o.data.empty()) {
    pool = load_dataset(o.data);
    if (pool.task != tasks::TaskId::Sum) throw CliError(kDataError, "abduction bench needs sum data");
  } else {
    config_checked([&] {
      tasks::DigitGenerator gen(t.classes, o.dim, o.noise, o.seed);
      tasks::GenOptions g;
      g.count = o.batches * o.batch_size;
      g.min_len = g.max_len = o.length;
      g.seed = o.seed + 1;
      pool = tasks::gen_sequences(gen, tasks::TaskId::Sum, g);
      return 0;
    });
  }
  std::vector<const tasks::Sequence*> picked;
  for (const auto& s : pool.examples) {
    if (s.items.size() == o.length) picked.push_back(&s);
  }
  if (picked.size() < o.batches * o.batch_size) {
    throw CliError(kDataError, "need " + std::to_string(o.batches * o.batch_size) + " length-" +
                                   std::to_string(o.length) + " examples, found " + std::to_string(picked.size()));
  }
  std::vector<std::vector<const tasks::Sequence*>> batches(o.batches);
  for (std::size_t i = 0; i < o.batches * o.batch_size; ++i) batches[i / o.batch_size].push_back(picked[i]);

  tasks::Perception model;
  if (!o.run.empty()) {
    const RunArtifacts run = load_run(o.run);
    if (run.task != tasks::TaskId::Sum && run.task != tasks::TaskId::Product) {
      throw CliError(kDataError, "abduction bench needs a digit model");
    }
    model = run.model;
  } else {
    model = tasks::make_perception(t, pool.dim(), o.hidden, o.seed);
  }
  em::AbductionBenchOptions bo;
  bo.max_clauses = o.max_clauses;
  const auto rows = config_checked([&] { return em::bench_abduction(t, model, batches, bo); });

  std::ostringstream csv;
  csv << "batch,h_to_z_labelings,h_to_z_nodes,h_to_z_seconds,z_to_h_labelings,z_to_h_nodes,z_to_h_seconds\n";
  log << "batch\tH->z labelings\tH->z nodes\tH->z s\tz->H labelings\tz->H nodes\tz->H s\n";
  std::size_t fewer = 0;
  for (const auto& r : rows) {
    fewer += r.h_to_z.labelings < r.z_to_h.labelings;
    log << r.batch << '\t' << r.h_to_z.labelings << '\t' << r.h_to_z.nodes << '\t' << fixed(r.h_to_z.seconds) << '\t'
        << r.z_to_h.labelings << '\t' << r.z_to_h.nodes << '\t' << fixed(r.z_to_h.seconds) << '\n';
    csv << r.batch << ',' << r.h_to_z.labelings << ',' << r.h_to_z.nodes << ',' << r.h_to_z.seconds << ','
        << r.z_to_h.labelings << ',' << r.z_to_h.nodes << ',' << r.z_to_h.seconds << '\n';
  }
  log << "H->z examined fewer labelings on " << fewer << " of " << rows.size() << " batches\n";
  if (!o.out.empty()) {
    ensure_out_dir(o.out);
    write_text(o.out / "abduction.csv", csv.str());
  }
  return kOk;
}

int cmd_bench_metarules(const BenchMetarulesOptions& o, std::ostream& log) {
  const tasks::TaskId id = task_or_throw(o.task);
  const tasks::TaskSpec t = tasks::make_task(id);
  tasks::Dataset d;
  if (!o.data.empty()) {
    d = load_dataset(o.data);
    if (d.task != id) throw CliError(kDataError, "dataset task does not match --task");
    if (o.examples && d.examples.size() > o.examples) d.examples.resize(o.examples);
  } else {
    config_checked([&] {
      tasks::DigitGenerator gen(t.classes, 4, 0.0, o.seed);
      tasks::GenOptions g;
      g.count = o.examples;
      g.min_digit = id == tasks::TaskId::Product ? 1 : 0;
      g.seed = o.seed + 1;
      d = tasks::gen_sequences(gen, id, g);
      return 0;
    });
  }
  em::MetaruleBenchOptions mo;
  mo.max_subsets = o.max_subsets;
  mo.max_clauses = o.max_clauses;
  mo.seed = o.seed;
  const auto reports = config_checked([&] { return em::bench_metarules(t, d, o.sizes, mo); });

  std::ostringstream csv;
  csv << "size,metarules,found,nodes,seconds\n";
  log << "size\tsubsets\tfailures\tworst nodes\tworst s\n";
  for (const auto& r : reports) {
    log << r.size << '\t' << r.runs.size() << '\t' << r.failures << '\t' << r.worst_nodes << '\t'
        << fixed(r.worst_seconds) << '\n';
    for (const auto& run : r.runs) {
      std::string names;
      for (const auto& n : run.metarules) names += (names.empty() ? "" : " ") + n;
      csv << r.size << ',' << names << ',' << (run.found ? 1 : 0) << ',' << run.nodes << ',' << run.seconds << '\n';
    }
  }
  for (const auto& r : reports) {
    if (r.failures == r.runs.size()) log << "size " << r.size << ": induction failed for every subset\n";
  }
  if (!o.out.empty()) {
    ensure_out_dir(o.out);
    write_text(o.out / "metarules.csv", csv.str());
  }
  return kOk;
}

}  // namespace metaabd::cli
