// Command-line entry point. Exit codes: 0 ok, 1 other failure, 2 config,
// 3 data, 4 search budget.

#include <CLI11.hpp>
#include <iostream>

#include "metaabd/cli/commands.hpp"

using namespace metaabd::cli;

int main(int argc, char** argv) {
  CLI::App app{"Meta-interpretive abductive learning of digit tasks"};
  app.require_subcommand(1);
  // flags for any subcommand may come from an INI file with one section per
  // subcommand, e.g. [gen-data]; unknown keys are errors
  app.set_config("--config", "", "read subcommand flags from an INI file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();

  GenDataOptions gen;
  auto* g = app.add_subcommand("gen-data", "generate synthetic digit datasets");
  g->add_option("--task", gen.task, "sum, product, sorted_concept or bogosort")->required();
  g->add_option("--train", gen.train, "training examples")->capture_default_str();
  g->add_option("--val", gen.val, "validation examples")->capture_default_str();
  g->add_option("--test", gen.test, "test examples per test file")->capture_default_str();
  g->add_option("--lengths", gen.lengths, "input length range, e.g. 2-5")->capture_default_str();
  g->add_option("--test-lengths", gen.test_lengths, "extra fixed-length test files")->delimiter(',');
  g->add_option("--noise", gen.noise, "Gaussian noise on class prototypes")->capture_default_str();
  g->add_option("--dim", gen.dim, "features per item")->capture_default_str();
  g->add_option("--classes", gen.classes, "digit classes")->capture_default_str();
  g->add_option("--min-digit", gen.min_digit, "smallest digit (-1: 1 for product, else 0)")->capture_default_str();
  g->add_option("--max-digit", gen.max_digit, "largest digit (-1: classes - 1)")->capture_default_str();
  g->add_option("--seed", gen.seed, "sampling seed")->capture_default_str();
  g->add_option("--prototype-seed", gen.prototype_seed, "class prototype seed (default: --seed)");
  g->add_option("--labels", gen.labels, "write ground-truth digit labels")->capture_default_str();
  g->add_option("--out", gen.out, "output directory")->required();

  TrainOptions train;
  auto* t = app.add_subcommand("train", "train one task or a curriculum from a run config");
  t->add_option("--config", train.config, "run config (INI)")->required()->check(CLI::ExistingFile);
  t->add_option("--out", train.out, "output directory, overrides [run] out");
  t->add_option("--seed", train.seed, "seed for every stage");
  t->add_option("--workers", train.workers, "worker threads (default: config, else machine cores)");
  t->add_option("--epochs", train.epochs, "epochs for every stage");
  t->add_flag("--overwrite", train.overwrite, "replace an existing output directory");
  t->add_flag("--quiet", train.quiet, "print only the final line");

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "evaluate a trained run");
  e->add_option("--run", eval.run, "run directory")->required();
  e->add_option("--data", eval.data, "dataset file(s)")->required();
  e->add_flag("--ground-truth", eval.ground_truth, "use dataset labels instead of perception");
  e->add_option("--out", eval.out, "directory for eval.json");

  std::filesystem::path show_run;
  auto* s = app.add_subcommand("show-program", "print a run's learned program");
  s->add_option("--run", show_run, "run directory")->required();

  BenchAbductionOptions ba;
  auto* b = app.add_subcommand("bench-abduction", "compare induce-then-abduce with enumerate-then-induce");
  b->add_option("--data", ba.data, "sum dataset (generated when omitted)");
  b->add_option("--run", ba.run, "run directory supplying the perception model (untrained when omitted)");
  b->add_option("--batches", ba.batches, "batches")->capture_default_str();
  b->add_option("--batch-size", ba.batch_size, "examples per batch")->capture_default_str();
  b->add_option("--length", ba.length, "input length")->capture_default_str();
  b->add_option("--noise", ba.noise, "noise of generated data")->capture_default_str();
  b->add_option("--dim", ba.dim, "features per generated item")->capture_default_str();
  b->add_option("--hidden", ba.hidden, "hidden units of the untrained model")->capture_default_str();
  b->add_option("--max-clauses", ba.max_clauses, "program size bound")->capture_default_str();
  b->add_option("--seed", ba.seed, "seed")->capture_default_str();
  b->add_option("--out", ba.out, "directory for abduction.csv");

  BenchMetarulesOptions bm;
  auto* m = app.add_subcommand("bench-metarules", "induction cost per metarule subset size");
  m->add_option("--task", bm.task, "sum or product")->capture_default_str();
  m->add_option("--data", bm.data, "labelled dataset (generated when omitted)");
  m->add_option("--examples", bm.examples, "examples to induce from")->capture_default_str();
  m->add_option("--sizes", bm.sizes, "subset sizes")->delimiter(',')->capture_default_str();
  m->add_option("--max-subsets", bm.max_subsets, "subsets per size, 0 for all")->capture_default_str();
  m->add_option("--max-clauses", bm.max_clauses, "program size bound")->capture_default_str();
  m->add_option("--seed", bm.seed, "seed")->capture_default_str();
  m->add_option("--out", bm.out, "directory for metarules.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*g) return cmd_gen_data(gen, std::cout);
    if (*t) return cmd_train(train, std::cout);
    if (*e) return cmd_eval(eval, std::cout);
    if (*s) return cmd_show_program(show_run, std::cout);
    if (*b) return cmd_bench_abduction(ba, std::cout);
    if (*m) return cmd_bench_metarules(bm, std::cout);
  } catch (const CliError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.code();
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
