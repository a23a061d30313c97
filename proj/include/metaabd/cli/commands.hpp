#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "metaabd/cli/artifacts.hpp"

namespace metaabd::cli {

// Each command returns an exit code or throws CliError.

struct GenDataOptions {
  std::string task;
  std::size_t train = 3000;
  std::size_t val = 1000;
  std::size_t test = 1000;
  std::string lengths = "2-5";          // "min-max" or one length
  std::vector<std::size_t> test_lengths;  // extra test_len<L>.tsv files, `test` examples each
  double noise = 0.36;
  std::size_t dim = 32;
  std::size_t classes = 10;
  int min_digit = -1;                   // -1: 1 for product, else 0
  int max_digit = -1;                   // -1: classes - 1
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> prototype_seed;  // class prototypes; defaults to seed
  bool labels = true;
  std::filesystem::path out;
};
int cmd_gen_data(const GenDataOptions& o, std::ostream& log);
std::string to_ini(const GenDataOptions& o);

struct TrainOptions {
  std::filesystem::path config;
  std::filesystem::path out;             // overrides [run] out
  std::optional<std::uint64_t> seed;     // overrides every stage's seed
  std::optional<std::size_t> workers;
  std::optional<std::size_t> epochs;
  bool overwrite = false;
  bool quiet = false;
};
int cmd_train(const TrainOptions& o, std::ostream& log);

struct EvalOptions {
  std::filesystem::path run;
  std::vector<std::filesystem::path> data;
  bool ground_truth = false;
  std::filesystem::path out;  // writes eval.json when set
};
int cmd_eval(const EvalOptions& o, std::ostream& log);

int cmd_show_program(const std::filesystem::path& run, std::ostream& log);

struct BenchAbductionOptions {
  std::filesystem::path data;  // sum dataset; generated when empty
  std::filesystem::path run;   // perception model; untrained when empty
  std::size_t batches = 20;
  std::size_t batch_size = 8;
  std::size_t length = 4;
  double noise = 0.36;
  std::size_t dim = 32;
  std::size_t hidden = 64;
  std::size_t max_clauses = 2;
  std::uint64_t seed = 1;
  std::filesystem::path out;  // writes abduction.csv when set
};
int cmd_bench_abduction(const BenchAbductionOptions& o, std::ostream& log);

struct BenchMetarulesOptions {
  std::string task = "sum";
  std::filesystem::path data;  // labelled examples; generated when empty
  std::size_t examples = 20;
  std::vector<std::size_t> sizes{2, 3, 9};
  std::size_t max_subsets = 0;
  std::size_t max_clauses = 2;
  std::uint64_t seed = 1;
  std::filesystem::path out;  // writes metarules.csv when set
};
int cmd_bench_metarules(const BenchMetarulesOptions& o, std::ostream& log);

}  // namespace metaabd::cli
