#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "metaabd/nn/mlp.hpp"
#include "metaabd/tasks/task.hpp"

namespace metaabd::tasks {

// Synthetic stand-in for digit images: one random prototype per class plus
// Gaussian noise, clipped to [0,1].
class DigitGenerator {
 public:
  DigitGenerator(std::size_t classes = 10, std::size_t dim = 32, double noise = 0.36, std::uint64_t seed = 1);

  nn::Vector sample(int label, std::mt19937_64& rng) const;
  std::size_t classes() const { return prototypes_.size(); }
  std::size_t dim() const { return dim_; }
  double noise() const { return noise_; }
  const std::vector<nn::Vector>& prototypes() const { return prototypes_; }

 private:
  std::size_t dim_;
  double noise_;
  std::vector<nn::Vector> prototypes_;
};

struct Sequence {
  std::vector<nn::Vector> items;
  std::vector<std::int64_t> y;       // scalar tasks: one value; sorting: ranks
  std::vector<int> labels;           // ground truth per item; metrics only, may be empty
};

struct Dataset {
  TaskId task = TaskId::Sum;
  std::vector<Sequence> examples;
  std::size_t dim() const { return examples.empty() || examples[0].items.empty() ? 0 : examples[0].items[0].size(); }
};

struct GenOptions {
  std::size_t count = 100;
  std::size_t min_len = 2;
  std::size_t max_len = 5;
  int min_digit = 0;
  int max_digit = 9;
  std::uint64_t seed = 1;
};

// Output for ground-truth digits: sum, product, descending ranks, or 1 for
// sortedness (sorted_concept sequences are generated in sorted order).
std::vector<std::int64_t> task_output(TaskId task, const std::vector<int>& digits);

// Throws std::invalid_argument when sorting asks for more distinct digits
// than the label range holds, or counts/lengths are invalid.
Dataset gen_sequences(const DigitGenerator& gen, TaskId task, const GenOptions& opts);

// Sorting examples whose input is already in order (ranks 1..n), recast as
// sortedness examples; at most `max`, drawn round-robin over lengths.
Dataset sorted_subset(const Dataset& sorting, std::size_t max);

// Tab-separated, one example per line:
//   task <TAB> len <TAB> f,f,..;f,f,.. <TAB> y[,y..] [<TAB> labels]
void write_dataset(const Dataset& d, const std::filesystem::path& path, bool with_labels = true);
// Throws std::runtime_error with the line number on malformed input.
Dataset read_dataset(const std::filesystem::path& path);

// MNIST-style IDX files; pixels scaled to [0,1].
std::vector<std::pair<nn::Vector, int>> load_idx(const std::filesystem::path& images,
                                                 const std::filesystem::path& labels);

}  // namespace metaabd::tasks
