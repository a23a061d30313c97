#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "metaabd/mil/induce.hpp"
#include "metaabd/tasks/evaluate.hpp"

namespace metaabd::em {

struct EMConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::size_t max_clauses = 0;           // 0: task default
  std::vector<std::string> metarules;    // empty: full library
  std::uint64_t node_budget = 5'000'000;  // per proof search
  std::size_t max_candidates = 20000;
  double learning_rate = 0.05;
  double lr_decay = 1.0;                  // multiplied in after every epoch
  double momentum = 0.9;
  double weight_decay = 0.0;              // L2 penalty in every M-step
  std::size_t m_epochs = 10;              // SGD passes over each batch's pseudo-labels
  // after EM, passes over the whole training set's labels abduced by the
  // best program and final model; 0 disables the refit
  std::size_t refit_epochs = 0;
  // independent initialisations run for restart_epochs each; the one whose
  // last epoch fits the data best continues; 1 disables restarts
  std::size_t restarts = 1;
  std::size_t restart_epochs = 3;
  std::size_t hidden = 64;
  std::uint64_t seed = 1;
  bool pretrain = false;
  std::size_t pretrain_epochs = 100;
  std::size_t workers = 1;
  std::filesystem::path metrics_csv;      // empty: no CSV
  std::filesystem::path program_dir;      // empty: no per-epoch program files
};

// One CSV row. Batch rows carry the batch number; the epoch summary row has
// batch = -1 and the held-out perception accuracy; the final refit row has
// batch = -2.
struct MetricsRow {
  std::size_t epoch = 0;
  long batch = -1;
  double score = 0.0;             // log score of the batch's best (H, z)
  double pseudo_label_acc = -1;   // -1 when ground truth is unavailable
  double perception_acc = -1;
  double loss = 0.0;
  std::uint64_t nodes_explored = 0;
};

struct EMState {
  tasks::Perception model;
  std::optional<mil::Program> best_program;
  double best_score = -std::numeric_limits<double>::infinity();  // log prior + mean per-example log-prob
  std::vector<MetricsRow> history;
  std::size_t epochs_run = 0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, bool budget) : std::runtime_error(what), budget_(budget) {}
  bool budget() const { return budget_; }

 private:
  bool budget_;
};

struct BatchResult {
  mil::Program program;
  double score = 0.0;
  std::vector<mil::ProofResult> proofs;
  mil::InduceStats stats;
  mil::SearchStatus status = mil::SearchStatus::Complete;
};

// Copy of the task whose search uses only the named metarules (all when empty).
tasks::TaskSpec restrict_metarules(const tasks::TaskSpec& t, const std::vector<std::string>& names);

mil::InduceOptions induce_options(const tasks::TaskSpec& t, const EMConfig& cfg);

// E-step: best program and labelings for a batch under the current model.
std::optional<BatchResult> e_step(const tasks::TaskSpec& t, const tasks::Perception& model,
                                  const std::vector<const tasks::Sequence*>& batch, const EMConfig& cfg,
                                  mil::InduceStats* stats = nullptr);

// M-step: fits the model on the abduced labels; returns the final loss, or
// nullopt when there was nothing to train on.
std::optional<double> m_step(const tasks::TaskSpec& t, tasks::Perception& model,
                             const std::vector<const tasks::Sequence*>& batch, const BatchResult& abduced,
                             const EMConfig& cfg, double learning_rate, std::uint64_t seed);

// Fraction of abduced labels (or pair facts) that agree with ground truth;
// nullopt when labels are missing.
std::optional<double> pseudo_label_accuracy(const tasks::TaskSpec& t, const std::vector<const tasks::Sequence*>& batch,
                                            const BatchResult& abduced);

// Final refit: labels every training example with the best program under
// the current model and fits the model on all of them. The returned row has
// batch = -2.
MetricsRow refit(const tasks::TaskSpec& t, EMState& st, const tasks::Dataset& train_set, const EMConfig& cfg,
                 double learning_rate);

// Called after each epoch; return false to stop early.
using EpochHook = std::function<bool(const EMState&)>;

EMState train(const tasks::TaskSpec& t, const tasks::Dataset& train_set, const tasks::Dataset& val_set,
              const EMConfig& cfg, std::optional<tasks::Perception> init = std::nullopt, EpochHook hook = {});

struct Stage {
  tasks::TaskId task;
  EMConfig config;
  tasks::Dataset train;
  tasks::Dataset val;
  std::size_t max_examples = 0;  // 0: all
};

// Runs the stages in order; each later stage sees the earlier learned
// programs as background knowledge and continues the shared model.
std::vector<EMState> run_curriculum(const std::vector<Stage>& stages, bool reuse_programs = true);

// Task spec for stage `i` with the programs of earlier stages installed.
tasks::TaskSpec stage_task(tasks::TaskId id, const std::vector<EMState>& earlier, bool reuse_programs);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& r);

// One-labelled-item-per-class sample drawn from the training data.
std::vector<nn::Vector> few_shot_sample(const tasks::Dataset& d, std::size_t classes, std::uint64_t seed);

}  // namespace metaabd::em
