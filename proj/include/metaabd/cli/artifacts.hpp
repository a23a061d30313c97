#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "metaabd/cli/run_config.hpp"

namespace metaabd::cli {

// A trained run directory: run.json, program.pl, model.bin, and
// background.pl when learned predicates were installed.
struct RunArtifacts {
  tasks::TaskId task = tasks::TaskId::Sum;
  mil::Program program;
  std::vector<logic::Clause> background;
  tasks::Perception model;
  double best_score = 0.0;
  std::size_t epochs_run = 0;
};

void save_run(const std::filesystem::path& dir, tasks::TaskId task, const em::EMState& state,
              const std::vector<logic::Clause>& background);

// Throws CliError(kDataError) on missing or inconsistent files.
RunArtifacts load_run(const std::filesystem::path& dir);

// The task with the run's background installed.
tasks::TaskSpec run_task(const RunArtifacts& run);

// Reads a dataset, mapping failures to CliError(kDataError).
tasks::Dataset load_dataset(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace metaabd::cli
