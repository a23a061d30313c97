#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "metaabd/em/trainer.hpp"

namespace metaabd::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kBudgetError = 4 };

// Error carrying the process exit code.
class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct StageConfig {
  tasks::TaskId task = tasks::TaskId::Sum;
  std::filesystem::path train;  // empty: the run's train file
  std::filesystem::path val;    // empty: the run's val file
  std::size_t max_examples = 0;  // 0: all; sorted-concept stages draw this many sorted examples
  em::EMConfig em;
};

// Training run. A file without stage sections is one stage built from
// [run] and [em]; stage sections [stage1], [stage2], ... inherit [em] and
// override any of its keys.
struct RunConfig {
  std::filesystem::path out;
  std::filesystem::path train;
  std::filesystem::path val;
  std::vector<StageConfig> stages;
  bool staged = false;  // stage sections were given
  bool curriculum() const { return staged; }
};

// Parses an INI file. Relative paths stay relative to the working
// directory unless parse_run_config gets a base directory. Unknown sections
// or keys, and bad values, throw CliError(kConfigError).
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});

// Fully resolved configuration, every key written out.
std::string to_ini(const RunConfig& c);

}  // namespace metaabd::cli
