#include "metaabd/cli/artifacts.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "metaabd/logic/parser.hpp"

namespace metaabd::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kDataError, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw CliError(kFailure, "cannot write " + path.string());
}

void save_run(const fs::path& dir, tasks::TaskId task, const em::EMState& state,
              const std::vector<logic::Clause>& background) {
  if (!state.best_program) throw CliError(kFailure, "run has no program to save");
  fs::create_directories(dir);
  write_text(dir / "program.pl", mil::program_file(*state.best_program));
  if (!background.empty()) {
    std::string text;
    for (const logic::Clause& c : background) text += logic::to_string(c) + "\n";
    write_text(dir / "background.pl", text);
  }
  const nn::MLP& net =
      state.model.arity == tasks::LabelArity::Monadic ? state.model.classifier : state.model.relation.net();
  net.save(dir / "model.bin");
  json meta = {{"task", std::string(tasks::to_string(task))},
               {"best_score", state.best_score},
               {"epochs_run", state.epochs_run},
               {"model_dims", net.dims()},
               {"background", !background.empty()}};
  write_text(dir / "run.json", meta.dump(2) + "\n");
}

RunArtifacts load_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CliError(kDataError, "no run directory at " + dir.string());
  RunArtifacts run;
  json meta;
  try {
    meta = json::parse(read_text(dir / "run.json"));
    auto task = tasks::parse_task_id(meta.at("task").get<std::string>());
    if (!task) throw CliError(kDataError, "run.json names an unknown task");
    run.task = *task;
    run.best_score = meta.at("best_score").get<double>();
    run.epochs_run = meta.at("epochs_run").get<std::size_t>();
  } catch (const json::exception& e) {
    throw CliError(kDataError, (dir / "run.json").string() + ": " + e.what());
  }
  const auto spec = tasks::make_task(run.task);
  try {
    if (meta.value("background", false)) run.background = logic::parse_clauses(read_text(dir / "background.pl"));
    run.program = mil::read_program_file(read_text(dir / "program.pl"), spec.lang.metarules);
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError(kDataError, (dir / "program.pl").string() + ": " + e.what());
  }
  if (run.program.empty() || run.program.clauses().front().head.predicate.symbol() != spec.target) {
    throw CliError(kDataError, "program does not define the " + std::string(tasks::to_string(run.task)) + " target");
  }
  try {
    const nn::MLP net = nn::MLP::load(dir / "model.bin");
    run.model.arity = spec.arity;
    if (spec.arity == tasks::LabelArity::Monadic) {
      if (net.classes() != spec.classes) {
        throw CliError(kDataError, "checkpoint has " + std::to_string(net.classes()) + " outputs, task needs " +
                                       std::to_string(spec.classes));
      }
      run.model.classifier = net;
    } else {
      run.model.relation = nn::DyadicModel(net);
    }
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError(kDataError, (dir / "model.bin").string() + ": " + e.what());
  }
  return run;
}

tasks::TaskSpec run_task(const RunArtifacts& run) {
  auto t = tasks::make_task(run.task);
  if (!run.background.empty()) tasks::install_program(t, run.background);
  return t;
}

tasks::Dataset load_dataset(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw CliError(kDataError, "dataset not found: " + path.string());
  try {
    return tasks::read_dataset(path);
  } catch (const std::exception& e) {
    throw CliError(kDataError, e.what());
  }
}

}  // namespace metaabd::cli
