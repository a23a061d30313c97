#include "metaabd/cli/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace metaabd::cli {
namespace {

namespace pt = boost::property_tree;
using Setter = std::function<void(em::EMConfig&, const std::string&)>;

[[noreturn]] void bad(const std::string& where, const std::string& why) {
  throw CliError(kConfigError, where + ": " + why);
}

template <typename T>
T number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) bad(key, "expected a number, got '" + v + "'");
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> name_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream in(v);
  for (std::string item; std::getline(in, item, ',');) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    out.push_back(item.substr(a, item.find_last_not_of(" \t") - a + 1));
  }
  return out;
}

const std::map<std::string, Setter>& em_keys() {
  static const std::map<std::string, Setter> keys = {
      {"epochs", [](em::EMConfig& c, const std::string& v) { c.epochs = number<std::size_t>("epochs", v); }},
      {"batch_size",
       [](em::EMConfig& c, const std::string& v) {
         c.batch_size = number<std::size_t>("batch_size", v);
         if (c.batch_size == 0) bad("batch_size", "must be positive");
       }},
      {"max_clauses", [](em::EMConfig& c, const std::string& v) { c.max_clauses = number<std::size_t>("max_clauses", v); }},
      {"metarules",
       [](em::EMConfig& c, const std::string& v) {
         c.metarules = name_list(v);
         try {
           mil::select_metarules(mil::default_metarules(), c.metarules);
         } catch (const std::exception& e) {
           bad("metarules", e.what());
         }
       }},
      {"node_budget", [](em::EMConfig& c, const std::string& v) { c.node_budget = number<std::uint64_t>("node_budget", v); }},
      {"max_candidates",
       [](em::EMConfig& c, const std::string& v) { c.max_candidates = number<std::size_t>("max_candidates", v); }},
      {"learning_rate",
       [](em::EMConfig& c, const std::string& v) {
         c.learning_rate = number<double>("learning_rate", v);
         if (!(c.learning_rate > 0)) bad("learning_rate", "must be positive");
       }},
      {"lr_decay",
       [](em::EMConfig& c, const std::string& v) {
         c.lr_decay = number<double>("lr_decay", v);
         if (!(c.lr_decay > 0 && c.lr_decay <= 1)) bad("lr_decay", "must lie in (0, 1]");
       }},
      {"momentum",
       [](em::EMConfig& c, const std::string& v) {
         c.momentum = number<double>("momentum", v);
         if (!(c.momentum >= 0 && c.momentum < 1)) bad("momentum", "must lie in [0, 1)");
       }},
      {"weight_decay",
       [](em::EMConfig& c, const std::string& v) {
         c.weight_decay = number<double>("weight_decay", v);
         if (!(c.weight_decay >= 0)) bad("weight_decay", "must be nonnegative");
       }},
      {"m_epochs", [](em::EMConfig& c, const std::string& v) { c.m_epochs = number<std::size_t>("m_epochs", v); }},
      {"hidden",
       [](em::EMConfig& c, const std::string& v) {
         c.hidden = number<std::size_t>("hidden", v);
         if (c.hidden == 0) bad("hidden", "must be positive");
       }},
      {"refit_epochs",
       [](em::EMConfig& c, const std::string& v) { c.refit_epochs = number<std::size_t>("refit_epochs", v); }},
      {"restarts",
       [](em::EMConfig& c, const std::string& v) {
         c.restarts = number<std::size_t>("restarts", v);
         if (c.restarts == 0) bad("restarts", "must be positive");
       }},
      {"restart_epochs",
       [](em::EMConfig& c, const std::string& v) {
         c.restart_epochs = number<std::size_t>("restart_epochs", v);
         if (c.restart_epochs == 0) bad("restart_epochs", "must be positive");
       }},
      {"seed", [](em::EMConfig& c, const std::string& v) { c.seed = number<std::uint64_t>("seed", v); }},
      {"pretrain", [](em::EMConfig& c, const std::string& v) { c.pretrain = boolean("pretrain", v); }},
      {"pretrain_epochs",
       [](em::EMConfig& c, const std::string& v) { c.pretrain_epochs = number<std::size_t>("pretrain_epochs", v); }},
      {"workers",
       [](em::EMConfig& c, const std::string& v) {
         c.workers = number<std::size_t>("workers", v);
         if (c.workers == 0) bad("workers", "must be positive");
       }},
  };
  return keys;
}

void apply_em(em::EMConfig& c, const pt::ptree& section, const std::string& name,
              const std::set<std::string>& also_allowed) {
  for (const auto& [key, node] : section) {
    if (!node.empty()) bad(name, "nested key '" + key + "'");
    if (also_allowed.count(key)) continue;
    auto it = em_keys().find(key);
    if (it == em_keys().end()) bad("[" + name + "]", "unknown key '" + key + "'");
    it->second(c, node.data());
  }
}

tasks::TaskId task_value(const std::string& where, const std::string& v) {
  auto id = tasks::parse_task_id(v);
  if (!id) bad(where, "unknown task '" + v + "'");
  return *id;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  if (v.empty()) return {};
  std::filesystem::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

void write_em(std::ostream& out, const em::EMConfig& c) {
  out << "epochs = " << c.epochs << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "max_clauses = " << c.max_clauses << "\n"
      << "metarules = " << join(c.metarules) << "\n"
      << "node_budget = " << c.node_budget << "\n"
      << "max_candidates = " << c.max_candidates << "\n"
      << "learning_rate = " << c.learning_rate << "\n"
      << "lr_decay = " << c.lr_decay << "\n"
      << "momentum = " << c.momentum << "\n"
      << "weight_decay = " << c.weight_decay << "\n"
      << "m_epochs = " << c.m_epochs << "\n"
      << "refit_epochs = " << c.refit_epochs << "\n"
      << "restarts = " << c.restarts << "\n"
      << "restart_epochs = " << c.restart_epochs << "\n"
      << "hidden = " << c.hidden << "\n"
      << "seed = " << c.seed << "\n"
      << "pretrain = " << (c.pretrain ? "true" : "false") << "\n"
      << "pretrain_epochs = " << c.pretrain_epochs << "\n"
      << "workers = " << c.workers << "\n";
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    bad("config", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig rc;
  em::EMConfig base;
  base.workers = std::max(1u, std::thread::hardware_concurrency());
  std::optional<tasks::TaskId> run_task;
  std::map<std::size_t, const pt::ptree*> stage_sections;
  for (const auto& [name, section] : tree) {
    if (section.empty()) bad("config", "key '" + name + "' outside a section");
    if (name == "run") {
      for (const auto& [key, node] : section) {
        const std::string& v = node.data();
        if (key == "task") {
          run_task = task_value("[run] task", v);
        } else if (key == "train") {
          rc.train = resolve(base_dir, v);
        } else if (key == "val") {
          rc.val = resolve(base_dir, v);
        } else if (key == "out") {
          rc.out = resolve(base_dir, v);
        } else {
          bad("[run]", "unknown key '" + key + "'");
        }
      }
    } else if (name == "em") {
      apply_em(base, section, name, {});
    } else if (name.rfind("stage", 0) == 0 && name.size() > 5) {
      const auto n = number<std::size_t>("[" + name + "]", name.substr(5));
      if (n == 0) bad("[" + name + "]", "stages count from 1");
      stage_sections[n] = &section;
    } else {
      bad("config", "unknown section [" + name + "]");
    }
  }
  if (rc.out.empty()) bad("[run]", "missing key 'out'");

  if (stage_sections.empty()) {
    if (!run_task) bad("[run]", "missing key 'task'");
    if (rc.train.empty()) bad("[run]", "missing key 'train'");
    StageConfig s;
    s.task = *run_task;
    s.em = base;
    rc.stages.push_back(std::move(s));
    return rc;
  }
  if (run_task) bad("[run]", "'task' belongs in the stage sections when stages are given");
  rc.staged = true;
  std::size_t expect = 1;
  for (const auto& [n, section] : stage_sections) {
    const std::string name = "stage" + std::to_string(n);
    if (n != expect++) bad("[" + name + "]", "stages must be numbered 1, 2, ... without gaps");
    StageConfig s;
    s.em = base;
    bool has_task = false;
    for (const auto& [key, node] : *section) {
      const std::string& v = node.data();
      if (key == "task") {
        s.task = task_value("[" + name + "] task", v);
        has_task = true;
      } else if (key == "train") {
        s.train = resolve(base_dir, v);
      } else if (key == "val") {
        s.val = resolve(base_dir, v);
      } else if (key == "max_examples") {
        s.max_examples = number<std::size_t>("[" + name + "] max_examples", v);
      }
    }
    apply_em(s.em, *section, name, {"task", "train", "val", "max_examples"});
    if (!has_task) bad("[" + name + "]", "missing key 'task'");
    if (s.train.empty() && rc.train.empty()) bad("[" + name + "]", "no training data in the stage or [run]");
    rc.stages.push_back(std::move(s));
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kConfigError, "cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string to_ini(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n";
  if (!c.curriculum()) out << "task = " << tasks::to_string(c.stages.at(0).task) << "\n";
  out << "train = " << c.train.string() << "\n"
      << "val = " << c.val.string() << "\n"
      << "out = " << c.out.string() << "\n";
  if (!c.curriculum()) {
    out << "\n[em]\n";
    write_em(out, c.stages.at(0).em);
    return out.str();
  }
  for (std::size_t i = 0; i < c.stages.size(); ++i) {
    const StageConfig& s = c.stages[i];
    out << "\n[stage" << i + 1 << "]\n"
        << "task = " << tasks::to_string(s.task) << "\n"
        << "train = " << s.train.string() << "\n"
        << "val = " << s.val.string() << "\n"
        << "max_examples = " << s.max_examples << "\n";
    write_em(out, s.em);
  }
  return out.str();
}

}  // namespace metaabd::cli
