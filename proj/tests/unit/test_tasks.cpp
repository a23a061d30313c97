#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "metaabd/logic/parser.hpp"
#include "metaabd/tasks/data.hpp"
#include "metaabd/tasks/evaluate.hpp"

using namespace metaabd;
using namespace metaabd::tasks;
namespace fs = std::filesystem;

namespace {

mil::Program fold_program(const char* op) {
  auto s = [](const char* n) { return logic::Symbol::intern(n); };
  return mil::Program({{"chain", {s("f"), s(op), s("f")}}, {"chain", {s("f"), s("eq"), s("head")}}},
                      mil::default_metarules());
}

const char* kSortedCheck =
    "s(A):-s_1(A,B),s(B).\n"
    "s(A):-tail(A,B),empty(B).\n"
    "s_1(A,B):-nn_pred(A),tail(A,B).\n";

mil::Program bogosort_program() {
  auto s = [](const char* n) { return logic::Symbol::intern(n); };
  return mil::Program({{"tripost", {s("f"), s("permute"), s("s")}}}, mil::default_metarules());
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "metaabd_tasks_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

void write_idx(const fs::path& img, const fs::path& lab, std::uint32_t n_img, std::uint32_t n_lab, int bad_label = -1,
               std::uint32_t img_magic = 0x803) {
  std::ofstream a(img, std::ios::binary), b(lab, std::ios::binary);
  put_be32(a, img_magic);
  put_be32(a, n_img);
  put_be32(a, 2);
  put_be32(a, 2);
  for (std::uint32_t i = 0; i < n_img * 4; ++i) a.put(static_cast<char>(i * 40));
  put_be32(b, 0x801);
  put_be32(b, n_lab);
  for (std::uint32_t i = 0; i < n_lab; ++i) b.put(static_cast<char>(static_cast<int>(i) == bad_label ? 12 : i % 10));
}

}  // namespace

TEST_CASE("task specifications") {
  auto sum = make_task(TaskId::Sum);
  REQUIRE(sum.lang.abducibles.size() == 2);
  CHECK(sum.lang.abducibles[0].name.name() == "add");
  CHECK(sum.lang.abducibles[1].name.name() == "eq");
  CHECK(make_task("product").lang.abducibles[0].name.name() == "mult");
  auto bogo = make_task(TaskId::Bogosort);
  CHECK(!bogo.kb.clauses({logic::Symbol::intern("permute"), 3}).empty());
  CHECK(bogo.kb.has_builtin({logic::Symbol::intern("permutation"), 2}));
  CHECK(bogo.lang.abducibles[0].name == make_task(TaskId::SortedConcept).lang.abducibles[0].name);
  CHECK_THROWS_AS(make_task("division"), std::invalid_argument);
}

TEST_CASE("task outputs") {
  CHECK(task_output(TaskId::Sum, {1, 2, 3}) == std::vector<std::int64_t>{6});
  CHECK(task_output(TaskId::Product, {2, 2, 3}) == std::vector<std::int64_t>{12});
  CHECK(task_output(TaskId::Bogosort, {5, 9, 4, 3, 8}) == std::vector<std::int64_t>{3, 1, 4, 5, 2});
}

TEST_CASE("sequence generation") {
  DigitGenerator gen(10, 8, 0.1, 3);
  GenOptions o;
  o.count = 50;
  auto d = gen_sequences(gen, TaskId::Sum, o);
  REQUIRE(d.examples.size() == 50);
  for (const auto& s : d.examples) {
    CHECK(s.items.size() >= 2);
    CHECK(s.items.size() <= 5);
    CHECK(s.y == task_output(TaskId::Sum, s.labels));
    for (const auto& x : s.items) CHECK((x.minCoeff() >= 0.0 && x.maxCoeff() <= 1.0));
  }
  auto sorted = gen_sequences(gen, TaskId::Bogosort, o);
  for (const auto& s : sorted.examples) {
    std::set<int> distinct(s.labels.begin(), s.labels.end());
    CHECK(distinct.size() == s.labels.size());
  }
  o.max_len = 11;
  CHECK_THROWS_AS(gen_sequences(gen, TaskId::Bogosort, o), std::invalid_argument);
  o.max_len = 5;
  o.count = 0;
  CHECK_THROWS_AS(gen_sequences(gen, TaskId::Sum, o), std::invalid_argument);
}

TEST_CASE("dataset files round trip and are reproducible") {
  DigitGenerator gen(10, 4, 0.2, 9);
  GenOptions o;
  o.count = 20;
  o.seed = 4;
  auto d = gen_sequences(gen, TaskId::Bogosort, o);
  write_dataset(d, scratch("a.tsv"));
  write_dataset(gen_sequences(gen, TaskId::Bogosort, o), scratch("b.tsv"));
  CHECK(slurp(scratch("a.tsv")) == slurp(scratch("b.tsv")));
  auto back = read_dataset(scratch("a.tsv"));
  REQUIRE(back.examples.size() == d.examples.size());
  CHECK(back.task == TaskId::Bogosort);
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    CHECK(back.examples[i].y == d.examples[i].y);
    CHECK(back.examples[i].labels == d.examples[i].labels);
    CHECK((back.examples[i].items[0] - d.examples[i].items[0]).cwiseAbs().maxCoeff() < 1e-5);
  }
  write_dataset(d, scratch("c.tsv"), false);
  CHECK(read_dataset(scratch("c.tsv")).examples[0].labels.empty());
  std::ofstream(scratch("bad.tsv")) << "sum\t2\t0.1;0.2\n";
  CHECK_THROWS_AS(read_dataset(scratch("bad.tsv")), std::runtime_error);
}

TEST_CASE("IDX loading") {
  write_idx(scratch("i.idx"), scratch("l.idx"), 3, 3);
  auto items = load_idx(scratch("i.idx"), scratch("l.idx"));
  REQUIRE(items.size() == 3);
  CHECK(items[1].second == 1);
  CHECK(items[0].first.size() == 4);
  CHECK(items[0].first(1) == doctest::Approx(40 / 255.0));
  write_idx(scratch("i.idx"), scratch("l.idx"), 3, 3, 2);
  CHECK_THROWS_AS(load_idx(scratch("i.idx"), scratch("l.idx")), std::runtime_error);
  write_idx(scratch("i.idx"), scratch("l.idx"), 3, 2);
  CHECK_THROWS_AS(load_idx(scratch("i.idx"), scratch("l.idx")), std::runtime_error);
  write_idx(scratch("i.idx"), scratch("l.idx"), 3, 3, -1, 0x801);
  CHECK_THROWS_AS(load_idx(scratch("i.idx"), scratch("l.idx")), std::runtime_error);
}

TEST_CASE("correct programs extrapolate exactly on ground-truth labels") {
  DigitGenerator gen(10, 4, 0.1, 1);
  auto sum = make_task(TaskId::Sum);
  Perception none;
  EvalOptions gt;
  gt.ground_truth = true;
  for (std::size_t len : {1, 5, 10, 100}) {
    GenOptions o;
    o.count = 10;
    o.min_len = o.max_len = len;
    auto m = evaluate(sum, fold_program("add"), none, gen_sequences(gen, TaskId::Sum, o), gt).at(0);
    CHECK(m.mae == 0.0);
    CHECK(m.acc == 1.0);
    CHECK(m.failures == 0);
  }
  auto prod = make_task(TaskId::Product);
  GenOptions o;
  o.count = 10;
  o.min_len = o.max_len = 15;
  o.min_digit = 1;
  auto m = evaluate(prod, fold_program("mult"), none, gen_sequences(gen, TaskId::Product, o), gt).at(0);
  CHECK(m.mae == 0.0);
  CHECK(m.log_mae == 0.0);
}

TEST_CASE("log MAE uses log(1+y)") {
  DigitGenerator gen(10, 4, 0.0, 1);
  auto sum = make_task(TaskId::Sum);
  Dataset d;
  Sequence s;
  s.items = {gen.prototypes()[2], gen.prototypes()[3]};
  s.labels = {2, 3};
  s.y = {7};  // the program will say 5
  d.examples.push_back(s);
  EvalOptions gt;
  gt.ground_truth = true;
  auto m = evaluate(sum, fold_program("add"), {}, d, gt).at(0);
  CHECK(m.mae == 2.0);
  CHECK(m.log_mae == doctest::Approx(std::abs(std::log(6.0) - std::log(8.0))));
}

TEST_CASE("bogosort with a perfect relation sorts every sequence") {
  DigitGenerator gen(10, 4, 0.1, 2);
  auto t = make_task(TaskId::Bogosort);
  install_program(t, logic::parse_clauses(kSortedCheck));
  CHECK(t.lang.primitives.back().name.name() == "s");
  GenOptions o;
  o.count = 20;
  o.min_len = 2;
  o.max_len = 5;
  EvalOptions gt;
  gt.ground_truth = true;
  auto all = evaluate(t, bogosort_program(), {}, gen_sequences(gen, TaskId::Bogosort, o), gt);
  CHECK(all.at(0).perm_acc == 1.0);
  for (const auto& [len, m] : all) CHECK(m.perm_acc <= m.elem_acc);
}

TEST_CASE("few-shot pretraining beats chance on synthetic digits") {
  DigitGenerator gen(10, 32, 0.3, 5);
  std::mt19937_64 rng(1);
  std::vector<nn::Vector> shots;
  for (int c = 0; c < 10; ++c) shots.push_back(gen.sample(c, rng));
  nn::MLP m({32, 64, 10}, 3);
  nn::pretrain_few_shot(m, shots, 100);
  nn::Matrix X(32, 500);
  std::vector<int> y(500);
  for (int i = 0; i < 500; ++i) {
    y[i] = i % 10;
    X.col(i) = gen.sample(y[i], rng);
  }
  CHECK(nn::accuracy(m, X, y) > 0.3);
}
