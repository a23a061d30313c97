#include <cmath>
#include <random>

#include "doctest.h"
#include "fd_oracle.hpp"

using namespace metaabd::fd;

namespace {

std::vector<double> uniform10() { return std::vector<double>(10, std::log(0.1)); }

std::vector<double> peaked(std::int64_t at, double p) {
  std::vector<double> w(10, std::log((1.0 - p) / 9.0));
  w[static_cast<std::size_t>(at)] = std::log(p);
  return w;
}

}  // namespace

TEST_CASE("domain basics") {
  Domain d(0, 9);
  CHECK(d.size() == 10);
  CHECK(d.tracks_holes());
  CHECK(d.remove(4));
  CHECK_FALSE(d.contains(4));
  CHECK(d.size() == 9);
  CHECK(d.restrict(3, 5));
  CHECK(d.values() == std::vector<std::int64_t>{3, 5});
  CHECK(d.remove(3));
  CHECK(d.fixed());
  CHECK(d.min() == 5);

  Domain wide(0, 1'000'000'000);
  CHECK_FALSE(wide.tracks_holes());
  CHECK(wide.size() == 1'000'000'001);
  wide.restrict(10, 20);
  CHECK(wide.size() == 11);
}

TEST_CASE("posting an addition narrows the result by interval arithmetic") {
  ConstraintStore s;
  VarIndex x = s.add_var(0, 9), y = s.add_var(0, 9), n = s.add_var(0, 1000);
  REQUIRE(s.post(Add{x, y, n}));
  CHECK(s.domain(n).min() == 0);
  CHECK(s.domain(n).max() == 18);

  REQUIRE(s.post(EqConst{n, 15}));
  CHECK(s.domain(n).fixed());
  CHECK(s.domain(x).min() == 6);
  CHECK(s.domain(x).max() == 9);
  CHECK(s.domain(y).values() == std::vector<std::int64_t>{6, 7, 8, 9});

  ConstraintStore t;
  VarIndex a = t.add_var(0, 9), b = t.add_var(0, 9), m = t.add_var(0, 1000);
  t.post(Add{a, b, m});
  CHECK_FALSE(t.post(EqConst{m, 100}));
  CHECK_FALSE(t.feasible());
}

TEST_CASE("multiplication filters divisors") {
  ConstraintStore s;
  VarIndex x = s.add_var(1, 9), y = s.add_var(1, 9), z = s.add_var(0, 81);
  s.post(Mul{x, y, z});
  REQUIRE(s.post(EqConst{z, 12}));
  // oracle: every (a,b) in 1..9 with a*b == 12
  std::vector<std::int64_t> expect;
  for (int a = 1; a <= 9; ++a) {
    for (int b = 1; b <= 9; ++b) {
      if (a * b == 12) {
        expect.push_back(a);
        break;
      }
    }
  }
  CHECK(s.domain(x).values() == expect);
  CHECK(s.domain(y).values() == expect);
}

TEST_CASE("propagation without constraints changes nothing") {
  ConstraintStore s;
  s.add_var(0, 9);
  s.add_weighted_var(uniform10());
  auto before = s.domains();
  CHECK(s.propagate());
  CHECK(s.domains() == before);
}

TEST_CASE("nonnegative chain summing to zero forces zeros") {
  ConstraintStore s;
  VarIndex a = s.add_var(0, 9), b = s.add_var(0, 9), c = s.add_var(0, 9);
  VarIndex m = s.add_var(0, 27), n = s.add_var(0, 27);
  s.post(Add{a, b, m});
  s.post(Add{m, c, n});
  REQUIRE(s.post(EqConst{n, 0}));
  for (VarIndex v : {a, b, c, m}) {
    CHECK(s.domain(v).fixed());
    CHECK(s.domain(v).min() == 0);
  }
}

TEST_CASE("solve_best on a two-digit sum") {
  ConstraintStore s;
  VarIndex a = s.add_weighted_var(peaked(1, 0.8));
  VarIndex b = s.add_weighted_var(peaked(2, 0.7));
  VarIndex n = s.add_var(0, 18);
  s.post(Add{a, b, n});
  s.post(EqConst{n, 3});
  auto best = solve_best(s);
  REQUIRE(best);
  CHECK(best->assignment == std::vector<std::pair<VarIndex, std::int64_t>>{{a, 1}, {b, 2}});
  CHECK(best->log_prob == doctest::Approx(std::log(0.56)).epsilon(1e-12));

  auto all = solve_all(s);
  CHECK(all.labelings.size() == 4);
  CHECK_FALSE(all.truncated);
  CHECK(all.labelings.front().assignment == best->assignment);
}

TEST_CASE("forced and infeasible stores") {
  ConstraintStore s;
  VarIndex v = s.add_weighted_var(peaked(2, 0.99));
  s.post(EqConst{v, 7});
  auto best = solve_best(s);
  REQUIRE(best);
  CHECK(best->assignment.front().second == 7);
  CHECK(solve_all(s).labelings.size() == 1);

  ConstraintStore bad;
  VarIndex x = bad.add_weighted_var(uniform10()), y = bad.add_weighted_var(uniform10());
  VarIndex z = bad.add_var(0, 1000);
  bad.post(Add{x, y, z});
  bad.post(EqConst{z, 200});
  CHECK_FALSE(solve_best(bad));
  CHECK(solve_all(bad).labelings.empty());
}

TEST_CASE("ties go to the lexicographically smallest assignment") {
  ConstraintStore s;
  VarIndex a = s.add_weighted_var(uniform10()), b = s.add_weighted_var(uniform10());
  VarIndex n = s.add_var(0, 18);
  s.post(Add{a, b, n});
  s.post(EqConst{n, 9});
  auto best = solve_best(s);
  REQUIRE(best);
  CHECK(best->assignment == std::vector<std::pair<VarIndex, std::int64_t>>{{a, 0}, {b, 9}});
}

TEST_CASE("solve_all cap sets the truncated flag") {
  ConstraintStore s;
  s.add_weighted_var(uniform10());
  s.add_weighted_var(uniform10());
  auto r = solve_all(s, 5);
  CHECK(r.truncated);
  CHECK(r.labelings.size() == 5);
}

TEST_CASE("node budget exhaustion returns best so far") {
  ConstraintStore s;
  for (int i = 0; i < 5; ++i) s.add_weighted_var(uniform10());
  SolveStats st;
  SolveOptions o;
  o.node_budget = 3;
  auto r = solve_best(s, &st, o);
  CHECK(st.truncated);
  CHECK(st.nodes <= 3);
  (void)r;
}

TEST_CASE("wide product intermediates stay tractable") {
  ConstraintStore s;
  std::vector<VarIndex> digits;
  for (int i = 0; i < 15; ++i) {
    std::vector<double> w(10, -1e9);
    w[0] = -50.0;  // zero is possible but never preferred
    for (int d = 1; d < 10; ++d) w[static_cast<std::size_t>(d)] = std::log(0.1 + 0.01 * d);
    digits.push_back(s.add_weighted_var(w));
  }
  std::int64_t max = 1;
  for (int i = 0; i < 15; ++i) max *= 9;
  VarIndex acc = digits[0];
  for (int i = 1; i < 15; ++i) {
    VarIndex next = s.add_var(0, max);
    s.post(Mul{acc, digits[static_cast<std::size_t>(i)], next});
    acc = next;
  }
  s.post(EqConst{acc, max});
  SolveStats st;
  auto best = solve_best(s, &st);
  REQUIRE(best);
  for (const auto& [_, v] : best->assignment) CHECK(v == 9);
  CHECK_FALSE(st.truncated);
}

TEST_CASE("dump uses the constraint notation") {
  ConstraintStore s;
  VarIndex a = s.add_weighted_var(uniform10()), b = s.add_weighted_var(uniform10());
  VarIndex n = s.add_var(0, 18);
  s.post(Add{a, b, n});
  s.post(EqConst{n, 15});
  CHECK(s.dump() == "x0+x1#=v2\nv2#=15\n");
}

TEST_CASE("solver agrees with brute force on random stores") {
  std::mt19937_64 rng(20240611);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    oracle::Problem p = oracle::random_problem(rng);
    ConstraintStore s = oracle::build(p);
    auto expect = oracle::best_answer(p);
    auto got = solve_best(s);
    REQUIRE(expect.has_value() == got.has_value());
    if (!expect) continue;
    ++feasible;
    std::vector<std::int64_t> values;
    for (const auto& [_, v] : got->assignment) values.push_back(v);
    CHECK(values == expect->values);
    CHECK(std::abs(got->log_prob - expect->log_prob) <= 1e-12);

    auto all = solve_all(s);
    CHECK(all.labelings.size() == oracle::all_answers(p).size());
    CHECK(all.labelings.front().assignment == got->assignment);
  }
  CHECK(feasible > 50);
}

TEST_CASE("propagation never removes a value used by some solution") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    oracle::Problem p = oracle::random_problem(rng);
    ConstraintStore s = oracle::build(p);
    for (const auto& a : oracle::all_answers(p)) {
      for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(s.domain(i).contains(a.values[i]));
    }
  }
}

TEST_CASE("adding a constraint never raises the best score") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    oracle::Problem p = oracle::random_problem(rng);
    auto before = solve_best(oracle::build(p));
    oracle::Problem q = p;
    oracle::Problem extra = oracle::random_problem(rng);
    std::size_t n = p.var_count();
    for (auto c : extra.constraints) {
      if (auto* e = std::get_if<EqConst>(&c)) {
        q.constraints.push_back(EqConst{e->x % n, e->c});
        break;
      }
    }
    auto after = solve_best(oracle::build(q));
    if (!before) {
      CHECK_FALSE(after);
    } else if (after) {
      CHECK(after->log_prob <= before->log_prob);
    }
  }
}
