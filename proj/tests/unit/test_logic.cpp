#include <random>
#include <set>

#include "doctest.h"
#include "metaabd/logic/deduce.hpp"
#include "metaabd/logic/parser.hpp"

using namespace metaabd::logic;

namespace {

// Fully dereferences a term by repeated substitution until nothing changes.
Term fixpoint(const Substitution& s, Term t) {
  for (int i = 0; i < 64; ++i) {
    Term next = apply(s, t);
    if (next == t) return t;
    t = next;
  }
  return t;
}

Term random_term(std::mt19937& rng, const std::vector<Term>& vars, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 5 : 2);
  switch (pick(rng)) {
    case 0: return vars[rng() % vars.size()];
    case 1: return Term::integer(static_cast<int>(rng() % 7) - 2);
    case 2: return Term::sym(std::string(1, static_cast<char>('a' + rng() % 3)));
    case 3: return Term::compound("g", {random_term(rng, vars, depth - 1)});
    case 4:
      return Term::compound("f", {random_term(rng, vars, depth - 1), random_term(rng, vars, depth - 1)});
    default: {
      std::vector<Term> items;
      const int n = static_cast<int>(rng() % 3);
      for (int i = 0; i < n; ++i) items.push_back(random_term(rng, vars, depth - 1));
      Term tail = rng() % 3 == 0 ? vars[rng() % vars.size()] : Term::nil();
      return Term::list(items, tail);
    }
  }
}

Atom goal(std::string_view text) { return Atom::from_term(parse_term(text)); }

}  // namespace

TEST_CASE("unify binds a variable to a constant") {
  Term x = Term::fresh_var();
  auto s = unify(x, Term::integer(3));
  REQUIRE(s);
  CHECK(apply(*s, x) == Term::integer(3));
  CHECK(s->size() == 1);
}

TEST_CASE("unify fails on a clash through a shared variable") {
  Term x = Term::fresh_var();
  CHECK_FALSE(unify(Term::compound("f", {x, x}), Term::compound("f", {Term::integer(1), Term::integer(2)})));
}

TEST_CASE("unify nested terms") {
  Term x = Term::fresh_var(), y = Term::fresh_var(), z = Term::fresh_var();
  Term a = Term::compound("f", {x, Term::compound("g", {y})});
  Term b = Term::compound("f", {Term::compound("g", {z}), Term::compound("g", {Term::integer(2)})});
  auto s = unify(a, b);
  REQUIRE(s);
  CHECK(apply(*s, a) == apply(*s, b));
  CHECK(apply(*s, x) == Term::compound("g", {z}));
  CHECK(apply(*s, y) == Term::integer(2));
}

TEST_CASE("occurs check rejects cyclic bindings") {
  Term x = Term::fresh_var();
  CHECK_FALSE(unify(x, Term::compound("g", {x})));
  Bindings b;
  CHECK(b.unify(x, Term::compound("g", {x}), false));
}

TEST_CASE("apply") {
  Term x = Term::fresh_var(), y = Term::fresh_var();
  auto s = unify(x, Term::integer(1));
  REQUIRE(s);
  CHECK(apply(*s, Term::list(std::vector<Term>{x, y})) == Term::list(std::vector<Term>{Term::integer(1), y}));
  Term t = Term::compound("h", {x, y});
  CHECK(apply(Substitution{}, t) == t);

  Substitution chain;
  chain.bind(x.var_id(), y);
  chain.bind(y.var_id(), Term::integer(2));
  CHECK(fixpoint(chain, x) == Term::integer(2));
  CHECK(apply(chain, x) == Term::integer(2));
}

TEST_CASE("substitutions are idempotent and unification is symmetric") {
  std::mt19937 rng(7);
  std::vector<Term> vars;
  for (int i = 0; i < 4; ++i) vars.push_back(Term::fresh_var());
  int unified = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    Term a = random_term(rng, vars, 3);
    Term b = random_term(rng, vars, 3);
    auto ab = unify(a, b);
    auto ba = unify(b, a);
    REQUIRE(ab.has_value() == ba.has_value());
    if (!ab) continue;
    ++unified;
    CHECK(apply(*ab, a) == apply(*ab, b));
    CHECK(apply(*ab, apply(*ab, a)) == apply(*ab, a));
    // the two unifiers agree up to renaming
    CHECK(is_variant(apply(*ab, a), apply(*ba, a)));
    for (const auto& [v, t] : ab->bindings()) {
      std::vector<VarId> inner;
      collect_vars(t, inner);
      CHECK(std::find(inner.begin(), inner.end(), v) == inner.end());
    }
  }
  CHECK(unified > 100);
}

TEST_CASE("rename_apart") {
  auto cs = parse_clauses("p(X) :- q(X).");
  REQUIRE(cs.size() == 1);
  Clause r1 = rename_apart(cs[0]);
  Clause r2 = rename_apart(cs[0]);
  CHECK(is_variant(r1, cs[0]));
  CHECK(r1.head.args[0] == r1.body[0].args[0]);
  auto v0 = clause_vars(cs[0]), v1 = clause_vars(r1), v2 = clause_vars(r2);
  CHECK(v1.size() == 1);
  CHECK(v1[0] != v0[0]);
  CHECK(v1[0] != v2[0]);

  auto ground = parse_clauses("p(1, [a]) :- q(b).");
  CHECK(rename_apart(ground[0]) == ground[0]);
}

TEST_CASE("parse_program") {
  auto cs = parse_clauses("head([H|_],H).");
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].is_fact());
  CHECK(cs[0].head.args[0].is_cons());
  CHECK(cs[0].head.args[0].arg(0) == cs[0].head.args[1]);

  CHECK(parse_program("").clause_count() == 0);

  auto rule = parse_clauses("f(X) :- g(X), h(X).");
  REQUIRE(rule.size() == 1);
  CHECK(rule[0].body.size() == 2);

  KnowledgeBase kb = parse_program("a(1). b(2). a(3). % trailing comment\n");
  CHECK(kb.clauses({Symbol::intern("a"), 1}).size() == 2);
  CHECK(kb.clauses({Symbol::intern("b"), 1}).size() == 1);
  CHECK(kb.clauses({Symbol::intern("a"), 2}).empty());
}

TEST_CASE("parse errors carry a position") {
  try {
    parse_clauses("p(X) :- q(X).\nr(Y :- s.");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 1);
  }
  CHECK_THROWS_AS(parse_clauses("p(X)"), ParseError);
  CHECK_THROWS_AS(parse_clauses("[a]."), ParseError);
  CHECK_THROWS_AS(parse_program("length(a, 1)."), std::invalid_argument);
}

TEST_CASE("parse, print, parse is a fixed point") {
  const char* src =
      "head([H|_],H).\n"
      "tail([_|T],T).\n"
      "empty([]).\n"
      "permute(L1,O,L2) :- length(L1,N), numlist(1,N,O1), permutation(O1,O), permute1(L1,O,L2).\n"
      "permute1([],[],_).\n"
      "permute1([S|List],[O|Os],List2) :- nth1(O,List2,S), permute1(List,Os,List2).\n"
      "q('Odd atom', -3, [a,b|c], f(g(X), [X|Y]), Y).\n";
  auto first = parse_clauses(src);
  std::string printed;
  for (const Clause& c : first) printed += to_string(c) + "\n";
  auto second = parse_clauses(printed);
  REQUIRE(first.size() == second.size());
  std::string reprinted;
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(is_variant(first[i], second[i]));
    reprinted += to_string(second[i]) + "\n";
  }
  CHECK(printed == reprinted);
}

TEST_CASE("list terms round-trip through print and parse") {
  std::mt19937 rng(11);
  std::vector<Term> vars{Term::fresh_var(), Term::fresh_var()};
  for (int i = 0; i < 500; ++i) {
    Term t = random_term(rng, vars, 3);
    CHECK(is_variant(parse_term(to_string(t)), t));
  }
}

TEST_CASE("deduce with list primitives") {
  KnowledgeBase kb = parse_program("head([H|_],H). tail([_|T],T). empty([]).");
  Term h = Term::fresh_var();
  auto r = deduce(Atom("head", {parse_term("[1,2]"), h}), kb);
  REQUIRE(r.solutions.size() == 1);
  CHECK(apply(r.solutions[0], h) == Term::integer(1));
  CHECK_FALSE(r.resource_exceeded);

  CHECK(deduce(goal("empty([1])"), kb).solutions.empty());

  auto ground = deduce(goal("tail([1,2],[2])"), kb);
  REQUIRE(ground.solutions.size() == 1);
  CHECK(ground.solutions[0].empty());
}

TEST_CASE("permutation builtin enumerates n! orderings") {
  KnowledgeBase kb = KnowledgeBase::with_standard_builtins();
  Term p = Term::fresh_var();
  auto r = deduce(Atom("permutation", {parse_term("[1,2,3]"), p}), kb);
  REQUIRE(r.solutions.size() == 6);
  std::set<std::string> seen;
  for (const auto& s : r.solutions) seen.insert(to_string(apply(s, p)));
  CHECK(seen.size() == 6);
  CHECK(to_string(apply(r.solutions.front(), p)) == "[1,2,3]");
  CHECK(to_string(apply(r.solutions.back(), p)) == "[3,2,1]");
}

TEST_CASE("builtins") {
  KnowledgeBase kb = KnowledgeBase::with_standard_builtins();
  Term x = Term::fresh_var();
  auto len = deduce(Atom("length", {parse_term("[a,b,c]"), x}), kb);
  REQUIRE(len.solutions.size() == 1);
  CHECK(apply(len.solutions[0], x) == Term::integer(3));

  auto made = deduce(Atom("length", {x, Term::integer(2)}), kb);
  REQUIRE(made.solutions.size() == 1);
  CHECK(list_elements(apply(made.solutions[0], x))->size() == 2);

  auto nl = deduce(Atom("numlist", {Term::integer(1), Term::integer(4), x}), kb);
  REQUIRE(nl.solutions.size() == 1);
  CHECK(to_string(apply(nl.solutions[0], x)) == "[1,2,3,4]");
  auto empty = deduce(Atom("numlist", {Term::integer(1), Term::integer(0), x}), kb);
  REQUIRE(empty.solutions.size() == 1);
  CHECK(apply(empty.solutions[0], x) == Term::nil());

  CHECK(deduce(Atom("between", {Term::integer(2), Term::integer(5), x}), kb).solutions.size() == 4);
  CHECK(deduce(goal("between(2,5,7)"), kb).solutions.empty());

  auto nth = deduce(Atom("nth1", {Term::integer(2), parse_term("[a,b,c]"), x}), kb);
  REQUIRE(nth.solutions.size() == 1);
  CHECK(apply(nth.solutions[0], x) == Term::sym("b"));
  CHECK(deduce(Atom("nth1", {x, parse_term("[a,b,a]"), Term::sym("a")}), kb).solutions.size() == 2);

  CHECK(deduce(goal("'<'(1,2)"), kb).solutions.size() == 1);
  CHECK(deduce(goal("'>='(1,2)"), kb).solutions.empty());
}

TEST_CASE("permute places items by rank") {
  KnowledgeBase kb = parse_program(
      "permute(L1,O,L2) :- length(L1,N), numlist(1,N,O1), permutation(O1,O), length(L2,N), permute1(L1,O,L2).\n"
      "permute1([],[],_).\n"
      "permute1([S|List],[O|Os],List2) :- nth1(O,List2,S), permute1(List,Os,List2).\n");
  Term out = Term::fresh_var();
  auto r = deduce(Atom("permute", {parse_term("[a,b,c]"), parse_term("[3,1,2]"), out}), kb);
  REQUIRE(r.solutions.size() == 1);
  CHECK(to_string(apply(r.solutions[0], out)) == "[b,c,a]");
  Term order = Term::fresh_var();
  CHECK(deduce(Atom("permute", {parse_term("[a,b,c,d]"), order, out}), kb).solutions.size() == 24);
}

TEST_CASE("depth limit is reported apart from failure") {
  KnowledgeBase kb = parse_program("loop(X) :- loop(X). nat(0). nat(s(X)) :- nat(X).");
  auto r = deduce(goal("loop(a)"), kb, 50);
  CHECK(r.solutions.empty());
  CHECK(r.resource_exceeded);

  auto fail = deduce(goal("nat(a)"), kb, 50);
  CHECK(fail.solutions.empty());
  CHECK_FALSE(fail.resource_exceeded);

  Term x = Term::fresh_var();
  auto some = deduce(Atom("nat", {x}), kb, 512, 5);
  CHECK(some.solutions.size() == 5);
  CHECK(to_string(apply(some.solutions[4], x)) == "s(s(s(s(0))))");
}

TEST_CASE("deduce on a ground goal binds nothing") {
  KnowledgeBase kb = parse_program("p(X) :- q(X, Y), r(Y). q(1, 2). r(2).");
  auto r = deduce(goal("p(1)"), kb);
  REQUIRE(r.solutions.size() == 1);
  CHECK(r.solutions[0].empty());
}

TEST_CASE("canonical clause printing") {
  auto cs = parse_clauses("f(Xs, Out) :- add(Xs, Mid), f(Mid, Out).");
  CHECK(to_string(cs[0]) == "f(A,B):-add(A,C),f(C,B).");
}
