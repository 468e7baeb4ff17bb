#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "rsl/ast.hpp"
#include "rsl/corpus.hpp"
#include "rsl/eval.hpp"
#include "rsl/parser.hpp"
#include "rsl/pretty.hpp"

using namespace rsl;

namespace {
ConstructorTable tinyTable() {
  ConstructorTable t = ConstructorTable::withBuiltins();
  t.declare("MkA", 0, "Tiny");
  t.declare("MkB", 0, "Tiny");
  t.declare("MkP", 1, "Tiny");
  t.declare("Nil", 0, "List");
  t.declare("A", 0, "AB");
  t.declare("B", 0, "AB");
  return t;
}
}  // namespace

TEST_CASE("beta step on application of a lambda") {
  Env env;
  auto e = mkApp(mkLam("x", mkVar("x")), mkCon("True", {}));
  auto r = step(e, env);
  REQUIRE(r.kind == StepResult::Kind::Reduced);
  CHECK(r.rule == StepRule::Beta);
  CHECK(exprEq(r.next, mkCon("True", {})));
}

TEST_CASE("constructor elimination step") {
  auto t = tinyTable();
  Env env;
  auto e = parseExpr("case Cons A Nil of Cons h t: h | _: B", t);
  auto r = step(e, env);
  REQUIRE(r.kind == StepResult::Kind::Reduced);
  CHECK(r.rule == StepRule::Con);
  CHECK(exprEq(r.next, mkCon("A", {})));
}

TEST_CASE("let steps by substitution") {
  Env env;
  auto bound = mkCon("MkP", {mkCon("MkA", {})});
  auto e = mkLet("x", bound, mkVar("x"));
  auto r = step(e, env);
  REQUIRE(r.kind == StepResult::Kind::Reduced);
  CHECK(r.rule == StepRule::Beta);
  CHECK(exprEq(r.next, bound));
}

TEST_CASE("function unfolding carries the fun rule") {
  Env env;
  env.defs["f"] = mkCon("MkA", {});
  auto r = step(mkFun("f"), env);
  REQUIRE(r.kind == StepResult::Kind::Reduced);
  CHECK(r.rule == StepRule::Fun);
}

TEST_CASE("stuck outcomes") {
  Env env;
  CHECK(step(mkVar("x"), env).stuck == StuckKind::FreeVariable);
  auto caseFree = mkCase(mkVar("x"), {{Pattern{"True", {}, false, {}}, mkCon("True", {})}});
  CHECK(step(caseFree, env).stuck == StuckKind::FreeVariableScrutinee);
  auto t = tinyTable();
  auto noBranch = parseExpr("case A of B: B", t);
  CHECK(step(noBranch, env).stuck == StuckKind::NoMatchingBranch);
  CHECK(step(mkFun("missing"), env).stuck == StuckKind::UndefinedFunction);
}

TEST_CASE("the mutual-exclusion proposition evaluates against concrete states") {
  auto sf = parseProgram(corpus::kExample1);
  auto atom = parseExpr(
      "case s of ObsState s1 s2: case s1 of U: (case s2 of U: False | _: True) | _: True",
      sf.table);
  Env env;
  auto both = substitute(atom, "s", parseExpr("ObsState U U", sf.table));
  auto r1 = evalWHNF(both, env);
  REQUIRE(r1.kind == EvalResult::Kind::Value);
  CHECK(exprEq(r1.expr, mkCon("False", {})));

  auto neither = substitute(atom, "s", parseExpr("ObsState T T", sf.table));
  auto r2 = evalWHNF(neither, env);
  REQUIRE(r2.kind == EvalResult::Kind::Value);
  CHECK(exprEq(r2.expr, mkCon("True", {})));
}

TEST_CASE("divergence exhausts the budget") {
  auto sf = parseProgram("data Event = Tick/0;\nf\nwhere\n  f = f;\n");
  Program p = flatten(sf);
  auto r = evalWHNF(p.top, Env::fromProgram(p), 100);
  CHECK(r.kind == EvalResult::Kind::BudgetExhausted);
}

TEST_CASE("evalGround forces constructor arguments") {
  auto t = tinyTable();
  Env env;
  auto e = parseExpr("Cons ((\\x.x) A) Nil", t);
  auto r = evalGround(e, env);
  REQUIRE(r.kind == EvalResult::Kind::Value);
  CHECK(exprEq(r.expr, mkCon("Cons", {mkCon("A", {}), mkCon("Nil", {})})));
}

TEST_CASE("structural less-than evaluates as hand-derived") {
  // lt Zero (Succ Zero): the outer case selects the Succ branch, then the
  // inner case on Zero yields True. lt (Succ Zero) Zero: the outer case on
  // Zero yields False immediately.
  auto sf = parseProgram(corpus::kExample3);
  Program p = flatten(sf);
  Env env = Env::fromProgram(p);
  auto lt01 = parseExpr("lt Zero (Succ Zero)", sf.table, {"lt"});
  auto r1 = evalGround(lt01, env);
  REQUIRE(r1.kind == EvalResult::Kind::Value);
  CHECK(exprEq(r1.expr, mkCon("True", {})));

  auto lt10 = parseExpr("lt (Succ Zero) Zero", sf.table, {"lt"});
  auto r2 = evalGround(lt10, env);
  REQUIRE(r2.kind == EvalResult::Kind::Value);
  CHECK(exprEq(r2.expr, mkCon("False", {})));
}

TEST_CASE("step is deterministic on random closed terms") {
  std::mt19937 rng(23);
  for (int i = 0; i < 300; ++i) {
    auto e = testutil::randomClosedTerm(rng, 5);
    Env envA, envB;
    auto a = step(e, envA);
    auto b = step(e, envB);
    CHECK(a.kind == b.kind);
    if (a.kind == StepResult::Kind::Reduced) {
      CHECK(a.rule == b.rule);
      CHECK(exprEq(a.next, b.next));
    }
  }
}

TEST_CASE("evalWHNF never returns an application- or case-headed value") {
  std::mt19937 rng(29);
  for (int i = 0; i < 300; ++i) {
    auto e = testutil::randomClosedTerm(rng, 5);
    auto r = evalWHNF(e, Env{}, 500);
    if (r.kind == EvalResult::Kind::Value) {
      CHECK((as<Con>(r.expr) || as<Lam>(r.expr)));
    }
  }
}

TEST_CASE("a larger budget never changes a successful outcome") {
  std::mt19937 rng(31);
  for (int i = 0; i < 200; ++i) {
    auto e = testutil::randomClosedTerm(rng, 5);
    auto small = evalWHNF(e, Env{}, 40);
    if (small.kind == EvalResult::Kind::BudgetExhausted) continue;
    auto big = evalWHNF(e, Env{}, 4000);
    CHECK(small.kind == big.kind);
    CHECK(exprEq(small.expr, big.expr));
    CHECK(small.steps == big.steps);
  }
}

TEST_CASE("runStream collects the observable prefix") {
  auto sf = parseProgram(corpus::kExample1);
  Program p = flatten(sf);
  auto obs = runStream(p, {"Request1", "Take1"}, 3);
  REQUIRE(obs.size() == 3);
  CHECK(prettyExpr(obs[0]) == "ObsState T T");
  CHECK(prettyExpr(obs[1]) == "ObsState W T");
  CHECK(prettyExpr(obs[2]) == "ObsState U T");
}

TEST_CASE("runStream stops when the event prefix is exhausted") {
  auto sf = parseProgram(corpus::kExample1);
  Program p = flatten(sf);
  auto obs = runStream(p, {"Request1"}, 10);
  CHECK(obs.size() == 2);
}
