#include <catch2/catch_amalgamated.hpp>

#include "rsl/ast.hpp"
#include "rsl/corpus.hpp"
#include "rsl/eval.hpp"
#include "rsl/ltl.hpp"
#include "rsl/parser.hpp"

using namespace rsl;

namespace {
constexpr TruthVal T = TruthVal::True;
constexpr TruthVal F = TruthVal::False;
constexpr TruthVal U = TruthVal::Undefined;
const TruthVal kAll[3] = {T, F, U};
}  // namespace

TEST_CASE("conjunction table matches rule (1) exhaustively") {
  // case P(lhs) of True: P(rhs) | False: False | Undefined:
  //   (case P(rhs) of False: False | _: Undefined)
  CHECK(kAnd(T, T) == T);
  CHECK(kAnd(T, F) == F);
  CHECK(kAnd(T, U) == U);
  CHECK(kAnd(F, T) == F);
  CHECK(kAnd(F, F) == F);
  CHECK(kAnd(F, U) == F);
  CHECK(kAnd(U, T) == U);
  CHECK(kAnd(U, F) == F);
  CHECK(kAnd(U, U) == U);
}

TEST_CASE("disjunction table matches rule (2) exhaustively") {
  CHECK(kOr(T, T) == T);
  CHECK(kOr(T, F) == T);
  CHECK(kOr(T, U) == T);
  CHECK(kOr(F, T) == T);
  CHECK(kOr(F, F) == F);
  CHECK(kOr(F, U) == U);
  CHECK(kOr(U, T) == T);
  CHECK(kOr(U, F) == U);
  CHECK(kOr(U, U) == U);
}

TEST_CASE("implication table matches rule (3) exhaustively") {
  CHECK(kImplies(T, T) == T);
  CHECK(kImplies(T, F) == F);
  CHECK(kImplies(T, U) == U);
  CHECK(kImplies(F, T) == T);
  CHECK(kImplies(F, F) == T);
  CHECK(kImplies(F, U) == T);
  CHECK(kImplies(U, T) == T);
  CHECK(kImplies(U, F) == U);
  CHECK(kImplies(U, U) == U);
}

TEST_CASE("negation table matches rule (4) exhaustively") {
  CHECK(kNot(T) == F);
  CHECK(kNot(F) == T);
  CHECK(kNot(U) == U);
}

TEST_CASE("replacing Undefined by a definite value never flips a definite output") {
  auto refines = [](TruthVal from, TruthVal to) { return from == to || from == U; };
  auto check2 = [&](TruthVal (*op)(TruthVal, TruthVal)) {
    for (TruthVal a : kAll)
      for (TruthVal b : kAll)
        for (TruthVal a2 : kAll)
          for (TruthVal b2 : kAll)
            if (refines(a, a2) && refines(b, b2)) CHECK(refines(op(a, b), op(a2, b2)));
  };
  check2(kAnd);
  check2(kOr);
  check2(kImplies);
  for (TruthVal a : kAll)
    for (TruthVal a2 : kAll)
      if (refines(a, a2)) CHECK(refines(kNot(a), kNot(a2)));
}

TEST_CASE("conjunction and disjunction are commutative on all nine pairs") {
  for (TruthVal a : kAll)
    for (TruthVal b : kAll) {
      CHECK(kAnd(a, b) == kAnd(b, a));
      CHECK(kOr(a, b) == kOr(b, a));
    }
}

TEST_CASE("the mutual-exclusion property parses to an always over one atom") {
  auto sf = parseProgram(corpus::kExample1);
  auto phi = parseFormula(corpus::kMutex, sf.table);
  const auto* g = asF<FAlways>(phi);
  REQUIRE(g);
  CHECK(asF<FAtom>(g->arg));
}

TEST_CASE("the non-starvation property parses to always-implies-eventually") {
  auto sf = parseProgram(corpus::kExample1);
  auto phi = parseFormula(corpus::kNonStarve1, sf.table);
  const auto* g = asF<FAlways>(phi);
  REQUIRE(g);
  const auto* imp = asF<FImplies>(g->arg);
  REQUIRE(imp);
  CHECK(asF<FAtom>(imp->lhs));
  CHECK(asF<FEventually>(imp->rhs));
}

TEST_CASE("next nests") {
  ConstructorTable t = ConstructorTable::withBuiltins();
  auto phi = parseFormula("X X {True}", t);
  const auto* x1 = asF<FNext>(phi);
  REQUIRE(x1);
  const auto* x2 = asF<FNext>(x1->arg);
  REQUIRE(x2);
  CHECK(asF<FAtom>(x2->arg));
}

TEST_CASE("temporal operators inside atoms are rejected") {
  ConstructorTable t = ConstructorTable::withBuiltins();
  CHECK_THROWS_AS(parseFormula("G { G }", t), TemporalInAtom);
  CHECK_THROWS_AS(parseFormula("{ F }", t), TemporalInAtom);
}

TEST_CASE("atoms may only mention the state variable") {
  ConstructorTable t = ConstructorTable::withBuiltins();
  CHECK_THROWS_AS(parseFormula("{ other }", t), FormulaError);
  CHECK_NOTHROW(parseFormula("{ s }", t));
}

TEST_CASE("substState substitutes the state for s") {
  auto sf = parseProgram(corpus::kExample1);
  auto atom =
      parseExpr("case s of ObsState s1 s2: case s1 of U: (case s2 of U: False | _: True) | _: True",
                sf.table);
  Env env;

  auto uu = evalGround(substState(atom, parseExpr("ObsState U U", sf.table)), env);
  REQUIRE(uu.kind == EvalResult::Kind::Value);
  CHECK(exprEq(uu.expr, mkCon("False", {})));

  auto tu = evalGround(substState(atom, parseExpr("ObsState T U", sf.table)), env);
  REQUIRE(tu.kind == EvalResult::Kind::Value);
  CHECK(exprEq(tu.expr, mkCon("True", {})));

  auto constant = substState(mkCon("True", {}), parseExpr("ObsState W W", sf.table));
  CHECK(exprEq(constant, mkCon("True", {})));
}

TEST_CASE("evalAtom classifies outcomes") {
  auto sf = parseProgram(corpus::kExample1);
  auto atom = parseExpr("case s of ObsState s1 s2: case s1 of U: True | _: False", sf.table);
  Env env;
  auto ok = evalAtom(atom, parseExpr("ObsState U T", sf.table), env);
  CHECK(ok.kind == AtomOutcome::Kind::Value);
  CHECK(ok.value == TruthVal::True);

  // an abstracted component leaves the proposition undecided
  auto stuck = evalAtom(atom, mkCon("ObsState", {mkVar("w"), mkCon("T", {})}), env);
  CHECK(stuck.kind == AtomOutcome::Kind::FreeVariable);

  auto notTruth = evalAtom(mkVar("s"), parseExpr("ObsState U T", sf.table), env);
  CHECK(notTruth.kind == AtomOutcome::Kind::NotTruthVal);
}
