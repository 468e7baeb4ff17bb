#include <catch2/catch_amalgamated.hpp>

#include "rsl/ast.hpp"
#include "rsl/corpus.hpp"
#include "rsl/parser.hpp"
#include "rsl/restricted.hpp"

using namespace rsl;

TEST_CASE("the shipped restricted forms validate") {
  for (const char* text : {corpus::kExample1Distilled, corpus::kExample2Distilled,
                           corpus::kExample3Distilled}) {
    auto rp = validateRestricted(parseProgram(text));
    CHECK(rp.letVars.empty());
    CHECK(rp.defs.size() >= 6);
  }
}

TEST_CASE("the guard-cascade source forms are rejected") {
  // constructor arguments in calls such as `f es W s2` violate the
  // variables-only argument rule
  try {
    validateRestricted(parseProgram(corpus::kExample1));
    FAIL("example1 source must not validate");
  } catch (const ValidateError& e) {
    CHECK(e.kind == RestrictedViolation::NonVariableCallArgument);
  }
  CHECK_THROWS_AS(validateRestricted(parseProgram(corpus::kExample3)), ValidateError);
}

TEST_CASE("a non-variable scrutinee is reported") {
  auto sf = parseProgram(
      "data Event = Tick/0;\n"
      "f es\nwhere\n"
      "  f = \\es. case g es of True: f es | _: f es;\n"
      "  g = \\es. True;\n");
  try {
    validateRestricted(sf);
    FAIL("expected NonVariableScrutinee");
  } catch (const ValidateError& e) {
    CHECK(e.kind == RestrictedViolation::NonVariableScrutinee);
  }
}

TEST_CASE("a let-bound scrutinee is reported") {
  auto sf = parseProgram(
      "data Event = Tick/0;\n"
      "f es\nwhere\n"
      "  f = \\es. let g = \\x. x in case g of Cons h t: f t | _: f es;\n");
  try {
    validateRestricted(sf);
    FAIL("expected LetBoundScrutinee");
  } catch (const ValidateError& e) {
    CHECK(e.kind == RestrictedViolation::LetBoundScrutinee);
  }
}

TEST_CASE("an unsaturated call is reported") {
  auto sf = parseProgram(
      "data Event = Tick/0;\ndata State = ObsState/2;\ndata ProcState = T/0;\n"
      "f es\nwhere\n"
      "  f = \\es. Cons (ObsState T T) (case es of Cons e es: f);\n");
  try {
    validateRestricted(sf);
    FAIL("expected UnsaturatedCall");
  } catch (const ValidateError& e) {
    CHECK(e.kind == RestrictedViolation::UnsaturatedCall);
  }
}

TEST_CASE("a bare lambda outside a binding is rejected") {
  auto sf = parseProgram(
      "data Event = Tick/0;\n"
      "f es\nwhere\n"
      "  f = \\es. Cons (\\x. x) (f es);\n");
  try {
    validateRestricted(sf);
    FAIL("expected NonRestrictedExpression");
  } catch (const ValidateError& e) {
    CHECK(e.kind == RestrictedViolation::NonRestrictedExpression);
  }
}

TEST_CASE("let binders join the abstraction set") {
  auto sf = parseProgram(
      "data Event = Tick/0;\ndata State = ObsState/2;\ndata ProcState = T/0;\n"
      "f es\nwhere\n"
      "  f = \\es. let g = \\es2. f es2 in Cons (ObsState T T) (g es);\n");
  auto rp = validateRestricted(sf);
  CHECK(rp.letVars == std::set<Name>{"g"});
}

TEST_CASE("an application headed by a non-abstracted variable is rejected") {
  auto sf = parseProgram(
      "data Event = Tick/0;\n"
      "f es\nwhere\n"
      "  f = \\es. es es;\n");
  try {
    validateRestricted(sf);
    FAIL("expected NonRestrictedExpression");
  } catch (const ValidateError& e) {
    CHECK(e.kind == RestrictedViolation::NonRestrictedExpression);
  }
}
