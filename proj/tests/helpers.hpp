#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rsl/ast.hpp"
#include "rsl/ltl.hpp"
#include "rsl/parser.hpp"

// Shared test utilities: deterministic random machines in canonical stream
// shape, random formulas built from a small atom pool, and random closed
// terms for evaluator properties.

namespace testutil {

using rsl::Name;

inline const std::vector<Name>& machineEvents() {
  static const std::vector<Name> evs = {"Request1", "Request2", "Take1",
                                        "Take2",    "Release1", "Release2"};
  return evs;
}

inline const char* kMachinePrelude =
    "data Event = Request1/0 | Request2/0 | Take1/0 | Take2/0 | Release1/0 | Release2/0;\n"
    "data State = ObsState/2;\n"
    "data ProcState = T/0 | W/0 | U/0;\n\n";

// A random reactive machine in canonical shape. Every state either moves
// uniformly (single wildcard branch) or waits with one explicit escape and a
// wildcard self-loop; formulas built by randomFormula are path-insensitive
// over this class, so the rule engine and the oracle must agree on defined
// verdicts.
inline std::string randomMachineText(std::mt19937& rng, int maxFunctions = 8) {
  std::uniform_int_distribution<int> nFunDist(1, maxFunctions);
  int n = nFunDist(rng);
  std::uniform_int_distribution<int> target(1, n);
  std::uniform_int_distribution<int> proc(0, 2);
  std::uniform_int_distribution<int> mode(0, 2);
  std::uniform_int_distribution<size_t> ev(0, machineEvents().size() - 1);
  const char* procs[] = {"T", "W", "U"};
  std::ostringstream os;
  os << kMachinePrelude;
  os << "f1 es\nwhere\n";
  for (int i = 1; i <= n; ++i) {
    os << "  f" << i << " = \\es. Cons (ObsState " << procs[proc(rng)] << " "
       << procs[proc(rng)] << ") (case es of Cons e es: case e of ";
    switch (mode(rng)) {
      case 0:  // uniform move
        os << "_: f" << target(rng) << " es";
        break;
      case 1:  // wait with a single escape
        os << machineEvents()[ev(rng)] << ": f" << target(rng) << " es | _: f" << i << " es";
        break;
      default:  // sink
        os << "_: f" << i << " es";
        break;
    }
    os << ");\n";
  }
  return os.str();
}

inline const std::vector<std::string>& atomPool() {
  static const std::vector<std::string> pool = {
      "case s of ObsState s1 s2: case s1 of T: True | _: False",
      "case s of ObsState s1 s2: case s1 of W: True | _: False",
      "case s of ObsState s1 s2: case s1 of U: True | _: False",
      "case s of ObsState s1 s2: case s2 of T: True | _: False",
      "case s of ObsState s1 s2: case s2 of W: True | _: False",
      "case s of ObsState s1 s2: case s2 of U: True | _: False",
      "True",
      "False",
  };
  return pool;
}

// Random stutter-insensitive formula (no X) of bounded depth.
inline std::string randomFormulaText(std::mt19937& rng, int depth = 3) {
  std::uniform_int_distribution<int> pick(0, 99);
  std::uniform_int_distribution<size_t> atom(0, atomPool().size() - 1);
  if (depth == 0) return "{" + atomPool()[atom(rng)] + "}";
  int r = pick(rng);
  if (r < 20) return "{" + atomPool()[atom(rng)] + "}";
  if (r < 35) return "~" + randomFormulaText(rng, depth - 1);
  if (r < 50)
    return "(" + randomFormulaText(rng, depth - 1) + " /\\ " + randomFormulaText(rng, depth - 1) +
           ")";
  if (r < 65)
    return "(" + randomFormulaText(rng, depth - 1) + " \\/ " + randomFormulaText(rng, depth - 1) +
           ")";
  if (r < 80)
    return "(" + randomFormulaText(rng, depth - 1) + " => " + randomFormulaText(rng, depth - 1) +
           ")";
  if (r < 90) return "G " + randomFormulaText(rng, depth - 1);
  return "F " + randomFormulaText(rng, depth - 1);
}

// Random closed term over a tiny signature, for evaluator properties. May get
// stuck or diverge; both are legitimate outcomes for the properties tested.
inline rsl::ExprPtr randomClosedTerm(std::mt19937& rng, int depth,
                                     std::vector<Name> scope = {}) {
  using namespace rsl;
  std::uniform_int_distribution<int> pick(0, 99);
  int r = pick(rng);
  auto var = [&]() -> ExprPtr {
    if (scope.empty()) return mkCon("MkA", {});
    std::uniform_int_distribution<size_t> i(0, scope.size() - 1);
    return mkVar(scope[i(rng)]);
  };
  if (depth == 0) {
    if (r < 50 && !scope.empty()) return var();
    if (r < 75) return mkCon("MkA", {});
    return mkCon("MkB", {});
  }
  Name fresh = "v" + std::to_string(depth) + "_" + std::to_string(pick(rng));
  if (r < 15) return var();
  if (r < 30) {
    auto inner = scope;
    inner.push_back(fresh);
    return mkLam(fresh, randomClosedTerm(rng, depth - 1, inner));
  }
  if (r < 50)
    return mkApp(randomClosedTerm(rng, depth - 1, scope), randomClosedTerm(rng, depth - 1, scope));
  if (r < 65) {
    auto inner = scope;
    inner.push_back(fresh);
    return mkLet(fresh, randomClosedTerm(rng, depth - 1, scope),
                 randomClosedTerm(rng, depth - 1, inner));
  }
  if (r < 85) {
    auto inner = scope;
    inner.push_back(fresh);
    std::vector<Branch> branches;
    branches.push_back({Pattern{"MkP", {fresh}, false, {}},
                        randomClosedTerm(rng, depth - 1, inner)});
    Pattern wild;
    wild.wildcard = true;
    branches.push_back({wild, randomClosedTerm(rng, depth - 1, scope)});
    return mkCase(randomClosedTerm(rng, depth - 1, scope), std::move(branches));
  }
  return mkCon("MkP", {randomClosedTerm(rng, depth - 1, scope)});
}

}  // namespace testutil
