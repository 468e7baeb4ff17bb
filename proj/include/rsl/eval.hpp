#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsl/ast.hpp"

// Call-by-name one-step reduction and bounded evaluation to weak head normal
// form. The relation reduces the head of applications and the scrutinee of
// case expressions only; there is no reduction under lambdas, inside
// constructor arguments, or in case branches.

namespace rsl {

enum class StepRule { Beta, Con, Fun, Hoist };

enum class StuckKind {
  FreeVariable,
  FreeVariableHead,
  FreeVariableScrutinee,
  NoMatchingBranch,
  UndefinedFunction,
  NonFunctionApplication,
  CaseOfLambda,
};

inline const char* stuckName(StuckKind k) {
  switch (k) {
    case StuckKind::FreeVariable: return "free variable";
    case StuckKind::FreeVariableHead: return "application of a free variable";
    case StuckKind::FreeVariableScrutinee: return "case on a free variable";
    case StuckKind::NoMatchingBranch: return "no matching case branch";
    case StuckKind::UndefinedFunction: return "undefined function";
    case StuckKind::NonFunctionApplication: return "application of a constructor";
    case StuckKind::CaseOfLambda: return "case on a lambda";
  }
  return "stuck";
}

inline bool stuckOnFreeVariable(StuckKind k) {
  return k == StuckKind::FreeVariable || k == StuckKind::FreeVariableHead ||
         k == StuckKind::FreeVariableScrutinee;
}

struct Env {
  std::map<Name, ExprPtr> defs;

  static Env fromProgram(const Program& p) {
    Env env;
    for (const auto& d : p.defs) env.defs.emplace(d.name, d.body);
    return env;
  }
  const ExprPtr* lookup(const Name& f) const {
    auto it = defs.find(f);
    return it == defs.end() ? nullptr : &it->second;
  }
  void extend(const std::vector<FunDef>& ds) {
    for (const auto& d : ds) {
      auto [it, inserted] = defs.emplace(d.name, d.body);
      if (!inserted && !exprEq(it->second, d.body))
        throw Error("duplicate function definition '" + d.name + "'", d.loc);
    }
  }
};

// Weak head normal form: constructor application or lambda.
inline bool isValue(const ExprPtr& e) { return as<Con>(e) || as<Lam>(e); }

struct StepResult {
  enum class Kind { Reduced, Stuck, AlreadyValue };
  Kind kind;
  ExprPtr next;       // Reduced
  StepRule rule{};    // Reduced
  StuckKind stuck{};  // Stuck

  static StepResult reduced(ExprPtr e, StepRule r) {
    return {Kind::Reduced, std::move(e), r, {}};
  }
  static StepResult stuckOn(StuckKind k) { return {Kind::Stuck, nullptr, {}, k}; }
  static StepResult value() { return {Kind::AlreadyValue, nullptr, {}, {}}; }
};

// One reduction step. `where` blocks extend the environment in place and
// step to their body (tagged Hoist; the paper's relation has no rule for
// non-toplevel where, so this is the only extension beyond beta/con/fun).
inline StepResult step(const ExprPtr& e, Env& env) {
  if (isValue(e)) return StepResult::value();
  if (as<Var>(e)) return StepResult::stuckOn(StuckKind::FreeVariable);
  if (const auto* f = as<Fun>(e)) {
    const ExprPtr* def = env.lookup(f->name);
    if (!def) return StepResult::stuckOn(StuckKind::UndefinedFunction);
    return StepResult::reduced(*def, StepRule::Fun);
  }
  if (const auto* a = as<App>(e)) {
    if (const auto* lam = as<Lam>(a->fun))
      return StepResult::reduced(substitute(lam->body, lam->param, a->arg), StepRule::Beta);
    if (as<Con>(a->fun)) return StepResult::stuckOn(StuckKind::NonFunctionApplication);
    if (as<Var>(a->fun)) return StepResult::stuckOn(StuckKind::FreeVariableHead);
    StepResult inner = step(a->fun, env);
    if (inner.kind == StepResult::Kind::Reduced)
      return StepResult::reduced(mkApp(inner.next, a->arg, e->loc), inner.rule);
    return inner;
  }
  if (const auto* cs = as<Case>(e)) {
    if (const auto* c = as<Con>(cs->scrutinee)) {
      for (const auto& br : cs->branches) {
        if (br.pat.wildcard) return StepResult::reduced(br.body, StepRule::Con);
        if (br.pat.con != c->name) continue;
        std::map<Name, ExprPtr> sub;
        for (size_t i = 0; i < br.pat.vars.size() && i < c->args.size(); ++i)
          sub.emplace(br.pat.vars[i], c->args[i]);
        return StepResult::reduced(substituteMany(br.body, sub), StepRule::Con);
      }
      return StepResult::stuckOn(StuckKind::NoMatchingBranch);
    }
    if (as<Lam>(cs->scrutinee)) return StepResult::stuckOn(StuckKind::CaseOfLambda);
    if (as<Var>(cs->scrutinee)) return StepResult::stuckOn(StuckKind::FreeVariableScrutinee);
    StepResult inner = step(cs->scrutinee, env);
    if (inner.kind == StepResult::Kind::Reduced)
      return StepResult::reduced(mkCase(inner.next, cs->branches, e->loc), inner.rule);
    return inner;
  }
  if (const auto* lt = as<Let>(e))
    return StepResult::reduced(substitute(lt->body, lt->binder, lt->bound), StepRule::Beta);
  if (const auto* w = as<Where>(e)) {
    env.extend(w->defs);
    return StepResult::reduced(w->body, StepRule::Hoist);
  }
  return StepResult::stuckOn(StuckKind::FreeVariable);
}

constexpr long kDefaultBudget = 100000;

struct EvalResult {
  enum class Kind { Value, Stuck, BudgetExhausted };
  Kind kind;
  ExprPtr expr;       // the final expression (WHNF for Value, as-stuck otherwise)
  StuckKind stuck{};  // Stuck
  long steps = 0;
};

inline EvalResult evalWHNF(ExprPtr e, Env env, long budget = kDefaultBudget) {
  long steps = 0;
  while (true) {
    StepResult r = step(e, env);
    switch (r.kind) {
      case StepResult::Kind::AlreadyValue:
        return {EvalResult::Kind::Value, e, {}, steps};
      case StepResult::Kind::Stuck:
        return {EvalResult::Kind::Stuck, e, r.stuck, steps};
      case StepResult::Kind::Reduced:
        if (++steps > budget) return {EvalResult::Kind::BudgetExhausted, e, {}, steps};
        e = r.next;
        break;
    }
  }
}

namespace detail {
inline EvalResult evalGroundRec(ExprPtr e, Env& env, long& budget) {
  EvalResult r = evalWHNF(std::move(e), env, budget);
  budget -= r.steps;
  if (budget <= 0 && r.kind == EvalResult::Kind::Value)
    return {EvalResult::Kind::BudgetExhausted, r.expr, {}, r.steps};
  if (r.kind != EvalResult::Kind::Value) return r;
  if (const auto* c = as<Con>(r.expr)) {
    std::vector<ExprPtr> args;
    args.reserve(c->args.size());
    for (const auto& a : c->args) {
      EvalResult ar = evalGroundRec(a, env, budget);
      if (ar.kind != EvalResult::Kind::Value) return ar;
      args.push_back(ar.expr);
    }
    return {EvalResult::Kind::Value, mkCon(c->name, std::move(args)), {}, 0};
  }
  return r;  // lambda: nothing further to force
}
}  // namespace detail

// Forces constructor arguments recursively after reaching WHNF.
inline EvalResult evalGround(ExprPtr e, Env env, long budget = kDefaultBudget) {
  long remaining = budget;
  return detail::evalGroundRec(std::move(e), env, remaining);
}

// Best-effort deep normalization of possibly open terms: free variables and
// irreducible subterms are kept in place. Used when residualizing observable
// states that may mention abstracted variables.
inline ExprPtr normalizeOpen(ExprPtr e, Env env, long budget = kDefaultBudget) {
  EvalResult r = evalWHNF(e, env, budget);
  ExprPtr cur = r.expr;
  if (r.kind == EvalResult::Kind::BudgetExhausted) return cur;
  if (const auto* c = as<Con>(cur)) {
    std::vector<ExprPtr> args;
    args.reserve(c->args.size());
    for (const auto& a : c->args) args.push_back(normalizeOpen(a, env, budget));
    return mkCon(c->name, std::move(args), cur->loc);
  }
  return cur;
}

// Builds the stream term `Cons e1 (Cons e2 (... rest))`.
inline ExprPtr streamTerm(const std::vector<Name>& events, ExprPtr rest) {
  for (auto it = events.rbegin(); it != events.rend(); ++it)
    rest = mkCon("Cons", {mkCon(*it, {}), rest});
  return rest;
}

struct RunError : Error {
  using Error::Error;
};

// Drives a stream-producing expression with a finite event prefix and
// collects the ground observable states it emits. Stops early when the
// program demands events beyond the supplied prefix.
inline std::vector<ExprPtr> runStream(const ExprPtr& top, const Name& streamVar, const Env& env,
                                      const std::vector<Name>& events, size_t maxObs,
                                      long budget = kDefaultBudget) {
  Name restVar = freshName("rest", freeVars(top));
  ExprPtr stream = streamTerm(events, mkVar(restVar));
  ExprPtr cur = substitute(top, streamVar, stream);
  std::vector<ExprPtr> out;
  while (out.size() < maxObs) {
    EvalResult r = evalWHNF(cur, env, budget);
    if (r.kind == EvalResult::Kind::BudgetExhausted)
      throw RunError("evaluation budget exhausted while producing the stream");
    if (r.kind == EvalResult::Kind::Stuck) {
      if (stuckOnFreeVariable(r.stuck)) return out;  // needs more events
      throw RunError(std::string("stream evaluation stuck: ") + stuckName(r.stuck));
    }
    const auto* c = as<Con>(r.expr);
    if (!c || c->name != "Cons" || c->args.size() != 2)
      throw RunError("program did not produce a Cons-headed stream");
    EvalResult obs = evalGround(c->args[0], env, budget);
    if (obs.kind == EvalResult::Kind::Stuck && stuckOnFreeVariable(obs.stuck)) return out;
    if (obs.kind != EvalResult::Kind::Value)
      throw RunError("observable state did not evaluate to a ground term");
    out.push_back(obs.expr);
    cur = c->args[1];
  }
  return out;
}

inline std::vector<ExprPtr> runStream(const Program& p, const std::vector<Name>& events,
                                      size_t maxObs, long budget = kDefaultBudget) {
  auto fv = freeVars(p.top);
  if (fv.size() != 1)
    throw RunError("program must have exactly one free stream variable, found " +
                   std::to_string(fv.size()));
  return runStream(p.top, *fv.begin(), Env::fromProgram(p), events, maxObs, budget);
}

}  // namespace rsl
