#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rsl/ast.hpp"

// Validator for the restricted stream-producing form. Bodies may contain
// constructor applications, saturated function calls with variable arguments,
// case expressions scrutinizing a variable outside the abstraction set,
// applications headed by an abstracted variable, lets (whose binder joins the
// abstraction set), and where blocks.

namespace rsl {

enum class RestrictedViolation {
  NonVariableScrutinee,
  LetBoundScrutinee,
  NonVariableCallArgument,
  UnsaturatedCall,
  NonRestrictedExpression,
};

inline const char* violationName(RestrictedViolation v) {
  switch (v) {
    case RestrictedViolation::NonVariableScrutinee: return "NonVariableScrutinee";
    case RestrictedViolation::LetBoundScrutinee: return "LetBoundScrutinee";
    case RestrictedViolation::NonVariableCallArgument: return "NonVariableCallArgument";
    case RestrictedViolation::UnsaturatedCall: return "UnsaturatedCall";
    case RestrictedViolation::NonRestrictedExpression: return "NonRestrictedExpression";
  }
  return "RestrictedViolation";
}

struct ValidateError : Error {
  RestrictedViolation kind;
  ValidateError(RestrictedViolation k, const std::string& msg, SourceLoc loc)
      : Error(std::string(violationName(k)) + ": " + msg, loc), kind(k) {}
};

struct RestrictedDef {
  std::vector<Name> params;
  ExprPtr body;
};

struct RestrictedProgram {
  SourceFile source;                   // original file, where block intact
  Program program;                     // flattened view
  std::map<Name, RestrictedDef> defs;  // params peeled from the definition lambdas
  std::set<Name> letVars;              // every let binder encountered during validation
};

namespace detail {

class RestrictedValidator {
 public:
  explicit RestrictedValidator(const std::map<Name, int>& funArity) : funArity_(funArity) {}

  std::set<Name> letVars;

  void validate(const ExprPtr& e, std::set<Name> rho) {
    if (as<Var>(e)) return;  // bare variables are accepted (see docs/language.md)
    if (const auto* c = as<Con>(e)) {
      for (const auto& a : c->args) validate(a, rho);
      return;
    }
    if (as<Fun>(e)) {
      checkCall(e, {}, rho);
      return;
    }
    if (as<App>(e)) {
      auto [head, args] = spine(e);
      if (as<Fun>(head)) {
        checkCall(head, args, rho);
        return;
      }
      if (const auto* v = as<Var>(head)) {
        if (!rho.count(v->name))
          throw ValidateError(RestrictedViolation::NonRestrictedExpression,
                              "application of variable '" + v->name +
                                  "' which is not let-abstracted",
                              e->loc);
        for (const auto& a : args) validate(a, rho);
        return;
      }
      throw ValidateError(RestrictedViolation::NonRestrictedExpression,
                          "application head must be a function or an abstracted variable",
                          e->loc);
    }
    if (const auto* cs = as<Case>(e)) {
      const auto* v = as<Var>(cs->scrutinee);
      if (!v)
        throw ValidateError(RestrictedViolation::NonVariableScrutinee,
                            "case scrutinee must be a variable", cs->scrutinee->loc);
      if (rho.count(v->name))
        throw ValidateError(RestrictedViolation::LetBoundScrutinee,
                            "case scrutinee '" + v->name + "' is a let-abstracted variable",
                            cs->scrutinee->loc);
      for (const auto& br : cs->branches) {
        std::set<Name> inner = rho;
        for (const auto& x : br.pat.vars) inner.erase(x);
        validate(br.body, inner);
      }
      return;
    }
    if (const auto* lt = as<Let>(e)) {
      auto [params, body] = lamParams(lt->bound);
      std::set<Name> inner = rho;
      for (const auto& x : params) inner.erase(x);
      validate(body, inner);
      letVars.insert(lt->binder);
      std::set<Name> bodyRho = rho;
      bodyRho.insert(lt->binder);
      validate(lt->body, bodyRho);
      return;
    }
    if (const auto* w = as<Where>(e)) {
      for (const auto& d : w->defs) {
        auto [params, body] = lamParams(d.body);
        std::set<Name> inner = rho;
        for (const auto& x : params) inner.erase(x);
        validate(body, inner);
      }
      validate(w->body, rho);
      return;
    }
    // bare lambda outside a let/where binding
    throw ValidateError(RestrictedViolation::NonRestrictedExpression,
                        "lambda abstraction is only allowed as a let or where binding", e->loc);
  }

 private:
  const std::map<Name, int>& funArity_;

  void checkCall(const ExprPtr& head, const std::vector<ExprPtr>& args,
                 const std::set<Name>& rho) {
    const auto* f = as<Fun>(head);
    auto it = funArity_.find(f->name);
    if (it == funArity_.end())
      throw ValidateError(RestrictedViolation::NonRestrictedExpression,
                          "call to unknown function '" + f->name + "'", head->loc);
    if (static_cast<int>(args.size()) != it->second)
      throw ValidateError(RestrictedViolation::UnsaturatedCall,
                          "call to '" + f->name + "' expects " + std::to_string(it->second) +
                              " arguments, got " + std::to_string(args.size()),
                          head->loc);
    for (const auto& a : args)
      if (!as<Var>(a))
        throw ValidateError(RestrictedViolation::NonVariableCallArgument,
                            "argument of call to '" + f->name + "' must be a variable", a->loc);
    (void)rho;
  }
};

}  // namespace detail

inline RestrictedProgram validateRestricted(const SourceFile& sf) {
  arityCheck(sf);
  RestrictedProgram rp;
  rp.source = sf;
  rp.program = flatten(sf);
  std::map<Name, int> funArity;
  for (const auto& d : rp.program.defs) {
    auto [params, body] = lamParams(d.body);
    funArity[d.name] = static_cast<int>(params.size());
    rp.defs[d.name] = RestrictedDef{params, body};
  }
  detail::RestrictedValidator v(funArity);
  std::set<Name> rho;
  // validate the definition bodies and the top expression against e^∅
  for (const auto& d : rp.program.defs) {
    auto [params, body] = lamParams(d.body);
    (void)params;
    v.validate(body, rho);
  }
  v.validate(rp.program.top, rho);
  rp.letVars = v.letVars;
  return rp;
}

}  // namespace rsl
