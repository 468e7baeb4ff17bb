#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rsl/ast.hpp"
#include "rsl/eval.hpp"
#include "rsl/ltl.hpp"
#include "rsl/restricted.hpp"

// The verification rule engine over restricted programs. Dispatch is on the
// formula first (connectives decompose pointwise), then on the shape of the
// expression: stream constructors, function calls, variable cases, abstracted
// applications, lets and wheres. The set of previously encountered calls
// closes greatest-fixed-point loops for box formulas (True), least-fixed-point
// loops for diamond formulas (False), and everything else as Undefined; it is
// reset to empty when checking the current state of a stream constructor.

namespace rsl {

struct VerifyError : Error {
  enum class Kind { PropositionDivergence, PropositionStuckOnConstructor, MissingFunction };
  Kind kind;
  VerifyError(Kind k, const std::string& msg, SourceLoc loc = {}) : Error(msg, loc), kind(k) {}
};

struct TraceEntry {
  std::string rule;
  Name fun;             // for rules 6a-6c
  std::string formula;  // rendered formula at the firing
  std::vector<Name> rho;
};

struct Report {
  TruthVal verdict = TruthVal::Undefined;
  std::vector<TraceEntry> trace;
  double millis = 0.0;
};

struct VerifyOptions {
  bool trace = false;
  long propBudget = kDefaultBudget;
};

namespace detail {

class Verifier {
 public:
  Verifier(FairnessSet fairness, Env atomEnv, VerifyOptions opts)
      : fairness_(std::move(fairness)), atomEnv_(std::move(atomEnv)), opts_(opts) {}

  std::vector<TraceEntry> trace;

  using FunMap = std::map<Name, ExprPtr>;

  TruthVal verify(const ExprPtr& e, const FormulaPtr& phi, const FunMap& funEnv,
                  const std::set<Name>& rho) {
    // rules (1)-(4): logical connectives
    if (const auto* c = asF<FAnd>(phi)) {
      record("1", {}, phi, rho);
      TruthVal a = verify(e, c->lhs, funEnv, rho);
      switch (a) {
        case TruthVal::True: return verify(e, c->rhs, funEnv, rho);
        case TruthVal::False: return TruthVal::False;
        case TruthVal::Undefined:
          return verify(e, c->rhs, funEnv, rho) == TruthVal::False ? TruthVal::False
                                                                   : TruthVal::Undefined;
      }
    }
    if (const auto* d = asF<FOr>(phi)) {
      record("2", {}, phi, rho);
      TruthVal a = verify(e, d->lhs, funEnv, rho);
      switch (a) {
        case TruthVal::True: return TruthVal::True;
        case TruthVal::False: return verify(e, d->rhs, funEnv, rho);
        case TruthVal::Undefined:
          return verify(e, d->rhs, funEnv, rho) == TruthVal::True ? TruthVal::True
                                                                  : TruthVal::Undefined;
      }
    }
    if (const auto* i = asF<FImplies>(phi)) {
      record("3", {}, phi, rho);
      TruthVal a = verify(e, i->lhs, funEnv, rho);
      switch (a) {
        case TruthVal::True: return verify(e, i->rhs, funEnv, rho);
        case TruthVal::False: return TruthVal::True;
        case TruthVal::Undefined:
          return verify(e, i->rhs, funEnv, rho) == TruthVal::True ? TruthVal::True
                                                                  : TruthVal::Undefined;
      }
    }
    if (const auto* n = asF<FNot>(phi)) {
      record("4", {}, phi, rho);
      return kNot(verify(e, n->arg, funEnv, rho));
    }

    // rule (10): where extends the function environment
    if (const auto* w = as<Where>(e)) {
      record("10", {}, phi, rho);
      FunMap extended = funEnv;
      for (const auto& d : w->defs) extended[d.name] = d.body;
      return verify(w->body, phi, extended, rho);
    }
    // rule (9): let bodies, the abstraction point
    if (const auto* lt = as<Let>(e)) {
      record("9", {}, phi, rho);
      return verify(lt->body, phi, funEnv, rho);
    }
    // rules (5a)-(5d): a constructed stream of states
    if (const auto* c = as<Con>(e); c && c->name == "Cons" && c->args.size() == 2) {
      if (const auto* g = asF<FAlways>(phi)) {
        record("5a", {}, phi, rho);
        TruthVal now = verify(e, g->arg, funEnv, {});
        if (now == TruthVal::False) return TruthVal::False;
        return kAnd(now, verify(c->args[1], phi, funEnv, rho));
      }
      if (const auto* ev = asF<FEventually>(phi)) {
        record("5b", {}, phi, rho);
        TruthVal now = verify(e, ev->arg, funEnv, {});
        if (now == TruthVal::True) return TruthVal::True;
        return kOr(now, verify(c->args[1], phi, funEnv, rho));
      }
      if (const auto* x = asF<FNext>(phi)) {
        record("5c", {}, phi, rho);
        return verify(c->args[1], x->arg, funEnv, rho);
      }
      const auto* atom = asF<FAtom>(phi);
      record("5d", {}, phi, rho);
      AtomOutcome out = evalAtom(atom->prop, c->args[0], atomEnv_, opts_.propBudget);
      switch (out.kind) {
        case AtomOutcome::Kind::Value: return out.value;
        case AtomOutcome::Kind::FreeVariable: return TruthVal::Undefined;
        case AtomOutcome::Kind::Divergence:
          throw VerifyError(VerifyError::Kind::PropositionDivergence,
                            "proposition evaluation exceeded its budget", e->loc);
        case AtomOutcome::Kind::NotTruthVal:
          throw VerifyError(VerifyError::Kind::PropositionStuckOnConstructor,
                            "proposition did not evaluate to a truth value: " + out.detail,
                            e->loc);
      }
    }
    // rules (6a)-(6c): function calls
    auto [head, args] = spine(e);
    if (const auto* f = as<Fun>(head)) {
      if (asF<FAlways>(phi)) {
        record("6a", f->name, phi, rho);
        if (rho.count(f->name)) return TruthVal::True;
        return verify(unfold(f->name, args, funEnv, e->loc), phi, funEnv, withFun(rho, f->name));
      }
      if (asF<FEventually>(phi)) {
        record("6b", f->name, phi, rho);
        if (rho.count(f->name)) return TruthVal::False;
        return verify(unfold(f->name, args, funEnv, e->loc), phi, funEnv, withFun(rho, f->name));
      }
      record("6c", f->name, phi, rho);
      if (rho.count(f->name)) return TruthVal::Undefined;
      return verify(unfold(f->name, args, funEnv, e->loc), phi, funEnv, withFun(rho, f->name));
    }
    // rules (7a)-(7b): case expressions over a variable
    if (const auto* cs = as<Case>(e)) {
      if (asF<FEventually>(phi)) {
        record("7a", {}, phi, rho);
        TruthVal fair = TruthVal::False;
        for (const auto& br : cs->branches) {
          if (br.pat.wildcard || !fairness_.count(br.pat.con)) continue;
          fair = kOr(fair, verify(br.body, phi, funEnv, rho));
          if (fair == TruthVal::True) return TruthVal::True;
        }
        TruthVal all = TruthVal::True;
        for (const auto& br : cs->branches) {
          all = kAnd(all, verify(br.body, phi, funEnv, rho));
          if (all == TruthVal::False) break;
        }
        return kOr(fair, all);
      }
      record("7b", {}, phi, rho);
      TruthVal all = TruthVal::True;
      for (const auto& br : cs->branches) {
        all = kAnd(all, verify(br.body, phi, funEnv, rho));
        if (all == TruthVal::False) return TruthVal::False;
      }
      return all;
    }
    // rule (8): an abstracted variable, applied or bare
    if (as<Var>(head)) {
      record("8", {}, phi, rho);
      return TruthVal::Undefined;
    }
    throw VerifyError(VerifyError::Kind::PropositionStuckOnConstructor,
                      "expression shape not covered by the verification rules: " + prettyExpr(e),
                      e->loc);
  }

 private:
  FairnessSet fairness_;
  Env atomEnv_;
  VerifyOptions opts_;

  static std::set<Name> withFun(std::set<Name> rho, const Name& f) {
    rho.insert(f);
    return rho;
  }

  ExprPtr unfold(const Name& f, const std::vector<ExprPtr>& args, const FunMap& funEnv,
                 SourceLoc loc) {
    auto it = funEnv.find(f);
    if (it == funEnv.end())
      throw VerifyError(VerifyError::Kind::MissingFunction,
                        "call to unknown function '" + f + "'", loc);
    auto [params, body] = lamParams(it->second);
    if (params.size() != args.size())
      throw VerifyError(VerifyError::Kind::MissingFunction,
                        "call to '" + f + "' with wrong number of arguments", loc);
    std::map<Name, ExprPtr> sub;
    for (size_t i = 0; i < params.size(); ++i) sub.emplace(params[i], args[i]);
    return substituteMany(body, sub);
  }

  void record(const char* rule, const Name& fun, const FormulaPtr& phi,
              const std::set<Name>& rho) {
    if (!opts_.trace) return;
    trace.push_back({rule, fun, formulaToString(phi), {rho.begin(), rho.end()}});
  }
};

}  // namespace detail

inline TruthVal verify(const ExprPtr& e, const FormulaPtr& phi, const FairnessSet& fairness,
                       const Env& atomEnv, VerifyOptions opts = {}) {
  detail::Verifier v(fairness, atomEnv, opts);
  return v.verify(e, phi, {}, {});
}

inline Report verifyProgram(const RestrictedProgram& p, const FormulaPtr& phi,
                            const FairnessSet& fairness, VerifyOptions opts = {}) {
  auto events = p.source.events();
  for (const auto& ev : fairness)
    if (std::find(events.begin(), events.end(), ev) == events.end())
      throw Error("fairness event '" + ev + "' is not a declared event");
  auto start = std::chrono::steady_clock::now();
  detail::Verifier v(fairness, Env::fromProgram(p.program), opts);
  Report report;
  report.verdict = v.verify(p.source.main, phi, {}, {});
  report.trace = std::move(v.trace);
  report.millis =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// All declared events, the default fairness assumption.
inline FairnessSet allEventsFair(const SourceFile& sf) {
  auto evs = sf.events();
  return {evs.begin(), evs.end()};
}

}  // namespace rsl
