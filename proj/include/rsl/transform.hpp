#pragma once

#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rsl/ast.hpp"
#include "rsl/eval.hpp"
#include "rsl/pretty.hpp"
#include "rsl/restricted.hpp"

// Driving, folding, and generalization: turns stream-producing source
// programs into the restricted form. Configurations are normalized stream
// expressions; folding matches a configuration as an instance of a previously
// seen one; when textual folding cannot close a loop, behaviorally equal
// configurations (checked by bounded product driving) are merged; the
// homeomorphic-embedding whistle triggers most-specific-generalization with
// let-extraction, and a function budget bounds everything else.

namespace rsl {

struct TransformError : Error {
  enum class Kind { WhistleBudgetExceeded, NonStreamShape };
  Kind kind;
  TransformError(Kind k, const std::string& msg, SourceLoc loc = {}) : Error(msg, loc), kind(k) {}
};

struct TransformOptions {
  int maxFunctions = 512;
  int quotientDepth = 12;   // product-driving depth for behavioral folding
  int bisimDepth = 16;      // post-transform self check
  int bisimTrials = 64;
  unsigned seed = 1;
  long evalBudget = kDefaultBudget;
  bool quotientFold = true;
};

// ---------------------------------------------------------------------------
// Homeomorphic embedding

namespace detail {

inline std::vector<ExprPtr> children(const ExprPtr& e) {
  std::vector<ExprPtr> out;
  if (const auto* c = as<Con>(e)) {
    out = c->args;
  } else if (const auto* l = as<Lam>(e)) {
    out.push_back(l->body);
  } else if (const auto* a = as<App>(e)) {
    out.push_back(a->fun);
    out.push_back(a->arg);
  } else if (const auto* cs = as<Case>(e)) {
    out.push_back(cs->scrutinee);
    for (const auto& br : cs->branches) out.push_back(br.body);
  } else if (const auto* lt = as<Let>(e)) {
    out.push_back(lt->bound);
    out.push_back(lt->body);
  } else if (const auto* w = as<Where>(e)) {
    out.push_back(w->body);
    for (const auto& d : w->defs) out.push_back(d.body);
  }
  return out;
}

inline bool embedRec(const ExprPtr& a, const ExprPtr& b);

inline bool embedCouple(const ExprPtr& a, const ExprPtr& b) {
  if (a->node.index() != b->node.index()) return false;
  if (as<Var>(a)) return true;  // any variable embeds into any variable
  if (const auto* ca = as<Con>(a)) {
    const auto* cb = as<Con>(b);
    if (ca->name != cb->name || ca->args.size() != cb->args.size()) return false;
    for (size_t i = 0; i < ca->args.size(); ++i)
      if (!embedRec(ca->args[i], cb->args[i])) return false;
    return true;
  }
  if (const auto* fa = as<Fun>(a)) return fa->name == as<Fun>(b)->name;
  if (const auto* la = as<Lam>(a)) return embedRec(la->body, as<Lam>(b)->body);
  if (const auto* aa = as<App>(a)) {
    const auto* ab = as<App>(b);
    return embedRec(aa->fun, ab->fun) && embedRec(aa->arg, ab->arg);
  }
  if (const auto* ca = as<Case>(a)) {
    const auto* cb = as<Case>(b);
    if (ca->branches.size() != cb->branches.size()) return false;
    if (!embedRec(ca->scrutinee, cb->scrutinee)) return false;
    for (size_t i = 0; i < ca->branches.size(); ++i) {
      const auto& x = ca->branches[i].pat;
      const auto& y = cb->branches[i].pat;
      if (x.wildcard != y.wildcard || x.con != y.con || x.vars.size() != y.vars.size())
        return false;
      if (!embedRec(ca->branches[i].body, cb->branches[i].body)) return false;
    }
    return true;
  }
  if (const auto* la = as<Let>(a)) {
    const auto* lb = as<Let>(b);
    return embedRec(la->bound, lb->bound) && embedRec(la->body, lb->body);
  }
  if (const auto* wa = as<Where>(a)) {
    const auto* wb = as<Where>(b);
    if (wa->defs.size() != wb->defs.size()) return false;
    for (size_t i = 0; i < wa->defs.size(); ++i) {
      if (wa->defs[i].name != wb->defs[i].name) return false;
      if (!embedRec(wa->defs[i].body, wb->defs[i].body)) return false;
    }
    return embedRec(wa->body, wb->body);
  }
  return false;
}

inline bool embedRec(const ExprPtr& a, const ExprPtr& b) {
  if (embedCouple(a, b)) return true;
  for (const auto& c : children(b))
    if (embedRec(a, c)) return true;
  return false;
}

}  // namespace detail

// Whistle: coupled homeomorphic embedding at the root.
inline bool homeomorphicEmbedding(const ExprPtr& a, const ExprPtr& b) {
  return detail::embedCouple(a, b);
}

// ---------------------------------------------------------------------------
// Most specific generalization

struct Msg {
  ExprPtr generalized;
  std::map<Name, ExprPtr> thetaA;
  std::map<Name, ExprPtr> thetaB;
};

namespace detail {

class MsgBuilder {
 public:
  explicit MsgBuilder(std::set<Name> avoid) : avoid_(std::move(avoid)) {}

  std::optional<ExprPtr> rec(const ExprPtr& a, const ExprPtr& b, std::set<Name>& bound) {
    if (exprEq(a, b)) return a;
    if (a->node.index() == b->node.index()) {
      if (const auto* ca = as<Con>(a)) {
        const auto* cb = as<Con>(b);
        if (ca->name == cb->name && ca->args.size() == cb->args.size()) {
          std::vector<ExprPtr> args;
          bool ok = true;
          for (size_t i = 0; i < ca->args.size(); ++i) {
            auto g = rec(ca->args[i], cb->args[i], bound);
            if (!g) {
              ok = false;
              break;
            }
            args.push_back(*g);
          }
          if (ok) return mkCon(ca->name, std::move(args));
        }
      } else if (const auto* aa = as<App>(a)) {
        const auto* ab = as<App>(b);
        auto f = rec(aa->fun, ab->fun, bound);
        auto x = f ? rec(aa->arg, ab->arg, bound) : std::nullopt;
        if (f && x) return mkApp(*f, *x);
      } else if (const auto* la = as<Lam>(a)) {
        const auto* lb = as<Lam>(b);
        if (la->param == lb->param) {
          bool fresh = bound.insert(la->param).second;
          auto body = rec(la->body, lb->body, bound);
          if (fresh) bound.erase(la->param);
          if (body) return mkLam(la->param, *body);
        }
      } else if (const auto* ca = as<Case>(a)) {
        const auto* cb = as<Case>(b);
        if (ca->branches.size() == cb->branches.size()) {
          auto scrut = rec(ca->scrutinee, cb->scrutinee, bound);
          if (scrut) {
            std::vector<Branch> branches;
            bool ok = true;
            for (size_t i = 0; i < ca->branches.size(); ++i) {
              const auto& x = ca->branches[i];
              const auto& y = cb->branches[i];
              if (x.pat.wildcard != y.pat.wildcard || x.pat.con != y.pat.con ||
                  x.pat.vars != y.pat.vars) {
                ok = false;
                break;
              }
              std::vector<Name> added;
              for (const auto& v : x.pat.vars)
                if (bound.insert(v).second) added.push_back(v);
              auto body = rec(x.body, y.body, bound);
              for (const auto& v : added) bound.erase(v);
              if (!body) {
                ok = false;
                break;
              }
              branches.push_back({x.pat, *body});
            }
            if (ok) return mkCase(*scrut, std::move(branches));
          }
        }
      } else if (const auto* la = as<Let>(a)) {
        const auto* lb = as<Let>(b);
        if (la->binder == lb->binder) {
          auto bnd = rec(la->bound, lb->bound, bound);
          if (bnd) {
            bool fresh = bound.insert(la->binder).second;
            auto body = rec(la->body, lb->body, bound);
            if (fresh) bound.erase(la->binder);
            if (body) return mkLet(la->binder, *bnd, *body);
          }
        }
      } else if (const auto* wa = as<Where>(a)) {
        const auto* wb = as<Where>(b);
        if (wa->defs.size() == wb->defs.size()) {
          bool ok = true;
          std::vector<FunDef> defs;
          for (size_t i = 0; i < wa->defs.size() && ok; ++i) {
            if (wa->defs[i].name != wb->defs[i].name) {
              ok = false;
              break;
            }
            auto body = rec(wa->defs[i].body, wb->defs[i].body, bound);
            if (!body)
              ok = false;
            else
              defs.push_back({wa->defs[i].name, *body, {}});
          }
          auto body = ok ? rec(wa->body, wb->body, bound) : std::nullopt;
          if (ok && body) return mkWhere(*body, std::move(defs));
        }
      }
    }
    return abstractPair(a, b, bound);
  }

  std::map<Name, ExprPtr> thetaA, thetaB;

 private:
  std::set<Name> avoid_;

  std::optional<ExprPtr> abstractPair(const ExprPtr& a, const ExprPtr& b,
                                      const std::set<Name>& bound) {
    for (const auto& v : freeVars(a))
      if (bound.count(v)) return std::nullopt;
    for (const auto& v : freeVars(b))
      if (bound.count(v)) return std::nullopt;
    for (const auto& [name, ea] : thetaA)
      if (exprEq(ea, a) && exprEq(thetaB.at(name), b)) return mkVar(name);
    Name v = freshName("w", avoid_);
    avoid_.insert(v);
    thetaA[v] = a;
    thetaB[v] = b;
    return mkVar(v);
  }
};

}  // namespace detail

// Most specific generalization of two terms. Differing subterms become fresh
// variables; a subterm containing locally bound variables cannot be extracted
// and fails the enclosing position instead.
inline std::optional<Msg> mostSpecificGeneralization(const ExprPtr& a, const ExprPtr& b) {
  std::set<Name> avoid = freeVars(a);
  for (const auto& v : freeVars(b)) avoid.insert(v);
  detail::MsgBuilder builder(avoid);
  std::set<Name> bound;
  auto g = builder.rec(a, b, bound);
  if (!g) return std::nullopt;
  return Msg{*g, std::move(builder.thetaA), std::move(builder.thetaB)};
}

// ---------------------------------------------------------------------------
// Bounded bisimulation oracle

// True iff the two programs emit identical observable-state prefixes for
// `trials` pseudo-random event streams of length `depth`.
inline bool boundedBisim(const SourceFile& p, const SourceFile& q, int depth, int trials,
                         unsigned seed, long budget = kDefaultBudget) {
  std::vector<Name> events = p.events();
  Program pp = flatten(p);
  Program qq = flatten(q);
  std::mt19937 rng(seed);
  auto streamText = [](const std::vector<Name>& evs) {
    std::string s;
    for (const auto& e : evs) s += (s.empty() ? "" : ",") + e;
    return s;
  };
  int runs = events.empty() ? 1 : trials;
  for (int t = 0; t < runs; ++t) {
    std::vector<Name> stream;
    if (!events.empty()) {
      std::uniform_int_distribution<size_t> pick(0, events.size() - 1);
      for (int i = 0; i < depth; ++i) stream.push_back(events[pick(rng)]);
    }
    std::vector<ExprPtr> obsP, obsQ;
    try {
      obsP = runStream(pp, stream, static_cast<size_t>(depth), budget);
      obsQ = runStream(qq, stream, static_cast<size_t>(depth), budget);
    } catch (const Error& e) {
      throw RunError(std::string(e.what()) + " [stream: " + streamText(stream) + "]");
    }
    if (obsP.size() != obsQ.size()) return false;
    for (size_t i = 0; i < obsP.size(); ++i)
      if (!exprEq(obsP[i], obsQ[i])) return false;
  }
  return true;
}

inline bool boundedBisim(const SourceFile& p, const RestrictedProgram& q, int depth, int trials,
                         unsigned seed, long budget = kDefaultBudget) {
  return boundedBisim(p, q.source, depth, trials, seed, budget);
}

// ---------------------------------------------------------------------------
// The transformer

namespace detail {

class Transformer {
 public:
  Transformer(const SourceFile& src, const TransformOptions& opts)
      : src_(src), opts_(opts), prog_(flatten(src)), env_(Env::fromProgram(prog_)),
        events_(src.events()) {}

  SourceFile run() {
    auto fv = freeVars(prog_.top);
    if (fv.size() != 1)
      throw TransformError(TransformError::Kind::NonStreamShape,
                           "main expression must have exactly one free stream variable");
    std::vector<ExprPtr> history;
    ExprPtr entry = processConfig(prog_.top, history);
    std::vector<FunDef> defs;
    for (const auto& m : memo_) defs.push_back({m.fname, residual_.at(m.fname), {}});
    SourceFile out;
    out.main = mergeCases(mkWhere(entry, std::move(defs)));
    out.datatypes = pruneDatatypes(out.main);
    out.table = ConstructorTable::withBuiltins();
    for (const auto& d : out.datatypes)
      for (const auto& [c, a] : d.ctors) out.table.declare(c, a, d.name);
    return out;
  }

 private:
  struct GenFailure {};

  struct Entry {
    ExprPtr config;
    Name fname;
    std::vector<Name> params;
    bool closed;                     // no free variables besides the stream variable
    std::optional<std::string> obs;  // ground observable key for quotient folding
  };

  const SourceFile& src_;
  TransformOptions opts_;
  Program prog_;
  Env env_;
  std::vector<Name> events_;
  std::vector<Entry> memo_;
  std::map<Name, ExprPtr> residual_;
  int nextId_ = 1;
  std::set<Name> genVars_;

  ExprPtr normalizeConfig(const ExprPtr& e) {
    EvalResult r = evalWHNF(e, env_, opts_.evalBudget);
    if (r.kind == EvalResult::Kind::BudgetExhausted)
      throw TransformError(TransformError::Kind::NonStreamShape,
                           "driving diverged without producing a stream constructor");
    if (r.kind == EvalResult::Kind::Stuck && !stuckOnFreeVariable(r.stuck))
      throw TransformError(TransformError::Kind::NonStreamShape,
                           std::string("driving got stuck: ") + stuckName(r.stuck));
    return r.expr;
  }

  std::optional<std::string> obsKeyOf(const ExprPtr& config) {
    const auto* c = as<Con>(config);
    if (!c || c->name != "Cons" || c->args.size() != 2) return std::nullopt;
    EvalResult r = evalGround(c->args[0], env_, opts_.evalBudget);
    if (r.kind != EvalResult::Kind::Value) return std::nullopt;
    return prettyExpr(r.expr);
  }

  // residual call site, wrapping non-variable arguments in lets
  ExprPtr buildCall(const Entry& entry, const std::map<Name, ExprPtr>& theta) {
    std::vector<ExprPtr> args;
    std::vector<std::pair<Name, ExprPtr>> lets;
    std::set<Name> avoid;
    for (const auto& [k, v] : theta) {
      auto fv = freeVars(v);
      avoid.insert(fv.begin(), fv.end());
    }
    for (const auto& p : entry.params) {
      ExprPtr value = theta.at(p);
      if (as<Var>(value)) {
        args.push_back(value);
      } else {
        Name binder = freshName(p, avoid);
        avoid.insert(binder);
        lets.emplace_back(binder, value);
        args.push_back(mkVar(binder));
      }
    }
    ExprPtr call = mkApps(mkFun(entry.fname), args);
    for (auto it = lets.rbegin(); it != lets.rend(); ++it)
      call = mkLet(it->first, it->second, call);
    return call;
  }

  ExprPtr processConfig(const ExprPtr& raw, std::vector<ExprPtr>& history) {
    ExprPtr n = normalizeConfig(raw);

    // fold: instance of a previously seen configuration
    for (const auto& entry : memo_) {
      auto theta = matchInstance(entry.config, n, freeVars(entry.config));
      if (theta) return buildCall(entry, *theta);
    }

    // behavioral fold: same ground observable and bounded-product equivalent
    if (opts_.quotientFold) {
      auto fvn = freeVars(n);
      bool closed = fvn.size() == 1 && !genVars_.count(*fvn.begin());
      if (closed) {
        auto key = obsKeyOf(n);
        if (key) {
          for (const auto& entry : memo_) {
            if (!entry.closed || !entry.obs || *entry.obs != *key) continue;
            if (productEquivalent(entry.config, n, opts_.quotientDepth))
              return buildCall(entry, {{entry.params.front(), mkVar(*fvn.begin())}});
          }
        }
      }
    }

    // whistle: embedding of a strict ancestor triggers generalization
    for (const auto& anc : history) {
      if (!homeomorphicEmbedding(anc, n)) continue;
      if (auto res = generalize(anc, n, history)) return *res;
      break;
    }

    if (static_cast<int>(memo_.size()) >= opts_.maxFunctions)
      throw TransformError(TransformError::Kind::WhistleBudgetExceeded,
                           "transformation exceeded the residual function budget (" +
                               std::to_string(opts_.maxFunctions) + ")");

    Entry entry;
    entry.config = n;
    entry.fname = "f" + std::to_string(nextId_++);
    entry.params = freeVarsOrdered(n);
    {
      bool closed = true;
      for (const auto& v : entry.params)
        if (genVars_.count(v)) closed = false;
      entry.closed = closed && entry.params.size() == 1;
    }
    entry.obs = entry.closed ? obsKeyOf(n) : std::nullopt;
    memo_.push_back(entry);
    history.push_back(n);
    ExprPtr body = driveBody(n, history);
    history.pop_back();
    residual_[entry.fname] = mkLams(entry.params, body);
    std::vector<ExprPtr> args;
    for (const auto& p : entry.params) args.push_back(mkVar(p));
    return mkApps(mkFun(entry.fname), args);
  }

  std::optional<ExprPtr> generalize(const ExprPtr& anc, const ExprPtr& n,
                                    std::vector<ExprPtr>& history) {
    auto msg = mostSpecificGeneralization(anc, n);
    if (!msg || as<Var>(msg->generalized) || msg->thetaB.empty()) return std::nullopt;

    size_t memoMark = memo_.size();
    int idMark = nextId_;
    std::set<Name> genMark = genVars_;
    auto residualMark = residual_;
    try {
      for (const auto& [v, sub] : msg->thetaB) genVars_.insert(v);
      processConfig(msg->generalized, history);
      genVars_ = genMark;
      for (const auto& entry : memo_) {
        auto theta = matchInstance(entry.config, n, freeVars(entry.config));
        if (theta) return buildCall(entry, *theta);
      }
    } catch (const GenFailure&) {
    } catch (const TransformError&) {
    }
    // roll back the failed attempt
    memo_.resize(memoMark);
    nextId_ = idMark;
    genVars_ = genMark;
    residual_ = std::move(residualMark);
    return std::nullopt;
  }

  ExprPtr driveBody(const ExprPtr& n, std::vector<ExprPtr>& history) {
    if (const auto* c = as<Con>(n)) {
      if (c->name == "Cons" && c->args.size() == 2)
        return mkCon("Cons", {residualObs(c->args[0]), driveTail(c->args[1], history)});
      return residualObs(n);
    }
    if (const auto* cs = as<Case>(n); cs && as<Var>(cs->scrutinee))
      return driveTail(n, history);
    auto [head, args] = spine(n);
    if (as<Var>(head)) {
      std::vector<ExprPtr> rargs;
      for (const auto& a : args) rargs.push_back(driveTail(a, history));
      return mkApps(head, rargs);
    }
    if (!genVars_.empty()) throw GenFailure{};
    throw TransformError(TransformError::Kind::NonStreamShape,
                         "configuration is not a stream producer: " + prettyExpr(n));
  }

  ExprPtr driveTail(const ExprPtr& t, std::vector<ExprPtr>& history) {
    ExprPtr n = normalizeConfig(t);
    if (as<Var>(n)) return n;
    if (const auto* cs = as<Case>(n)) {
      const auto* v = as<Var>(cs->scrutinee);
      if (!v) {
        if (!genVars_.empty()) throw GenFailure{};
        throw TransformError(TransformError::Kind::NonStreamShape,
                             "irreducible case scrutinee during driving: " +
                                 prettyExpr(cs->scrutinee));
      }
      if (genVars_.count(v->name)) throw GenFailure{};
      std::vector<Branch> branches;
      for (const auto& br : cs->branches) {
        ExprPtr body = br.body;
        // positive information: the scrutinee is known in this branch
        bool shadowed = false;
        for (const auto& pv : br.pat.vars)
          if (pv == v->name) shadowed = true;
        if (!br.pat.wildcard && !shadowed) {
          std::vector<ExprPtr> patVars;
          for (const auto& pv : br.pat.vars) patVars.push_back(mkVar(pv));
          body = substitute(body, v->name, mkCon(br.pat.con, patVars));
        }
        branches.push_back({br.pat, driveTail(body, history)});
      }
      return mkCase(cs->scrutinee, std::move(branches));
    }
    return processConfig(n, history);
  }

  ExprPtr residualObs(const ExprPtr& e) {
    ExprPtr obs = normalizeOpen(e, env_, opts_.evalBudget);
    if (containsCaseOnGenVar(obs)) throw GenFailure{};
    return obs;
  }

  bool containsCaseOnGenVar(const ExprPtr& e) const {
    if (const auto* cs = as<Case>(e)) {
      if (const auto* v = as<Var>(cs->scrutinee); v && genVars_.count(v->name)) return true;
    }
    for (const auto& c : children(e))
      if (containsCaseOnGenVar(c)) return true;
    return false;
  }

  // --- bounded product equivalence ------------------------------------------

  struct Drained {
    std::vector<std::string> obs;
    ExprPtr rest;
    bool ok;
  };

  Drained drain(ExprPtr e) {
    Drained d{{}, nullptr, true};
    for (int guard = 0; guard < 64; ++guard) {
      EvalResult r = evalWHNF(e, env_, opts_.evalBudget);
      if (r.kind == EvalResult::Kind::BudgetExhausted) return {{}, nullptr, false};
      if (r.kind == EvalResult::Kind::Stuck && !stuckOnFreeVariable(r.stuck))
        return {{}, nullptr, false};
      const auto* c = as<Con>(r.expr);
      if (c && c->name == "Cons" && c->args.size() == 2) {
        EvalResult obs = evalGround(c->args[0], env_, opts_.evalBudget);
        if (obs.kind != EvalResult::Kind::Value) return {{}, nullptr, false};
        d.obs.push_back(prettyExpr(obs.expr));
        e = c->args[1];
        continue;
      }
      d.rest = r.expr;
      return d;
    }
    return {{}, nullptr, false};
  }

  std::optional<ExprPtr> feedEvent(const ExprPtr& demand, const Name& ev, const Name& freshVar) {
    const auto* cs = as<Case>(demand);
    if (!cs) return std::nullopt;
    const auto* v = as<Var>(cs->scrutinee);
    if (!v) return std::nullopt;
    return substitute(demand, v->name, mkCon("Cons", {mkCon(ev, {}), mkVar(freshVar)}));
  }

  bool productEquivalent(const ExprPtr& a, const ExprPtr& b, int depth) {
    if (events_.empty()) return false;
    std::set<std::string> seen;
    std::deque<std::pair<ExprPtr, ExprPtr>> level;
    level.emplace_back(a, b);
    for (int d = 0; d <= depth; ++d) {
      std::deque<std::pair<ExprPtr, ExprPtr>> next;
      for (auto& [x, y] : level) {
        Drained dx = drain(x);
        Drained dy = drain(y);
        if (!dx.ok || !dy.ok) return false;
        if (dx.obs != dy.obs) return false;
        if (!dx.rest != !dy.rest) return false;
        if (!dx.rest) continue;
        std::string key = prettyExpr(dx.rest) + "\x1f" + prettyExpr(dy.rest);
        if (!seen.insert(key).second) continue;
        if (d == depth) continue;
        Name fresh = "es@" + std::to_string(d + 1);
        for (const auto& ev : events_) {
          auto nx = feedEvent(dx.rest, ev, fresh);
          auto ny = feedEvent(dy.rest, ev, fresh);
          if (!nx || !ny) return false;
          next.emplace_back(*nx, *ny);
        }
      }
      level = std::move(next);
      if (level.empty()) break;
    }
    return true;
  }

  // --- residual cleanup -------------------------------------------------------

  // Merges case branches with identical bodies into a trailing wildcard when
  // this preserves first-match semantics.
  ExprPtr mergeCases(const ExprPtr& e) {
    if (const auto* c = as<Con>(e)) {
      std::vector<ExprPtr> args;
      for (const auto& a : c->args) args.push_back(mergeCases(a));
      return mkCon(c->name, std::move(args), e->loc);
    }
    if (const auto* l = as<Lam>(e)) return mkLam(l->param, mergeCases(l->body), e->loc);
    if (const auto* a = as<App>(e))
      return mkApp(mergeCases(a->fun), mergeCases(a->arg), e->loc);
    if (const auto* lt = as<Let>(e))
      return mkLet(lt->binder, mergeCases(lt->bound), mergeCases(lt->body), e->loc);
    if (const auto* w = as<Where>(e)) {
      std::vector<FunDef> defs;
      for (const auto& d : w->defs) defs.push_back({d.name, mergeCases(d.body), d.loc});
      return mkWhere(mergeCases(w->body), std::move(defs), e->loc);
    }
    const auto* cs = as<Case>(e);
    if (!cs) return e;
    std::vector<Branch> branches;
    for (const auto& br : cs->branches) branches.push_back({br.pat, mergeCases(br.body)});
    if (branches.size() < 2) return mkCase(cs->scrutinee, std::move(branches), e->loc);

    bool hasWildcard = branches.back().pat.wildcard;
    std::set<Name> pats;
    for (const auto& br : branches)
      if (!br.pat.wildcard) pats.insert(br.pat.con);
    bool coversEvents =
        !events_.empty() && pats.size() == events_.size() &&
        std::all_of(events_.begin(), events_.end(), [&](const Name& ev) { return pats.count(ev); });
    if (!hasWildcard && !coversEvents) return mkCase(cs->scrutinee, std::move(branches), e->loc);

    ExprPtr defaultBody;
    if (hasWildcard) {
      defaultBody = branches.back().pat.wildcard ? branches.back().body : nullptr;
    } else {
      // most frequent body; ties resolved toward the latest branch
      size_t bestCount = 0;
      for (size_t i = 0; i < branches.size(); ++i) {
        size_t count = 0;
        for (const auto& other : branches)
          if (alphaEq(branches[i].body, other.body)) ++count;
        if (count >= bestCount) {
          bestCount = count;
          defaultBody = branches[i].body;
        }
      }
      if (bestCount < 2) return mkCase(cs->scrutinee, std::move(branches), e->loc);
    }
    std::vector<Branch> merged;
    for (const auto& br : branches) {
      if (br.pat.wildcard) continue;
      if (!alphaEq(br.body, defaultBody)) merged.push_back(br);
    }
    Pattern wild;
    wild.wildcard = true;
    merged.push_back({wild, defaultBody});
    return mkCase(cs->scrutinee, std::move(merged), e->loc);
  }

  std::vector<DataDecl> pruneDatatypes(const ExprPtr& main) const {
    std::set<Name> used;
    collectCtors(main, used);
    std::vector<DataDecl> out;
    for (const auto& d : src_.datatypes) {
      bool keep = d.name == "Event";
      for (const auto& [c, a] : d.ctors)
        if (used.count(c)) keep = true;
      if (keep) out.push_back(d);
    }
    return out;
  }

  static void collectCtors(const ExprPtr& e, std::set<Name>& out) {
    if (const auto* c = as<Con>(e)) out.insert(c->name);
    if (const auto* cs = as<Case>(e))
      for (const auto& br : cs->branches)
        if (!br.pat.wildcard) out.insert(br.pat.con);
    for (const auto& c : children(e)) collectCtors(c, out);
  }
};

}  // namespace detail

inline SourceFile transform(const SourceFile& src, TransformOptions opts = {}) {
  arityCheck(src);
  auto attempt = [&](bool quotient) {
    TransformOptions o = opts;
    o.quotientFold = quotient;
    detail::Transformer t(src, o);
    SourceFile out = t.run();
    validateRestricted(out);
    return out;
  };
  SourceFile out = attempt(opts.quotientFold);
  if (boundedBisim(src, out, opts.bisimDepth, opts.bisimTrials, opts.seed, opts.evalBudget))
    return out;
  if (opts.quotientFold) {
    out = attempt(false);
    if (boundedBisim(src, out, opts.bisimDepth, opts.bisimTrials, opts.seed, opts.evalBudget))
      return out;
  }
  throw Error("transformer produced a residual program that is not trace-equivalent");
}

// ---------------------------------------------------------------------------
// Single driving step, for inspection and tests

struct Configuration {
  ExprPtr expr;
  std::vector<std::pair<Name, ExprPtr>> history;  // (label, alpha-canonical ancestor)
};

struct DriveOutcome {
  enum class Kind { Unfold, CaseSplit, Fold, Generalize };
  Kind kind;
  ExprPtr next;    // Unfold
  Name splitVar;   // CaseSplit
  Name target;     // Fold / Generalize: the ancestor label
};

inline DriveOutcome drive(const Configuration& c, const Program& defs,
                          long budget = kDefaultBudget) {
  Env env = Env::fromProgram(defs);
  EvalResult r = evalWHNF(c.expr, env, budget);
  ExprPtr n = r.expr;
  for (const auto& [label, anc] : c.history) {
    if (matchInstance(anc, n, freeVars(anc)))
      return {DriveOutcome::Kind::Fold, nullptr, {}, label};
  }
  for (const auto& [label, anc] : c.history) {
    if (homeomorphicEmbedding(anc, n))
      return {DriveOutcome::Kind::Generalize, nullptr, {}, label};
  }
  if (const auto* cs = as<Case>(n)) {
    if (const auto* v = as<Var>(cs->scrutinee))
      return {DriveOutcome::Kind::CaseSplit, nullptr, v->name, {}};
  }
  if (const auto* con = as<Con>(n); con && con->name == "Cons" && con->args.size() == 2)
    return {DriveOutcome::Kind::Unfold, con->args[1], {}, {}};
  return {DriveOutcome::Kind::Unfold, n, {}, {}};
}

}  // namespace rsl
