#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

// Core representation of the reactive-stream language: expressions, patterns,
// constructor tables, programs, and the basic binding-aware operations
// (free variables, capture-avoiding substitution, alpha equivalence).

namespace rsl {

using Name = std::string;

struct SourceLoc {
  int line = 0;
  int col = 0;
};

struct Error : std::runtime_error {
  SourceLoc loc{};
  explicit Error(const std::string& msg, SourceLoc where = {})
      : std::runtime_error(msg), loc(where) {}
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Patterns are flat: a constructor applied to distinct variables, or `_`.
struct Pattern {
  Name con;
  std::vector<Name> vars;
  bool wildcard = false;
  SourceLoc loc{};
};

struct Var {
  Name name;
};
struct Con {
  Name name;
  std::vector<ExprPtr> args;
};
struct Lam {
  Name param;
  ExprPtr body;
};
struct Fun {
  Name name;
};
struct App {
  ExprPtr fun;
  ExprPtr arg;
};
struct Branch {
  Pattern pat;
  ExprPtr body;
};
struct Case {
  ExprPtr scrutinee;
  std::vector<Branch> branches;
};
struct Let {
  Name binder;
  ExprPtr bound;
  ExprPtr body;
};
struct FunDef {
  Name name;
  ExprPtr body;
  SourceLoc loc{};
};
struct Where {
  ExprPtr body;
  std::vector<FunDef> defs;
};

struct Expr {
  std::variant<Var, Con, Lam, Fun, App, Case, Let, Where> node;
  SourceLoc loc{};
};

inline ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

inline ExprPtr mkVar(Name n, SourceLoc loc = {}) { return make({Var{std::move(n)}, loc}); }
inline ExprPtr mkCon(Name n, std::vector<ExprPtr> args, SourceLoc loc = {}) {
  return make({Con{std::move(n), std::move(args)}, loc});
}
inline ExprPtr mkLam(Name param, ExprPtr body, SourceLoc loc = {}) {
  return make({Lam{std::move(param), std::move(body)}, loc});
}
inline ExprPtr mkFun(Name n, SourceLoc loc = {}) { return make({Fun{std::move(n)}, loc}); }
// Application of a constructor extends the constructor node, so constructor
// application stays its own syntactic form (there is no way to distinguish
// the two in the concrete syntax, and oversaturation is an arity error).
inline ExprPtr mkApp(ExprPtr f, ExprPtr a, SourceLoc loc = {}) {
  if (const auto* c = std::get_if<Con>(&f->node)) {
    std::vector<ExprPtr> args = c->args;
    args.push_back(std::move(a));
    return make({Con{c->name, std::move(args)}, loc});
  }
  return make({App{std::move(f), std::move(a)}, loc});
}
inline ExprPtr mkCase(ExprPtr scrut, std::vector<Branch> branches, SourceLoc loc = {}) {
  return make({Case{std::move(scrut), std::move(branches)}, loc});
}
inline ExprPtr mkLet(Name binder, ExprPtr bound, ExprPtr body, SourceLoc loc = {}) {
  return make({Let{std::move(binder), std::move(bound), std::move(body)}, loc});
}
inline ExprPtr mkWhere(ExprPtr body, std::vector<FunDef> defs, SourceLoc loc = {}) {
  return make({Where{std::move(body), std::move(defs)}, loc});
}

template <class T>
const T* as(const ExprPtr& e) {
  return std::get_if<T>(&e->node);
}

// Left spine of an application chain: `f a b` -> (f, [a, b]).
inline std::pair<ExprPtr, std::vector<ExprPtr>> spine(ExprPtr e) {
  std::vector<ExprPtr> args;
  while (const auto* app = as<App>(e)) {
    args.push_back(app->arg);
    e = app->fun;
  }
  std::reverse(args.begin(), args.end());
  return {e, args};
}

inline ExprPtr mkApps(ExprPtr head, const std::vector<ExprPtr>& args) {
  for (const auto& a : args) head = mkApp(head, a);
  return head;
}

// Peels nested lambdas: `\x.\y.e` -> ([x, y], e).
inline std::pair<std::vector<Name>, ExprPtr> lamParams(ExprPtr e) {
  std::vector<Name> params;
  while (const auto* lam = as<Lam>(e)) {
    params.push_back(lam->param);
    e = lam->body;
  }
  return {params, e};
}

inline ExprPtr mkLams(const std::vector<Name>& params, ExprPtr body) {
  for (auto it = params.rbegin(); it != params.rend(); ++it) body = mkLam(*it, body);
  return body;
}

namespace detail {
inline void freeVarsInto(const ExprPtr& e, std::set<Name>& bound, std::set<Name>& out) {
  if (const auto* v = as<Var>(e)) {
    if (!bound.count(v->name)) out.insert(v->name);
  } else if (const auto* c = as<Con>(e)) {
    for (const auto& a : c->args) freeVarsInto(a, bound, out);
  } else if (const auto* l = as<Lam>(e)) {
    bool fresh = bound.insert(l->param).second;
    freeVarsInto(l->body, bound, out);
    if (fresh) bound.erase(l->param);
  } else if (as<Fun>(e)) {
  } else if (const auto* a = as<App>(e)) {
    freeVarsInto(a->fun, bound, out);
    freeVarsInto(a->arg, bound, out);
  } else if (const auto* cs = as<Case>(e)) {
    freeVarsInto(cs->scrutinee, bound, out);
    for (const auto& br : cs->branches) {
      std::vector<Name> added;
      for (const auto& x : br.pat.vars)
        if (bound.insert(x).second) added.push_back(x);
      freeVarsInto(br.body, bound, out);
      for (const auto& x : added) bound.erase(x);
    }
  } else if (const auto* lt = as<Let>(e)) {
    freeVarsInto(lt->bound, bound, out);
    bool fresh = bound.insert(lt->binder).second;
    freeVarsInto(lt->body, bound, out);
    if (fresh) bound.erase(lt->binder);
  } else if (const auto* w = as<Where>(e)) {
    freeVarsInto(w->body, bound, out);
    for (const auto& d : w->defs) freeVarsInto(d.body, bound, out);
  }
}
}  // namespace detail

inline std::set<Name> freeVars(const ExprPtr& e) {
  std::set<Name> bound, out;
  detail::freeVarsInto(e, bound, out);
  return out;
}

// Free variables in first-occurrence order (used for residual parameter lists).
inline std::vector<Name> freeVarsOrdered(const ExprPtr& e) {
  std::vector<Name> order;
  std::set<Name> seen;
  std::set<Name> fv = freeVars(e);
  // walk again recording order
  struct Walk {
    const std::set<Name>& fv;
    std::vector<Name>& order;
    std::set<Name>& seen;
    void go(const ExprPtr& e, std::set<Name>& bound) {
      if (const auto* v = as<Var>(e)) {
        if (!bound.count(v->name) && fv.count(v->name) && seen.insert(v->name).second)
          order.push_back(v->name);
      } else if (const auto* c = as<Con>(e)) {
        for (const auto& a : c->args) go(a, bound);
      } else if (const auto* l = as<Lam>(e)) {
        bool fresh = bound.insert(l->param).second;
        go(l->body, bound);
        if (fresh) bound.erase(l->param);
      } else if (const auto* a = as<App>(e)) {
        go(a->fun, bound);
        go(a->arg, bound);
      } else if (const auto* cs = as<Case>(e)) {
        go(cs->scrutinee, bound);
        for (const auto& br : cs->branches) {
          std::vector<Name> added;
          for (const auto& x : br.pat.vars)
            if (bound.insert(x).second) added.push_back(x);
          go(br.body, bound);
          for (const auto& x : added) bound.erase(x);
        }
      } else if (const auto* lt = as<Let>(e)) {
        go(lt->bound, bound);
        bool fresh = bound.insert(lt->binder).second;
        go(lt->body, bound);
        if (fresh) bound.erase(lt->binder);
      } else if (const auto* w = as<Where>(e)) {
        go(w->body, bound);
        for (const auto& d : w->defs) go(d.body, bound);
      }
    }
  };
  std::set<Name> bound;
  Walk{fv, order, seen}.go(e, bound);
  return order;
}

// Function names referenced but not bound by an enclosing `where`.
inline void freeFunsInto(const ExprPtr& e, std::set<Name>& bound, std::set<Name>& out) {
  if (const auto* f = as<Fun>(e)) {
    if (!bound.count(f->name)) out.insert(f->name);
  } else if (const auto* c = as<Con>(e)) {
    for (const auto& a : c->args) freeFunsInto(a, bound, out);
  } else if (const auto* l = as<Lam>(e)) {
    freeFunsInto(l->body, bound, out);
  } else if (const auto* a = as<App>(e)) {
    freeFunsInto(a->fun, bound, out);
    freeFunsInto(a->arg, bound, out);
  } else if (const auto* cs = as<Case>(e)) {
    freeFunsInto(cs->scrutinee, bound, out);
    for (const auto& br : cs->branches) freeFunsInto(br.body, bound, out);
  } else if (const auto* lt = as<Let>(e)) {
    freeFunsInto(lt->bound, bound, out);
    freeFunsInto(lt->body, bound, out);
  } else if (const auto* w = as<Where>(e)) {
    std::vector<Name> added;
    for (const auto& d : w->defs)
      if (bound.insert(d.name).second) added.push_back(d.name);
    freeFunsInto(w->body, bound, out);
    for (const auto& d : w->defs) freeFunsInto(d.body, bound, out);
    for (const auto& x : added) bound.erase(x);
  }
}

inline std::set<Name> freeFuns(const ExprPtr& e) {
  std::set<Name> bound, out;
  freeFunsInto(e, bound, out);
  return out;
}

// Deterministic fresh names: strip any existing `$k` suffix, then probe
// `root$1`, `root$2`, ... against the avoid set.
inline Name freshName(const Name& base, const std::set<Name>& avoid) {
  Name root = base;
  auto dollar = root.rfind('$');
  if (dollar != Name::npos && dollar + 1 < root.size() &&
      root.find_first_not_of("0123456789", dollar + 1) == Name::npos)
    root = root.substr(0, dollar);
  for (int k = 1;; ++k) {
    Name cand = root + "$" + std::to_string(k);
    if (!avoid.count(cand)) return cand;
  }
}

inline ExprPtr substituteMany(const ExprPtr& e, const std::map<Name, ExprPtr>& sub);

namespace detail {
inline std::map<Name, ExprPtr> dropKeys(std::map<Name, ExprPtr> sub,
                                         const std::vector<Name>& keys) {
  for (const auto& k : keys) sub.erase(k);
  return sub;
}

// Restricts to the variables actually free in `body`, so untouched binders
// never trigger spurious renaming.
inline std::map<Name, ExprPtr> restrictTo(const std::map<Name, ExprPtr>& sub,
                                          const std::set<Name>& fv) {
  std::map<Name, ExprPtr> out;
  for (const auto& [k, v] : sub)
    if (fv.count(k)) out.emplace(k, v);
  return out;
}

inline std::set<Name> valuesFreeVars(const std::map<Name, ExprPtr>& sub) {
  std::set<Name> out;
  for (const auto& [k, v] : sub) {
    auto fv = freeVars(v);
    out.insert(fv.begin(), fv.end());
  }
  return out;
}

// Rebinds `binders` (renaming them when they would capture a substituted
// value) and returns the adjusted substitution for the body.
inline std::pair<std::vector<Name>, std::map<Name, ExprPtr>> adjustBinders(
    const std::vector<Name>& binders, std::map<Name, ExprPtr> sub,
    const std::set<Name>& bodyFv) {
  sub = dropKeys(std::move(sub), binders);
  sub = restrictTo(sub, bodyFv);
  if (sub.empty()) return {binders, sub};
  std::set<Name> clash = valuesFreeVars(sub);
  std::vector<Name> out = binders;
  for (auto& b : out) {
    if (!clash.count(b)) continue;
    std::set<Name> avoid = clash;
    avoid.insert(bodyFv.begin(), bodyFv.end());
    for (const auto& o : out) avoid.insert(o);
    for (const auto& [k, v] : sub) avoid.insert(k);
    Name nb = freshName(b, avoid);
    sub[b] = mkVar(nb);
    b = nb;
  }
  return {out, sub};
}
}  // namespace detail

// Simultaneous capture-avoiding substitution of variables.
inline ExprPtr substituteMany(const ExprPtr& e, const std::map<Name, ExprPtr>& sub) {
  if (sub.empty()) return e;
  if (const auto* v = as<Var>(e)) {
    auto it = sub.find(v->name);
    return it == sub.end() ? e : it->second;
  }
  if (const auto* c = as<Con>(e)) {
    std::vector<ExprPtr> args;
    args.reserve(c->args.size());
    for (const auto& a : c->args) args.push_back(substituteMany(a, sub));
    return mkCon(c->name, std::move(args), e->loc);
  }
  if (const auto* l = as<Lam>(e)) {
    auto [binders, inner] =
        detail::adjustBinders({l->param}, sub, freeVars(l->body));
    return mkLam(binders[0], substituteMany(l->body, inner), e->loc);
  }
  if (as<Fun>(e)) return e;
  if (const auto* a = as<App>(e))
    return mkApp(substituteMany(a->fun, sub), substituteMany(a->arg, sub), e->loc);
  if (const auto* cs = as<Case>(e)) {
    std::vector<Branch> branches;
    branches.reserve(cs->branches.size());
    for (const auto& br : cs->branches) {
      auto [binders, inner] =
          detail::adjustBinders(br.pat.vars, sub, freeVars(br.body));
      Pattern p = br.pat;
      p.vars = binders;
      branches.push_back({std::move(p), substituteMany(br.body, inner)});
    }
    return mkCase(substituteMany(cs->scrutinee, sub), std::move(branches), e->loc);
  }
  if (const auto* lt = as<Let>(e)) {
    ExprPtr bound = substituteMany(lt->bound, sub);
    auto [binders, inner] =
        detail::adjustBinders({lt->binder}, sub, freeVars(lt->body));
    return mkLet(binders[0], std::move(bound), substituteMany(lt->body, inner), e->loc);
  }
  if (const auto* w = as<Where>(e)) {
    std::vector<FunDef> defs;
    defs.reserve(w->defs.size());
    for (const auto& d : w->defs) defs.push_back({d.name, substituteMany(d.body, sub), d.loc});
    return mkWhere(substituteMany(w->body, sub), std::move(defs), e->loc);
  }
  return e;
}

inline ExprPtr substitute(const ExprPtr& e, const Name& x, const ExprPtr& value) {
  return substituteMany(e, {{x, value}});
}

namespace detail {
inline bool alphaEqRec(const ExprPtr& a, const ExprPtr& b, std::map<Name, Name>& l2r,
                       std::map<Name, Name>& r2l) {
  auto bindPair = [&](const Name& x, const Name& y, auto&& k) {
    auto savedL = l2r.find(x) != l2r.end() ? std::optional<Name>(l2r[x]) : std::nullopt;
    auto savedR = r2l.find(y) != r2l.end() ? std::optional<Name>(r2l[y]) : std::nullopt;
    l2r[x] = y;
    r2l[y] = x;
    bool ok = k();
    if (savedL) l2r[x] = *savedL; else l2r.erase(x);
    if (savedR) r2l[y] = *savedR; else r2l.erase(y);
    return ok;
  };
  if (a->node.index() != b->node.index()) return false;
  if (const auto* va = as<Var>(a)) {
    const auto* vb = as<Var>(b);
    auto itL = l2r.find(va->name);
    auto itR = r2l.find(vb->name);
    if (itL == l2r.end() && itR == r2l.end()) return va->name == vb->name;
    return itL != l2r.end() && itR != r2l.end() && itL->second == vb->name &&
           itR->second == va->name;
  }
  if (const auto* ca = as<Con>(a)) {
    const auto* cb = as<Con>(b);
    if (ca->name != cb->name || ca->args.size() != cb->args.size()) return false;
    for (size_t i = 0; i < ca->args.size(); ++i)
      if (!alphaEqRec(ca->args[i], cb->args[i], l2r, r2l)) return false;
    return true;
  }
  if (const auto* la = as<Lam>(a)) {
    const auto* lb = as<Lam>(b);
    return bindPair(la->param, lb->param,
                    [&] { return alphaEqRec(la->body, lb->body, l2r, r2l); });
  }
  if (const auto* fa = as<Fun>(a)) return fa->name == as<Fun>(b)->name;
  if (const auto* aa = as<App>(a)) {
    const auto* ab = as<App>(b);
    return alphaEqRec(aa->fun, ab->fun, l2r, r2l) && alphaEqRec(aa->arg, ab->arg, l2r, r2l);
  }
  if (const auto* ca = as<Case>(a)) {
    const auto* cb = as<Case>(b);
    if (ca->branches.size() != cb->branches.size()) return false;
    if (!alphaEqRec(ca->scrutinee, cb->scrutinee, l2r, r2l)) return false;
    for (size_t i = 0; i < ca->branches.size(); ++i) {
      const auto& ba = ca->branches[i];
      const auto& bb = cb->branches[i];
      if (ba.pat.wildcard != bb.pat.wildcard || ba.pat.con != bb.pat.con ||
          ba.pat.vars.size() != bb.pat.vars.size())
        return false;
      std::function<bool(size_t)> bindAll = [&](size_t j) -> bool {
        if (j == ba.pat.vars.size()) return alphaEqRec(ba.body, bb.body, l2r, r2l);
        return bindPair(ba.pat.vars[j], bb.pat.vars[j], [&] { return bindAll(j + 1); });
      };
      if (!bindAll(0)) return false;
    }
    return true;
  }
  if (const auto* la = as<Let>(a)) {
    const auto* lb = as<Let>(b);
    if (!alphaEqRec(la->bound, lb->bound, l2r, r2l)) return false;
    return bindPair(la->binder, lb->binder,
                    [&] { return alphaEqRec(la->body, lb->body, l2r, r2l); });
  }
  if (const auto* wa = as<Where>(a)) {
    const auto* wb = as<Where>(b);
    if (wa->defs.size() != wb->defs.size()) return false;
    for (size_t i = 0; i < wa->defs.size(); ++i) {
      if (wa->defs[i].name != wb->defs[i].name) return false;
      if (!alphaEqRec(wa->defs[i].body, wb->defs[i].body, l2r, r2l)) return false;
    }
    return alphaEqRec(wa->body, wb->body, l2r, r2l);
  }
  return false;
}
}  // namespace detail

// Equality up to consistent renaming of bound variables. Function names and
// free variables match literally.
inline bool alphaEq(const ExprPtr& a, const ExprPtr& b) {
  std::map<Name, Name> l2r, r2l;
  return detail::alphaEqRec(a, b, l2r, r2l);
}

inline bool exprEq(const ExprPtr& a, const ExprPtr& b) {
  if (a->node.index() != b->node.index()) return false;
  if (const auto* va = as<Var>(a)) return va->name == as<Var>(b)->name;
  if (const auto* ca = as<Con>(a)) {
    const auto* cb = as<Con>(b);
    if (ca->name != cb->name || ca->args.size() != cb->args.size()) return false;
    for (size_t i = 0; i < ca->args.size(); ++i)
      if (!exprEq(ca->args[i], cb->args[i])) return false;
    return true;
  }
  if (const auto* la = as<Lam>(a)) {
    const auto* lb = as<Lam>(b);
    return la->param == lb->param && exprEq(la->body, lb->body);
  }
  if (const auto* fa = as<Fun>(a)) return fa->name == as<Fun>(b)->name;
  if (const auto* aa = as<App>(a)) {
    const auto* ab = as<App>(b);
    return exprEq(aa->fun, ab->fun) && exprEq(aa->arg, ab->arg);
  }
  if (const auto* ca = as<Case>(a)) {
    const auto* cb = as<Case>(b);
    if (ca->branches.size() != cb->branches.size()) return false;
    if (!exprEq(ca->scrutinee, cb->scrutinee)) return false;
    for (size_t i = 0; i < ca->branches.size(); ++i) {
      const auto& x = ca->branches[i];
      const auto& y = cb->branches[i];
      if (x.pat.wildcard != y.pat.wildcard || x.pat.con != y.pat.con || x.pat.vars != y.pat.vars)
        return false;
      if (!exprEq(x.body, y.body)) return false;
    }
    return true;
  }
  if (const auto* la = as<Let>(a)) {
    const auto* lb = as<Let>(b);
    return la->binder == lb->binder && exprEq(la->bound, lb->bound) && exprEq(la->body, lb->body);
  }
  if (const auto* wa = as<Where>(a)) {
    const auto* wb = as<Where>(b);
    if (wa->defs.size() != wb->defs.size()) return false;
    for (size_t i = 0; i < wa->defs.size(); ++i)
      if (wa->defs[i].name != wb->defs[i].name || !exprEq(wa->defs[i].body, wb->defs[i].body))
        return false;
    return exprEq(wa->body, wb->body);
  }
  return false;
}

struct ConstructorInfo {
  int arity = 0;
  Name datatype;
};

struct DataDecl {
  Name name;
  std::vector<std::pair<Name, int>> ctors;
};

class ConstructorTable {
 public:
  void declare(const Name& ctor, int arity, const Name& datatype, SourceLoc loc = {}) {
    if (byName_.count(ctor))
      throw Error("constructor '" + ctor + "' declared more than once", loc);
    byName_[ctor] = ConstructorInfo{arity, datatype};
  }
  bool isDeclared(const Name& ctor) const { return byName_.count(ctor) != 0; }
  const ConstructorInfo& info(const Name& ctor) const {
    auto it = byName_.find(ctor);
    if (it == byName_.end()) throw Error("undeclared constructor '" + ctor + "'");
    return it->second;
  }
  int arity(const Name& ctor) const { return info(ctor).arity; }

  static ConstructorTable withBuiltins() {
    ConstructorTable t;
    t.declare("Cons", 2, "Stream");
    t.declare("True", 0, "TruthVal");
    t.declare("False", 0, "TruthVal");
    t.declare("Undefined", 0, "TruthVal");
    return t;
  }

 private:
  std::map<Name, ConstructorInfo> byName_;
};

// A parsed compilation unit: datatype declarations plus the main expression
// (typically a `where`).
struct SourceFile {
  std::vector<DataDecl> datatypes;
  ExprPtr main;
  ConstructorTable table = ConstructorTable::withBuiltins();

  // Event alphabet, in declaration order.
  std::vector<Name> events() const {
    for (const auto& d : datatypes)
      if (d.name == "Event") {
        std::vector<Name> out;
        for (const auto& [c, a] : d.ctors) out.push_back(c);
        return out;
      }
    return {};
  }
};

// Flat view of a program: top expression with every where-definition hoisted
// into one namespace. Duplicate names are rejected, so hoisting preserves
// scoping.
struct Program {
  ExprPtr top;
  std::vector<FunDef> defs;

  const ExprPtr* lookup(const Name& f) const {
    for (const auto& d : defs)
      if (d.name == f) return &d.body;
    return nullptr;
  }
};

namespace detail {
inline ExprPtr hoistWhere(const ExprPtr& e, std::vector<FunDef>& defs) {
  if (const auto* w = as<Where>(e)) {
    for (const auto& d : w->defs) {
      for (const auto& existing : defs)
        if (existing.name == d.name)
          throw Error("duplicate function definition '" + d.name + "'", d.loc);
      defs.push_back({d.name, d.body, d.loc});
    }
    // definitions may themselves contain nested where blocks
    size_t first = defs.size() - w->defs.size();
    for (size_t i = first; i < defs.size(); ++i) defs[i].body = hoistWhere(defs[i].body, defs);
    return hoistWhere(w->body, defs);
  }
  if (const auto* c = as<Con>(e)) {
    std::vector<ExprPtr> args;
    for (const auto& a : c->args) args.push_back(hoistWhere(a, defs));
    return mkCon(c->name, std::move(args), e->loc);
  }
  if (const auto* l = as<Lam>(e)) return mkLam(l->param, hoistWhere(l->body, defs), e->loc);
  if (const auto* a = as<App>(e))
    return mkApp(hoistWhere(a->fun, defs), hoistWhere(a->arg, defs), e->loc);
  if (const auto* cs = as<Case>(e)) {
    std::vector<Branch> branches;
    for (const auto& br : cs->branches) branches.push_back({br.pat, hoistWhere(br.body, defs)});
    return mkCase(hoistWhere(cs->scrutinee, defs), std::move(branches), e->loc);
  }
  if (const auto* lt = as<Let>(e))
    return mkLet(lt->binder, hoistWhere(lt->bound, defs), hoistWhere(lt->body, defs), e->loc);
  return e;
}
}  // namespace detail

inline Program flatten(const SourceFile& sf) {
  Program p;
  p.top = detail::hoistWhere(sf.main, p.defs);
  return p;
}

// Checks that every constructor use (expressions and patterns) is saturated.
inline void arityCheck(const ExprPtr& e, const ConstructorTable& table) {
  if (const auto* c = as<Con>(e)) {
    int want = table.arity(c->name);
    if (static_cast<int>(c->args.size()) != want)
      throw Error("constructor '" + c->name + "' expects " + std::to_string(want) +
                      " arguments, got " + std::to_string(c->args.size()),
                  e->loc);
    for (const auto& a : c->args) arityCheck(a, table);
  } else if (const auto* l = as<Lam>(e)) {
    arityCheck(l->body, table);
  } else if (const auto* a = as<App>(e)) {
    arityCheck(a->fun, table);
    arityCheck(a->arg, table);
  } else if (const auto* cs = as<Case>(e)) {
    arityCheck(cs->scrutinee, table);
    for (const auto& br : cs->branches) {
      if (!br.pat.wildcard) {
        int want = table.arity(br.pat.con);
        if (static_cast<int>(br.pat.vars.size()) != want)
          throw Error("pattern '" + br.pat.con + "' expects " + std::to_string(want) +
                          " variables, got " + std::to_string(br.pat.vars.size()),
                      br.pat.loc);
      }
      arityCheck(br.body, table);
    }
  } else if (const auto* lt = as<Let>(e)) {
    arityCheck(lt->bound, table);
    arityCheck(lt->body, table);
  } else if (const auto* w = as<Where>(e)) {
    arityCheck(w->body, table);
    for (const auto& d : w->defs) arityCheck(d.body, table);
  }
}

inline void arityCheck(const SourceFile& sf) { arityCheck(sf.main, sf.table); }

// One-way matching: binds `pattern`'s bindable free variables to subterms of
// `subject`; bound variables must correspond one-to-one. Used for folding.
namespace detail {
inline bool matchRec(const ExprPtr& pat, const ExprPtr& sub, const std::set<Name>& bindable,
                     std::map<Name, ExprPtr>& theta, std::map<Name, Name>& boundMap,
                     std::set<Name>& subjBound) {
  if (const auto* v = as<Var>(pat)) {
    auto bm = boundMap.find(v->name);
    if (bm != boundMap.end()) {
      const auto* sv = as<Var>(sub);
      return sv && sv->name == bm->second;
    }
    if (bindable.count(v->name)) {
      // a binding may not capture the subject's locally bound variables
      auto fv = freeVars(sub);
      for (const auto& x : fv)
        if (subjBound.count(x)) return false;
      auto it = theta.find(v->name);
      if (it != theta.end()) return exprEq(it->second, sub);
      theta[v->name] = sub;
      return true;
    }
    const auto* sv = as<Var>(sub);
    return sv && sv->name == v->name;
  }
  if (pat->node.index() != sub->node.index()) return false;
  if (const auto* c = as<Con>(pat)) {
    const auto* d = as<Con>(sub);
    if (c->name != d->name || c->args.size() != d->args.size()) return false;
    for (size_t i = 0; i < c->args.size(); ++i)
      if (!matchRec(c->args[i], d->args[i], bindable, theta, boundMap, subjBound)) return false;
    return true;
  }
  if (const auto* l = as<Lam>(pat)) {
    const auto* m = as<Lam>(sub);
    auto saved = boundMap.count(l->param) ? std::optional<Name>(boundMap[l->param]) : std::nullopt;
    boundMap[l->param] = m->param;
    bool insertedSubj = subjBound.insert(m->param).second;
    bool ok = matchRec(l->body, m->body, bindable, theta, boundMap, subjBound);
    if (saved) boundMap[l->param] = *saved; else boundMap.erase(l->param);
    if (insertedSubj) subjBound.erase(m->param);
    return ok;
  }
  if (const auto* f = as<Fun>(pat)) return f->name == as<Fun>(sub)->name;
  if (const auto* a = as<App>(pat)) {
    const auto* b = as<App>(sub);
    return matchRec(a->fun, b->fun, bindable, theta, boundMap, subjBound) &&
           matchRec(a->arg, b->arg, bindable, theta, boundMap, subjBound);
  }
  if (const auto* cs = as<Case>(pat)) {
    const auto* ds = as<Case>(sub);
    if (cs->branches.size() != ds->branches.size()) return false;
    if (!matchRec(cs->scrutinee, ds->scrutinee, bindable, theta, boundMap, subjBound))
      return false;
    for (size_t i = 0; i < cs->branches.size(); ++i) {
      const auto& bp = cs->branches[i];
      const auto& bs = ds->branches[i];
      if (bp.pat.wildcard != bs.pat.wildcard || bp.pat.con != bs.pat.con ||
          bp.pat.vars.size() != bs.pat.vars.size())
        return false;
      std::vector<std::optional<Name>> saved;
      std::vector<bool> insertedSubj;
      for (size_t j = 0; j < bp.pat.vars.size(); ++j) {
        saved.push_back(boundMap.count(bp.pat.vars[j])
                            ? std::optional<Name>(boundMap[bp.pat.vars[j]])
                            : std::nullopt);
        boundMap[bp.pat.vars[j]] = bs.pat.vars[j];
        insertedSubj.push_back(subjBound.insert(bs.pat.vars[j]).second);
      }
      bool ok = matchRec(bp.body, bs.body, bindable, theta, boundMap, subjBound);
      for (size_t j = bp.pat.vars.size(); j-- > 0;) {
        if (saved[j]) boundMap[bp.pat.vars[j]] = *saved[j]; else boundMap.erase(bp.pat.vars[j]);
        if (insertedSubj[j]) subjBound.erase(bs.pat.vars[j]);
      }
      if (!ok) return false;
    }
    return true;
  }
  if (const auto* l = as<Let>(pat)) {
    const auto* m = as<Let>(sub);
    if (!matchRec(l->bound, m->bound, bindable, theta, boundMap, subjBound)) return false;
    auto saved = boundMap.count(l->binder) ? std::optional<Name>(boundMap[l->binder]) : std::nullopt;
    boundMap[l->binder] = m->binder;
    bool insertedSubj = subjBound.insert(m->binder).second;
    bool ok = matchRec(l->body, m->body, bindable, theta, boundMap, subjBound);
    if (saved) boundMap[l->binder] = *saved; else boundMap.erase(l->binder);
    if (insertedSubj) subjBound.erase(m->binder);
    return ok;
  }
  if (const auto* w = as<Where>(pat)) {
    const auto* x = as<Where>(sub);
    if (w->defs.size() != x->defs.size()) return false;
    for (size_t i = 0; i < w->defs.size(); ++i) {
      if (w->defs[i].name != x->defs[i].name) return false;
      if (!matchRec(w->defs[i].body, x->defs[i].body, bindable, theta, boundMap, subjBound))
        return false;
    }
    return matchRec(w->body, x->body, bindable, theta, boundMap, subjBound);
  }
  return false;
}
}  // namespace detail

inline std::optional<std::map<Name, ExprPtr>> matchInstance(const ExprPtr& pattern,
                                                            const ExprPtr& subject,
                                                            const std::set<Name>& bindable) {
  std::map<Name, ExprPtr> theta;
  std::map<Name, Name> boundMap;
  std::set<Name> subjBound;
  if (detail::matchRec(pattern, subject, bindable, theta, boundMap, subjBound)) return theta;
  return std::nullopt;
}

}  // namespace rsl
