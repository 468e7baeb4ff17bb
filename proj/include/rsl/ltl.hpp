#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rsl/ast.hpp"
#include "rsl/eval.hpp"
#include "rsl/parser.hpp"
#include "rsl/pretty.hpp"

// LTL formulas over language-level atomic propositions, the three-valued
// truth domain, and the Kleene connectives written exactly as the nested
// case analyses of the verification rules.

namespace rsl {

enum class TruthVal { True, False, Undefined };

inline const char* truthName(TruthVal v) {
  switch (v) {
    case TruthVal::True: return "True";
    case TruthVal::False: return "False";
    case TruthVal::Undefined: return "Undefined";
  }
  return "?";
}

// rule (1)
inline TruthVal kAnd(TruthVal a, TruthVal b) {
  switch (a) {
    case TruthVal::True: return b;
    case TruthVal::False: return TruthVal::False;
    case TruthVal::Undefined:
      switch (b) {
        case TruthVal::False: return TruthVal::False;
        default: return TruthVal::Undefined;
      }
  }
  return TruthVal::Undefined;
}

// rule (2)
inline TruthVal kOr(TruthVal a, TruthVal b) {
  switch (a) {
    case TruthVal::True: return TruthVal::True;
    case TruthVal::False: return b;
    case TruthVal::Undefined:
      switch (b) {
        case TruthVal::True: return TruthVal::True;
        default: return TruthVal::Undefined;
      }
  }
  return TruthVal::Undefined;
}

// rule (3)
inline TruthVal kImplies(TruthVal a, TruthVal b) {
  switch (a) {
    case TruthVal::True: return b;
    case TruthVal::False: return TruthVal::True;
    case TruthVal::Undefined:
      switch (b) {
        case TruthVal::True: return TruthVal::True;
        default: return TruthVal::Undefined;
      }
  }
  return TruthVal::Undefined;
}

// rule (4)
inline TruthVal kNot(TruthVal a) {
  switch (a) {
    case TruthVal::True: return TruthVal::False;
    case TruthVal::False: return TruthVal::True;
    case TruthVal::Undefined: return TruthVal::Undefined;
  }
  return TruthVal::Undefined;
}

inline std::optional<TruthVal> truthValOf(const ExprPtr& e) {
  const auto* c = as<Con>(e);
  if (!c || !c->args.empty()) return std::nullopt;
  if (c->name == "True") return TruthVal::True;
  if (c->name == "False") return TruthVal::False;
  if (c->name == "Undefined") return TruthVal::Undefined;
  return std::nullopt;
}

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct FAtom {
  ExprPtr prop;  // expression with the distinguished free variable `s`
};
struct FNot {
  FormulaPtr arg;
};
struct FAnd {
  FormulaPtr lhs, rhs;
};
struct FOr {
  FormulaPtr lhs, rhs;
};
struct FImplies {
  FormulaPtr lhs, rhs;
};
struct FAlways {
  FormulaPtr arg;
};
struct FEventually {
  FormulaPtr arg;
};
struct FNext {
  FormulaPtr arg;
};

struct Formula {
  std::variant<FAtom, FNot, FAnd, FOr, FImplies, FAlways, FEventually, FNext> node;
};

inline FormulaPtr mkFormula(Formula f) { return std::make_shared<const Formula>(std::move(f)); }

template <class T>
const T* asF(const FormulaPtr& f) {
  return std::get_if<T>(&f->node);
}

inline std::string formulaToString(const FormulaPtr& f) {
  if (const auto* a = asF<FAtom>(f)) return "{" + prettyExpr(a->prop) + "}";
  if (const auto* n = asF<FNot>(f)) return "~" + formulaToString(n->arg);
  if (const auto* c = asF<FAnd>(f))
    return "(" + formulaToString(c->lhs) + " /\\ " + formulaToString(c->rhs) + ")";
  if (const auto* d = asF<FOr>(f))
    return "(" + formulaToString(d->lhs) + " \\/ " + formulaToString(d->rhs) + ")";
  if (const auto* i = asF<FImplies>(f))
    return "(" + formulaToString(i->lhs) + " => " + formulaToString(i->rhs) + ")";
  if (const auto* g = asF<FAlways>(f)) return "G " + formulaToString(g->arg);
  if (const auto* e = asF<FEventually>(f)) return "F " + formulaToString(e->arg);
  if (const auto* x = asF<FNext>(f)) return "X " + formulaToString(x->arg);
  return "?";
}

struct FormulaError : Error {
  using Error::Error;
};
struct TemporalInAtom : FormulaError {
  using FormulaError::FormulaError;
};

// Fairness: the set of event constructors assumed to occur infinitely often.
using FairnessSet = std::set<Name>;

namespace detail {

class FormulaParser {
 public:
  FormulaParser(const std::string& text, const ConstructorTable& table)
      : src_(text), table_(table) {}

  FormulaPtr parse() {
    skipWs();
    FormulaPtr f = parseImplies();
    skipWs();
    if (pos_ != src_.size())
      throw FormulaError("unexpected trailing input in formula", here());
    return f;
  }

 private:
  const std::string& src_;
  const ConstructorTable& table_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  SourceLoc here() const { return {line_, col_}; }

  void advance(size_t n) {
    for (size_t i = 0; i < n; ++i) {
      if (src_[pos_ + i] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
    pos_ += n;
  }

  void skipWs() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance(1);
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
      } else {
        break;
      }
    }
  }

  bool tryConsume(const std::string& tok) {
    skipWs();
    if (src_.compare(pos_, tok.size(), tok) == 0) {
      // letter keywords must not run into identifiers
      if (std::isalpha(static_cast<unsigned char>(tok[0]))) {
        size_t after = pos_ + tok.size();
        if (after < src_.size() && lex::identChar(src_[after])) return false;
      }
      advance(tok.size());
      return true;
    }
    return false;
  }

  FormulaPtr parseImplies() {
    FormulaPtr left = parseOr();
    if (tryConsume("=>")) {
      FormulaPtr right = parseImplies();
      return mkFormula({FImplies{left, right}});
    }
    return left;
  }

  FormulaPtr parseOr() {
    FormulaPtr left = parseAnd();
    while (tryConsume("\\/")) left = mkFormula({FOr{left, parseAnd()}});
    return left;
  }

  FormulaPtr parseAnd() {
    FormulaPtr left = parseUnary();
    while (tryConsume("/\\")) left = mkFormula({FAnd{left, parseUnary()}});
    return left;
  }

  FormulaPtr parseUnary() {
    skipWs();
    if (tryConsume("~")) return mkFormula({FNot{parseUnary()}});
    if (tryConsume("G")) return mkFormula({FAlways{parseUnary()}});
    if (tryConsume("F")) return mkFormula({FEventually{parseUnary()}});
    if (tryConsume("X")) return mkFormula({FNext{parseUnary()}});
    if (tryConsume("(")) {
      FormulaPtr f = parseImplies();
      if (!tryConsume(")")) throw FormulaError("expected ')' in formula", here());
      return f;
    }
    if (tryConsume("{")) return parseAtom();
    throw FormulaError("expected a formula", here());
  }

  FormulaPtr parseAtom() {
    size_t start = pos_;
    SourceLoc loc = here();
    int depth = 1;
    while (pos_ < src_.size()) {
      if (src_[pos_] == '{') ++depth;
      if (src_[pos_] == '}') {
        --depth;
        if (depth == 0) break;
      }
      advance(1);
    }
    if (pos_ >= src_.size()) throw FormulaError("unterminated atom, expected '}'", loc);
    std::string text = src_.substr(start, pos_ - start);
    advance(1);  // '}'
    ExprPtr prop;
    try {
      prop = parseExpr(text, table_);
    } catch (const UndeclaredConstructor& e) {
      std::string what = e.what();
      if (what.find("'G'") != std::string::npos || what.find("'F'") != std::string::npos ||
          what.find("'X'") != std::string::npos)
        throw TemporalInAtom("temporal operator inside an atomic proposition", loc);
      throw;
    }
    for (const auto& v : freeVars(prop))
      if (v != "s")
        throw FormulaError("atomic proposition may only mention the state variable 's', found '" +
                               v + "'",
                           loc);
    return mkFormula({FAtom{prop}});
  }
};

}  // namespace detail

inline FormulaPtr parseFormula(const std::string& text, const ConstructorTable& table) {
  return detail::FormulaParser(text, table).parse();
}

// rule (5d) substitution of the current state for `s`
inline ExprPtr substState(const ExprPtr& atom, const ExprPtr& state) {
  return substitute(atom, "s", state);
}

// Outcome of evaluating an atomic proposition against a state term.
struct AtomOutcome {
  enum class Kind { Value, FreeVariable, Divergence, NotTruthVal } kind;
  TruthVal value = TruthVal::Undefined;
  std::string detail;
};

inline AtomOutcome evalAtom(const ExprPtr& atom, const ExprPtr& state, const Env& env,
                            long budget = kDefaultBudget) {
  EvalResult r = evalGround(substState(atom, state), env, budget);
  switch (r.kind) {
    case EvalResult::Kind::BudgetExhausted:
      return {AtomOutcome::Kind::Divergence, TruthVal::Undefined, "budget exhausted"};
    case EvalResult::Kind::Stuck:
      if (stuckOnFreeVariable(r.stuck))
        return {AtomOutcome::Kind::FreeVariable, TruthVal::Undefined, stuckName(r.stuck)};
      return {AtomOutcome::Kind::NotTruthVal, TruthVal::Undefined, stuckName(r.stuck)};
    case EvalResult::Kind::Value:
      if (auto v = truthValOf(r.expr)) return {AtomOutcome::Kind::Value, *v, ""};
      return {AtomOutcome::Kind::NotTruthVal, TruthVal::Undefined,
              "proposition evaluated to '" + prettyExpr(r.expr) + "'"};
  }
  return {AtomOutcome::Kind::NotTruthVal, TruthVal::Undefined, "unreachable"};
}

}  // namespace rsl
