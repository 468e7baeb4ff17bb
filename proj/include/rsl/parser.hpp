#pragma once

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rsl/ast.hpp"

// Concrete syntax (documented in docs/language.md):
//   \x y.e                      lambda, multi-parameter sugar
//   case e of P1: e1 | P2: e2;  the `;` optionally closes a nested case
//   let x = e0 in e1
//   e0 where f1 = e1; ...; fn = en;
//   data Event = Request1/0 | Take1/0;
// Constructors start uppercase, variables and functions lowercase,
// `_` is the wildcard, `--` starts a line comment.

namespace rsl {

struct SyntaxError : Error {
  using Error::Error;
};
struct UndeclaredConstructor : Error {
  using Error::Error;
};

namespace lex {

enum class Tok {
  LowerIdent,
  UpperIdent,
  Lambda,
  Dot,
  LParen,
  RParen,
  Equals,
  Bar,
  Colon,
  Semi,
  Slash,
  Underscore,
  Number,
  KwCase,
  KwOf,
  KwLet,
  KwIn,
  KwWhere,
  KwData,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourceLoc loc;
};

inline bool identStart(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
inline bool identChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '$';
}

inline std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto loc = [&] { return SourceLoc{line, col}; };
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    SourceLoc here = loc();
    switch (c) {
      case '\\': out.push_back({Tok::Lambda, "\\", here}); advance(1); continue;
      case '.': out.push_back({Tok::Dot, ".", here}); advance(1); continue;
      case '(': out.push_back({Tok::LParen, "(", here}); advance(1); continue;
      case ')': out.push_back({Tok::RParen, ")", here}); advance(1); continue;
      case '=': out.push_back({Tok::Equals, "=", here}); advance(1); continue;
      case '|': out.push_back({Tok::Bar, "|", here}); advance(1); continue;
      case ':': out.push_back({Tok::Colon, ":", here}); advance(1); continue;
      case ';': out.push_back({Tok::Semi, ";", here}); advance(1); continue;
      case '/': out.push_back({Tok::Slash, "/", here}); advance(1); continue;
      default: break;
    }
    if (c == '_' && (i + 1 >= src.size() || !identChar(src[i + 1]))) {
      out.push_back({Tok::Underscore, "_", here});
      advance(1);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Number, src.substr(i, j - i), here});
      advance(j - i);
      continue;
    }
    if (identStart(c) || c == '_') {
      size_t j = i;
      while (j < src.size() && identChar(src[j])) ++j;
      std::string word = src.substr(i, j - i);
      Tok kind;
      if (word == "case")
        kind = Tok::KwCase;
      else if (word == "of")
        kind = Tok::KwOf;
      else if (word == "let")
        kind = Tok::KwLet;
      else if (word == "in")
        kind = Tok::KwIn;
      else if (word == "where")
        kind = Tok::KwWhere;
      else if (word == "data")
        kind = Tok::KwData;
      else if (std::isupper(static_cast<unsigned char>(word[0])))
        kind = Tok::UpperIdent;
      else
        kind = Tok::LowerIdent;
      out.push_back({kind, word, here});
      advance(j - i);
      continue;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", here);
  }
  out.push_back({Tok::End, "", loc()});
  return out;
}

}  // namespace lex

namespace detail {

// Rewrites free occurrences of `names` from Var to Fun; used when a where
// body was parsed before its definitions came into scope.
inline ExprPtr resolveFuns(const ExprPtr& e, std::set<Name> names) {
  if (names.empty()) return e;
  if (const auto* v = as<Var>(e)) return names.count(v->name) ? mkFun(v->name, e->loc) : e;
  if (const auto* c = as<Con>(e)) {
    std::vector<ExprPtr> args;
    for (const auto& a : c->args) args.push_back(resolveFuns(a, names));
    return mkCon(c->name, std::move(args), e->loc);
  }
  if (const auto* l = as<Lam>(e)) {
    auto inner = names;
    inner.erase(l->param);
    return mkLam(l->param, resolveFuns(l->body, inner), e->loc);
  }
  if (as<Fun>(e)) return e;
  if (const auto* a = as<App>(e))
    return mkApp(resolveFuns(a->fun, names), resolveFuns(a->arg, names), e->loc);
  if (const auto* cs = as<Case>(e)) {
    std::vector<Branch> branches;
    for (const auto& br : cs->branches) {
      auto inner = names;
      for (const auto& x : br.pat.vars) inner.erase(x);
      branches.push_back({br.pat, resolveFuns(br.body, inner)});
    }
    return mkCase(resolveFuns(cs->scrutinee, names), std::move(branches), e->loc);
  }
  if (const auto* lt = as<Let>(e)) {
    auto inner = names;
    inner.erase(lt->binder);
    return mkLet(lt->binder, resolveFuns(lt->bound, names), resolveFuns(lt->body, inner), e->loc);
  }
  if (const auto* w = as<Where>(e)) {
    std::vector<FunDef> defs;
    for (const auto& d : w->defs) defs.push_back({d.name, resolveFuns(d.body, names), d.loc});
    return mkWhere(resolveFuns(w->body, names), std::move(defs), e->loc);
  }
  return e;
}

class Parser {
 public:
  Parser(std::string src, ConstructorTable table, std::set<Name> funScope = {})
      : toks_(lex::tokenize(src)), table_(std::move(table)) {
    if (!funScope.empty()) scopes_.push_back({true, std::move(funScope)});
  }

  SourceFile parseFile() {
    SourceFile sf;
    sf.table = std::move(table_);
    while (at(lex::Tok::KwData)) parseDataDecl(sf);
    table_ = sf.table;
    sf.main = parseExprTop();
    expect(lex::Tok::End, "end of input");
    sf.table = std::move(table_);
    return sf;
  }

  ExprPtr parseSingleExpr() {
    ExprPtr e = parseExprTop();
    expect(lex::Tok::End, "end of input");
    return e;
  }

 private:
  struct Scope {
    bool isFun;
    std::set<Name> names;
  };

  std::vector<lex::Token> toks_;
  size_t pos_ = 0;
  ConstructorTable table_ = ConstructorTable::withBuiltins();
  std::vector<Scope> scopes_;

  const lex::Token& cur() const { return toks_[pos_]; }
  const lex::Token& peek(size_t n) const {
    size_t i = pos_ + n;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(lex::Tok k) const { return cur().kind == k; }
  lex::Token eat() { return toks_[pos_++]; }
  lex::Token expect(lex::Tok k, const std::string& what) {
    if (!at(k))
      throw SyntaxError("expected " + what + ", found '" +
                            (at(lex::Tok::End) ? std::string("end of input") : cur().text) + "'",
                        cur().loc);
    return eat();
  }

  // innermost scope containing the name decides var vs fun
  bool resolvesToFun(const Name& n) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (it->names.count(n)) return it->isFun;
    return false;
  }

  void parseDataDecl(SourceFile& sf) {
    expect(lex::Tok::KwData, "'data'");
    auto name = expect(lex::Tok::UpperIdent, "datatype name");
    expect(lex::Tok::Equals, "'='");
    DataDecl decl{name.text, {}};
    while (true) {
      auto ctor = expect(lex::Tok::UpperIdent, "constructor name");
      expect(lex::Tok::Slash, "'/' before arity");
      auto num = expect(lex::Tok::Number, "constructor arity");
      int arity = std::stoi(num.text);
      sf.table.declare(ctor.text, arity, decl.name, ctor.loc);
      decl.ctors.emplace_back(ctor.text, arity);
      if (at(lex::Tok::Bar)) {
        eat();
        continue;
      }
      break;
    }
    expect(lex::Tok::Semi, "';' after data declaration");
    sf.datatypes.push_back(std::move(decl));
  }

  ExprPtr parseExprTop() {
    ExprPtr e = parseExpr();
    while (at(lex::Tok::KwWhere)) e = parseWhereTail(e);
    return e;
  }

  // Scans ahead (without consuming) for the definition names of a where
  // block starting at the current position.
  std::set<Name> scanDefNames() const {
    std::set<Name> names;
    size_t j = pos_;
    int depth = 0;
    bool expectDef = true;
    while (toks_[j].kind != lex::Tok::End) {
      lex::Tok k = toks_[j].kind;
      if (k == lex::Tok::LParen) ++depth;
      if (k == lex::Tok::RParen) {
        if (depth == 0) break;
        --depth;
      }
      if (depth == 0 && expectDef && k == lex::Tok::LowerIdent &&
          toks_[j + 1].kind == lex::Tok::Equals)
        names.insert(toks_[j].text);
      expectDef = (depth == 0 && k == lex::Tok::Semi);
      ++j;
    }
    return names;
  }

  ExprPtr parseWhereTail(ExprPtr body) {
    SourceLoc loc = eat().loc;  // 'where'
    std::set<Name> names = scanDefNames();
    if (names.empty()) throw SyntaxError("empty where block", loc);
    scopes_.push_back({true, names});
    std::vector<FunDef> defs;
    while (at(lex::Tok::LowerIdent) && peek(1).kind == lex::Tok::Equals) {
      lex::Token id = eat();
      eat();  // '='
      ExprPtr rhs = parseExpr();
      if (at(lex::Tok::Semi))
        eat();
      else if (pos_ == 0 || toks_[pos_ - 1].kind != lex::Tok::Semi)
        throw SyntaxError("expected ';' after definition of '" + id.text + "'", cur().loc);
      defs.push_back({id.text, rhs, id.loc});
    }
    scopes_.pop_back();
    if (defs.empty()) throw SyntaxError("empty where block", loc);
    return mkWhere(resolveFuns(body, names), std::move(defs), loc);
  }

  ExprPtr parseExpr() {
    if (at(lex::Tok::Lambda)) return parseLambda();
    if (at(lex::Tok::KwLet)) return parseLet();
    if (at(lex::Tok::KwCase)) return parseCase();
    return parseApplication();
  }

  ExprPtr parseLambda() {
    SourceLoc loc = eat().loc;
    std::vector<Name> params;
    while (at(lex::Tok::LowerIdent)) params.push_back(eat().text);
    if (params.empty()) throw SyntaxError("lambda needs at least one parameter", loc);
    expect(lex::Tok::Dot, "'.' after lambda parameters");
    scopes_.push_back({false, {params.begin(), params.end()}});
    ExprPtr body = parseExpr();
    scopes_.pop_back();
    ExprPtr out = mkLams(params, body);
    return make({out->node, loc});
  }

  ExprPtr parseLet() {
    SourceLoc loc = eat().loc;
    auto binder = expect(lex::Tok::LowerIdent, "let binder");
    expect(lex::Tok::Equals, "'=' in let");
    ExprPtr bound = parseExpr();
    expect(lex::Tok::KwIn, "'in'");
    scopes_.push_back({false, {binder.text}});
    ExprPtr body = parseExpr();
    scopes_.pop_back();
    return mkLet(binder.text, std::move(bound), std::move(body), loc);
  }

  Pattern parsePattern() {
    if (at(lex::Tok::Underscore)) {
      Pattern p;
      p.wildcard = true;
      p.loc = eat().loc;
      return p;
    }
    auto ctor = expect(lex::Tok::UpperIdent, "pattern constructor or '_'");
    if (!table_.isDeclared(ctor.text))
      throw UndeclaredConstructor("undeclared constructor '" + ctor.text + "' in pattern",
                                  ctor.loc);
    Pattern p;
    p.con = ctor.text;
    p.loc = ctor.loc;
    std::set<Name> seen;
    while (at(lex::Tok::LowerIdent) || at(lex::Tok::Underscore) || at(lex::Tok::UpperIdent) ||
           at(lex::Tok::LParen)) {
      if (at(lex::Tok::UpperIdent) || at(lex::Tok::LParen))
        throw SyntaxError("patterns may not be nested", cur().loc);
      if (at(lex::Tok::Underscore))
        throw SyntaxError("'_' is not allowed as a pattern variable", cur().loc);
      auto v = eat();
      if (!seen.insert(v.text).second)
        throw SyntaxError("variable '" + v.text + "' appears twice in pattern", v.loc);
      p.vars.push_back(v.text);
    }
    return p;
  }

  ExprPtr parseCase() {
    SourceLoc loc = eat().loc;
    ExprPtr scrut = parseExpr();
    expect(lex::Tok::KwOf, "'of'");
    std::vector<Branch> branches;
    bool sawWildcard = false;
    while (true) {
      Pattern p = parsePattern();
      if (sawWildcard) throw SyntaxError("no pattern may follow a wildcard branch", p.loc);
      if (p.wildcard) sawWildcard = true;
      expect(lex::Tok::Colon, "':' after pattern");
      scopes_.push_back({false, {p.vars.begin(), p.vars.end()}});
      ExprPtr body = parseExpr();
      scopes_.pop_back();
      branches.push_back({std::move(p), std::move(body)});
      if (at(lex::Tok::Bar)) {
        eat();
        continue;
      }
      if (at(lex::Tok::Semi)) eat();  // optional explicit terminator
      break;
    }
    return mkCase(std::move(scrut), std::move(branches), loc);
  }

  ExprPtr parseApplication() {
    ExprPtr head = parseAtomOrNull();
    if (!head) throw SyntaxError("expected an expression, found '" + cur().text + "'", cur().loc);
    if (const auto* c = as<Con>(head); c && c->args.empty()) {
      // constructor application by juxtaposition
      std::vector<ExprPtr> args;
      while (ExprPtr a = parseAtomOrNull()) args.push_back(a);
      return mkCon(c->name, std::move(args), head->loc);
    }
    while (ExprPtr a = parseAtomOrNull()) head = mkApp(head, a, head->loc);
    return head;
  }

  ExprPtr parseAtomOrNull() {
    switch (cur().kind) {
      case lex::Tok::LowerIdent: {
        // a definition start (`f = ...`) inside a surrounding where is not an atom
        if (peek(1).kind == lex::Tok::Equals) return nullptr;
        auto id = eat();
        if (resolvesToFun(id.text)) return mkFun(id.text, id.loc);
        return mkVar(id.text, id.loc);  // bound or free variable
      }
      case lex::Tok::UpperIdent: {
        auto id = eat();
        if (!table_.isDeclared(id.text))
          throw UndeclaredConstructor("undeclared constructor '" + id.text + "'", id.loc);
        return mkCon(id.text, {}, id.loc);
      }
      case lex::Tok::LParen: {
        eat();
        ExprPtr e = parseExprTop();
        expect(lex::Tok::RParen, "')'");
        return e;
      }
      default:
        return nullptr;
    }
  }
};

}  // namespace detail

inline SourceFile parseProgram(const std::string& text) {
  detail::Parser p(text, ConstructorTable::withBuiltins());
  return p.parseFile();
}

inline ExprPtr parseExpr(const std::string& text, const ConstructorTable& table) {
  detail::Parser p(text, table);
  return p.parseSingleExpr();
}

// Expression parse with the given function names in scope, so references to
// program definitions resolve to calls rather than free variables.
inline ExprPtr parseExpr(const std::string& text, const ConstructorTable& table,
                         const std::set<Name>& funScope) {
  detail::Parser p(text, table, funScope);
  return p.parseSingleExpr();
}

}  // namespace rsl
