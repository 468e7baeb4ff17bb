#pragma once

#include <sstream>
#include <string>

#include "rsl/ast.hpp"

namespace rsl {

namespace detail {

enum class PrintCtx { Top, Branch, Atom };

inline void printExpr(std::ostream& os, const ExprPtr& e, PrintCtx ctx);

inline bool isAtomic(const ExprPtr& e) {
  if (as<Var>(e) || as<Fun>(e)) return true;
  if (const auto* c = as<Con>(e)) return c->args.empty();
  return false;
}

inline void printAtom(std::ostream& os, const ExprPtr& e) {
  if (isAtomic(e)) {
    printExpr(os, e, PrintCtx::Atom);
  } else {
    os << '(';
    printExpr(os, e, PrintCtx::Top);
    os << ')';
  }
}

inline void printPattern(std::ostream& os, const Pattern& p) {
  if (p.wildcard) {
    os << '_';
    return;
  }
  os << p.con;
  for (const auto& v : p.vars) os << ' ' << v;
}

inline void printExpr(std::ostream& os, const ExprPtr& e, PrintCtx ctx) {
  if (const auto* v = as<Var>(e)) {
    os << v->name;
  } else if (const auto* f = as<Fun>(e)) {
    os << f->name;
  } else if (const auto* c = as<Con>(e)) {
    os << c->name;
    for (const auto& a : c->args) {
      os << ' ';
      printAtom(os, a);
    }
  } else if (as<Lam>(e)) {
    auto [params, body] = lamParams(e);
    os << '\\';
    for (size_t i = 0; i < params.size(); ++i) os << (i ? " " : "") << params[i];
    os << '.';
    printExpr(os, body, ctx == PrintCtx::Branch ? PrintCtx::Branch : PrintCtx::Top);
  } else if (const auto* a = as<App>(e)) {
    auto [head, args] = spine(e);
    (void)a;
    printAtom(os, head);
    for (const auto& arg : args) {
      os << ' ';
      printAtom(os, arg);
    }
  } else if (const auto* cs = as<Case>(e)) {
    bool parens = ctx == PrintCtx::Branch;
    if (parens) os << '(';
    os << "case ";
    printExpr(os, cs->scrutinee, PrintCtx::Branch);
    os << " of ";
    for (size_t i = 0; i < cs->branches.size(); ++i) {
      if (i) os << " | ";
      printPattern(os, cs->branches[i].pat);
      os << ": ";
      printExpr(os, cs->branches[i].body, PrintCtx::Branch);
    }
    if (parens) os << ')';
  } else if (const auto* lt = as<Let>(e)) {
    os << "let " << lt->binder << " = ";
    printExpr(os, lt->bound, PrintCtx::Branch);
    os << " in ";
    printExpr(os, lt->body, ctx == PrintCtx::Branch ? PrintCtx::Branch : PrintCtx::Top);
  } else if (const auto* w = as<Where>(e)) {
    bool parens = ctx != PrintCtx::Top;
    if (parens) os << '(';
    printExpr(os, w->body, PrintCtx::Branch);
    os << "\nwhere\n";
    for (const auto& d : w->defs) {
      os << "  " << d.name << " = ";
      printExpr(os, d.body, PrintCtx::Branch);
      os << ";\n";
    }
    if (parens) os << ')';
  }
}

}  // namespace detail

inline std::string prettyExpr(const ExprPtr& e) {
  std::ostringstream os;
  detail::printExpr(os, e, detail::PrintCtx::Top);
  return os.str();
}

inline std::string prettyPrint(const SourceFile& sf) {
  std::ostringstream os;
  for (const auto& d : sf.datatypes) {
    os << "data " << d.name << " = ";
    for (size_t i = 0; i < d.ctors.size(); ++i) {
      if (i) os << " | ";
      os << d.ctors[i].first << '/' << d.ctors[i].second;
    }
    os << ";\n";
  }
  if (!sf.datatypes.empty()) os << '\n';
  detail::printExpr(os, sf.main, detail::PrintCtx::Top);
  os << '\n';
  return os.str();
}

}  // namespace rsl
