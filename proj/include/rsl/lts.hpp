#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rsl/ast.hpp"
#include "rsl/eval.hpp"
#include "rsl/ltl.hpp"
#include "rsl/restricted.hpp"

// Finite labelled transition systems extracted from canonical-shape restricted
// programs, Graphviz export, and an independent explicit-state checker for
// fair LTL: the negated formula is expanded into a tableau automaton, the
// product with the LTS is searched for a reachable strongly connected
// component that fulfils every eventuality and carries every fair event.

namespace rsl {

struct LtsError : Error {
  enum class Kind { NonCanonicalShape, AtomUndefinedOnState };
  Kind kind;
  LtsError(Kind k, const std::string& msg, SourceLoc loc = {}) : Error(msg, loc), kind(k) {}
};

inline const Name kWildcard = "_";

struct Lts {
  std::vector<Name> states;  // function names in definition order
  Name initial;
  std::vector<Name> events;  // declared Event constructors, declaration order
  std::map<Name, ExprPtr> observe;
  struct Trans {
    Name from;
    Name label;  // event constructor or "_"
    Name to;
  };
  std::vector<Trans> transitions;             // as written, wildcards unexpanded
  std::map<Name, std::map<Name, Name>> delta;  // total after wildcard expansion

  const Name& successor(const Name& state, const Name& event) const {
    return delta.at(state).at(event);
  }
};

// ---------------------------------------------------------------------------
// Extraction

inline Lts extractLts(const RestrictedProgram& p) {
  auto fail = [](const Name& fun, const std::string& why) -> LtsError {
    return LtsError(LtsError::Kind::NonCanonicalShape,
                    "function '" + fun + "' is not in canonical shape: " + why);
  };
  Lts lts;
  lts.events = p.source.events();
  if (lts.events.empty())
    throw LtsError(LtsError::Kind::NonCanonicalShape, "program declares no Event datatype");
  {
    auto [head, args] = spine(p.program.top);
    const auto* f = as<Fun>(head);
    if (!f) throw fail("<main>", "top expression is not a function call");
    lts.initial = f->name;
  }
  Env env = Env::fromProgram(p.program);
  for (const auto& d : p.program.defs) {
    const Name& fun = d.name;
    lts.states.push_back(fun);
    const RestrictedDef& def = p.defs.at(fun);
    const auto* body = as<Con>(def.body);
    if (!body || body->name != "Cons" || body->args.size() != 2)
      throw fail(fun, "body does not emit a stream constructor");
    lts.observe[fun] = normalizeOpen(body->args[0], env);
    if (!as<Con>(lts.observe[fun])) throw fail(fun, "observable state is not a constructor term");

    const auto* streamCase = as<Case>(body->args[1]);
    if (!streamCase || streamCase->branches.size() != 1)
      throw fail(fun, "stream tail is not a single-branch case on the event stream");
    const Pattern& sp = streamCase->branches[0].pat;
    if (sp.wildcard || sp.con != "Cons" || sp.vars.size() != 2)
      throw fail(fun, "stream case does not match 'Cons e es'");
    const Name& eventVar = sp.vars[0];

    auto parseTarget = [&](const ExprPtr& e) -> Name {
      auto [head, args] = spine(e);
      const auto* f = as<Fun>(head);
      if (!f) throw fail(fun, "branch continuation is not a function call");
      for (const auto& a : args)
        if (!as<Var>(a)) throw fail(fun, "branch continuation has a non-variable argument");
      return f->name;
    };

    ExprPtr inner = streamCase->branches[0].body;
    if (const auto* evCase = as<Case>(inner)) {
      const auto* sv = as<Var>(evCase->scrutinee);
      if (!sv || sv->name != eventVar)
        throw fail(fun, "inner case does not scrutinize the event variable");
      for (const auto& br : evCase->branches) {
        Name label = br.pat.wildcard ? kWildcard : br.pat.con;
        if (!br.pat.wildcard &&
            std::find(lts.events.begin(), lts.events.end(), br.pat.con) == lts.events.end())
          throw fail(fun, "pattern '" + br.pat.con + "' is not a declared event");
        lts.transitions.push_back({fun, label, parseTarget(br.body)});
      }
    } else {
      // the event case may be absent when every event loops the same way
      lts.transitions.push_back({fun, kWildcard, parseTarget(inner)});
    }
  }
  // expand wildcards; every state must end up with one transition per event
  for (const auto& s : lts.states) lts.delta[s] = {};
  for (const auto& t : lts.transitions) {
    if (t.label == kWildcard) continue;
    lts.delta[t.from].emplace(t.label, t.to);  // first match wins
  }
  for (const auto& t : lts.transitions) {
    if (t.label != kWildcard) continue;
    for (const auto& ev : lts.events) lts.delta[t.from].emplace(ev, t.to);
  }
  for (const auto& s : lts.states) {
    for (const auto& ev : lts.events)
      if (!lts.delta[s].count(ev)) throw fail(s, "no transition for event '" + ev + "'");
    for (const auto& [ev, to] : lts.delta[s])
      if (!lts.observe.count(to)) throw fail(s, "transition to unknown function '" + to + "'");
  }
  if (!lts.observe.count(lts.initial))
    throw LtsError(LtsError::Kind::NonCanonicalShape,
                   "initial function '" + lts.initial + "' has no definition");
  return lts;
}

// Observable states along a replayed event sequence, starting at the initial
// state (first entry is the initial observation).
inline std::vector<ExprPtr> replayLts(const Lts& l, const std::vector<Name>& events) {
  std::vector<ExprPtr> out;
  Name cur = l.initial;
  out.push_back(l.observe.at(cur));
  for (const auto& ev : events) {
    cur = l.successor(cur, ev);
    out.push_back(l.observe.at(cur));
  }
  return out;
}

// ---------------------------------------------------------------------------
// DOT export

inline std::string exportDot(const Lts& l, bool includeSelfLoops) {
  std::ostringstream os;
  os << "digraph lts {\n";
  os << "  node [shape=box];\n";
  for (const auto& s : l.states) {
    os << "  \"" << s << "\" [label=\"" << s << "\\n" << prettyExpr(l.observe.at(s))
       << "\"];\n";
  }
  for (const auto& s : l.states) {
    for (const auto& ev : l.events) {
      const Name& to = l.delta.at(s).at(ev);
      if (!includeSelfLoops && to == s) continue;
      os << "  \"" << s << "\" -> \"" << to << "\" [label=\"" << ev << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Isomorphism (labels, observations, and the initial state respected)

inline bool isomorphic(const Lts& a, const Lts& b) {
  if (a.states.size() != b.states.size()) return false;
  std::set<Name> evA(a.events.begin(), a.events.end());
  std::set<Name> evB(b.events.begin(), b.events.end());
  if (evA != evB) return false;
  std::map<Name, Name> toB;
  std::map<Name, Name> toA;
  std::deque<std::pair<Name, Name>> queue;
  auto propose = [&](const Name& x, const Name& y) {
    auto itX = toB.find(x);
    auto itY = toA.find(y);
    if (itX != toB.end() || itY != toA.end())
      return itX != toB.end() && itX->second == y && itY != toA.end() && itY->second == x;
    if (!alphaEq(a.observe.at(x), b.observe.at(y))) return false;
    toB[x] = y;
    toA[y] = x;
    queue.emplace_back(x, y);
    return true;
  };
  if (!propose(a.initial, b.initial)) return false;
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (const auto& ev : a.events)
      if (!propose(a.delta.at(x).at(ev), b.delta.at(y).at(ev))) return false;
  }
  // every state must be covered (all corpus systems are fully reachable)
  return toB.size() == a.states.size();
}

// ---------------------------------------------------------------------------
// Fair-LTL oracle

struct OracleVerdict {
  bool holds = false;
  struct Witness {
    std::vector<Name> prefix;
    std::vector<Name> cycle;
  };
  std::optional<Witness> witness;
};

namespace detail {

struct Nnf;
using NnfPtr = std::shared_ptr<const Nnf>;

struct Nnf {
  enum class Kind { Lit, And, Or, Next, Always, Eventually };
  Kind kind;
  ExprPtr atom;         // Lit
  bool positive = true;  // Lit
  NnfPtr a, b;
  int id = 0;
  int evIndex = -1;  // Eventually nodes: index into the acceptance sets
};

class NnfBuilder {
 public:
  std::vector<NnfPtr> eventualities;

  NnfPtr build(const FormulaPtr& f, bool positive) {
    if (const auto* at = asF<FAtom>(f)) return lit(at->prop, positive);
    if (const auto* n = asF<FNot>(f)) return build(n->arg, !positive);
    if (const auto* c = asF<FAnd>(f))
      return node(positive ? Nnf::Kind::And : Nnf::Kind::Or, build(c->lhs, positive),
                  build(c->rhs, positive));
    if (const auto* d = asF<FOr>(f))
      return node(positive ? Nnf::Kind::Or : Nnf::Kind::And, build(d->lhs, positive),
                  build(d->rhs, positive));
    if (const auto* i = asF<FImplies>(f))
      return node(positive ? Nnf::Kind::Or : Nnf::Kind::And, build(i->lhs, !positive),
                  build(i->rhs, positive));
    if (const auto* g = asF<FAlways>(f))
      return temporal(positive ? Nnf::Kind::Always : Nnf::Kind::Eventually,
                      build(g->arg, positive));
    if (const auto* e = asF<FEventually>(f))
      return temporal(positive ? Nnf::Kind::Eventually : Nnf::Kind::Always,
                      build(e->arg, positive));
    const auto* x = asF<FNext>(f);
    return temporal(Nnf::Kind::Next, build(x->arg, positive));
  }

 private:
  int nextId_ = 0;

  NnfPtr lit(ExprPtr atom, bool positive) {
    auto n = std::make_shared<Nnf>();
    n->kind = Nnf::Kind::Lit;
    n->atom = std::move(atom);
    n->positive = positive;
    n->id = nextId_++;
    return n;
  }
  NnfPtr node(Nnf::Kind k, NnfPtr a, NnfPtr b) {
    auto n = std::make_shared<Nnf>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    n->id = nextId_++;
    return n;
  }
  NnfPtr temporal(Nnf::Kind k, NnfPtr a) {
    auto n = std::make_shared<Nnf>();
    n->kind = k;
    n->a = std::move(a);
    n->id = nextId_++;
    if (k == Nnf::Kind::Eventually) {
      n->evIndex = static_cast<int>(eventualities.size());
      auto copy = std::make_shared<Nnf>(*n);
      eventualities.push_back(copy);
    }
    return n;
  }
};

struct Expansion {
  std::vector<int> next;    // ids of obligations for the successor position
  unsigned long flags = 0;  // bit i set when eventuality i is not postponed here
};

class OracleEngine {
 public:
  OracleEngine(const Lts& lts, const FormulaPtr& phi, const FairnessSet& fairness, long budget)
      : lts_(lts), fairness_(fairness), budget_(budget) {
    NnfBuilder builder;
    // search for a fair counterexample to phi
    root_ = builder.build(phi, false);
    eventualities_ = builder.eventualities;
    collect(root_);
  }

  OracleVerdict run() {
    buildProduct();
    tarjan();
    unsigned long allFlags =
        eventualities_.empty() ? 0ul : (1ul << eventualities_.size()) - 1ul;
    int violating = -1;
    for (size_t i = 0; i < sccs_.size() && violating < 0; ++i) {
      const auto& members = sccs_[i];
      unsigned long flags = 0;
      std::set<Name> labels;
      bool hasEdge = false;
      for (int e : sccEdges_[i]) {
        hasEdge = true;
        flags |= edges_[e].flags;
        labels.insert(edges_[e].ev);
      }
      (void)members;
      if (!hasEdge) continue;
      if ((flags & allFlags) != allFlags) continue;
      bool fair = true;
      for (const auto& ev : fairness_)
        if (!labels.count(ev)) {
          fair = false;
          break;
        }
      if (fair) violating = static_cast<int>(i);
    }
    OracleVerdict v;
    v.holds = violating < 0;
    if (violating >= 0) v.witness = buildWitness(violating, allFlags);
    return v;
  }

 private:
  struct Node {
    int state;              // index into states_, -1 for the virtual root
    std::vector<int> obl;   // sorted obligation ids
  };
  struct Edge {
    int from, to;
    Name ev;
    unsigned long flags;
  };

  const Lts& lts_;
  FairnessSet fairness_;
  long budget_;
  NnfPtr root_;
  std::vector<NnfPtr> eventualities_;
  std::map<int, NnfPtr> byId_;
  std::vector<Node> nodes_;
  std::map<std::pair<int, std::vector<int>>, int> nodeIndex_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;  // node -> edge indices
  std::map<std::pair<int, const Expr*>, bool> atomCache_;
  // tarjan results
  std::vector<int> sccOf_;
  std::vector<std::vector<int>> sccs_;
  std::vector<std::vector<int>> sccEdges_;

  void collect(const NnfPtr& n) {
    byId_[n->id] = n;
    if (n->a) collect(n->a);
    if (n->b) collect(n->b);
  }

  int stateIndex(const Name& s) const {
    for (size_t i = 0; i < lts_.states.size(); ++i)
      if (lts_.states[i] == s) return static_cast<int>(i);
    return -1;
  }

  bool atomHolds(int state, const ExprPtr& atom) {
    auto key = std::make_pair(state, atom.get());
    auto it = atomCache_.find(key);
    if (it != atomCache_.end()) return it->second;
    const ExprPtr& obs = lts_.observe.at(lts_.states[state]);
    AtomOutcome out = evalAtom(atom, obs, Env{}, budget_);
    if (out.kind != AtomOutcome::Kind::Value || out.value == TruthVal::Undefined)
      throw LtsError(LtsError::Kind::AtomUndefinedOnState,
                     "atomic proposition is undefined on state '" + lts_.states[state] +
                         "': " + out.detail);
    bool holds = out.value == TruthVal::True;
    atomCache_.emplace(key, holds);
    return holds;
  }

  // tableau expansion of an obligation set at a given LTS state
  std::vector<Expansion> expand(const std::vector<int>& obligations, int state) {
    std::vector<Expansion> result;
    struct Work {
      std::vector<int> todo;
      std::set<int> done;
      std::set<int> next;
      unsigned long fulfilled = 0;
      unsigned long present = 0;
    };
    std::deque<Work> stack;
    Work init;
    init.todo = obligations;
    stack.push_back(std::move(init));
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();
      bool dead = false;
      while (!w.todo.empty() && !dead) {
        int id = w.todo.back();
        w.todo.pop_back();
        if (!w.done.insert(id).second) continue;
        const NnfPtr& n = byId_.at(id);
        switch (n->kind) {
          case Nnf::Kind::Lit:
            if (atomHolds(state, n->atom) != n->positive) dead = true;
            break;
          case Nnf::Kind::And:
            w.todo.push_back(n->a->id);
            w.todo.push_back(n->b->id);
            break;
          case Nnf::Kind::Or: {
            Work other = w;
            other.todo.push_back(n->b->id);
            stack.push_back(std::move(other));
            w.todo.push_back(n->a->id);
            break;
          }
          case Nnf::Kind::Next:
            w.next.insert(n->a->id);
            break;
          case Nnf::Kind::Always:
            w.todo.push_back(n->a->id);
            w.next.insert(n->id);
            break;
          case Nnf::Kind::Eventually: {
            w.present |= 1ul << n->evIndex;
            Work postpone = w;
            postpone.next.insert(n->id);
            stack.push_back(std::move(postpone));
            w.fulfilled |= 1ul << n->evIndex;
            w.todo.push_back(n->a->id);
            break;
          }
        }
      }
      if (dead) continue;
      Expansion e;
      e.next.assign(w.next.begin(), w.next.end());
      unsigned long all = eventualities_.empty() ? 0ul : (1ul << eventualities_.size()) - 1ul;
      e.flags = (~w.present & all) | (w.fulfilled & w.present);
      bool dup = false;
      for (const auto& seen : result)
        if (seen.next == e.next && seen.flags == e.flags) {
          dup = true;
          break;
        }
      if (!dup) result.push_back(e);
    }
    // deterministic order
    std::sort(result.begin(), result.end(), [](const Expansion& x, const Expansion& y) {
      if (x.next != y.next) return x.next < y.next;
      return x.flags < y.flags;
    });
    return result;
  }

  int internNode(int state, std::vector<int> obl) {
    auto key = std::make_pair(state, obl);
    auto it = nodeIndex_.find(key);
    if (it != nodeIndex_.end()) return it->second;
    int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({state, std::move(obl)});
    out_.emplace_back();
    nodeIndex_.emplace(key, idx);
    return idx;
  }

  void buildProduct() {
    int rootNode = internNode(-1, {root_->id});
    std::deque<int> queue{rootNode};
    std::set<int> discovered{rootNode};
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      const Node node = nodes_[cur];
      int fromState = node.state < 0 ? stateIndex(lts_.initial) : node.state;
      // expansion happens at the state the obligations refer to
      int atState = node.state < 0 ? stateIndex(lts_.initial) : node.state;
      std::vector<Expansion> expansions = expand(node.obl, atState);
      for (const auto& ex : expansions) {
        const Name& stateName = lts_.states[fromState];
        for (const auto& ev : lts_.events) {
          const Name& toName = lts_.delta.at(stateName).at(ev);
          int to = internNode(stateIndex(toName), ex.next);
          edges_.push_back({cur, to, ev, ex.flags});
          out_[cur].push_back(static_cast<int>(edges_.size()) - 1);
          if (discovered.insert(to).second) queue.push_back(to);
        }
      }
      if (nodes_.size() > 200000)
        throw LtsError(LtsError::Kind::NonCanonicalShape,
                       "oracle product exceeded its size bound");
    }
  }

  void tarjan() {
    int n = static_cast<int>(nodes_.size());
    sccOf_.assign(n, -1);
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> onStack(n, false);
    std::vector<int> stack;
    int counter = 0;
    // iterative tarjan
    struct Frame {
      int node;
      size_t edgePos;
    };
    for (int start = 0; start < n; ++start) {
      if (index[start] != -1) continue;
      std::vector<Frame> frames{{start, 0}};
      index[start] = low[start] = counter++;
      stack.push_back(start);
      onStack[start] = true;
      while (!frames.empty()) {
        Frame& f = frames.back();
        if (f.edgePos < out_[f.node].size()) {
          int to = edges_[out_[f.node][f.edgePos++]].to;
          if (index[to] == -1) {
            index[to] = low[to] = counter++;
            stack.push_back(to);
            onStack[to] = true;
            frames.push_back({to, 0});
          } else if (onStack[to]) {
            low[f.node] = std::min(low[f.node], index[to]);
          }
        } else {
          if (low[f.node] == index[f.node]) {
            std::vector<int> scc;
            while (true) {
              int v = stack.back();
              stack.pop_back();
              onStack[v] = false;
              sccOf_[v] = static_cast<int>(sccs_.size());
              scc.push_back(v);
              if (v == f.node) break;
            }
            sccs_.push_back(std::move(scc));
          }
          int finished = f.node;
          frames.pop_back();
          if (!frames.empty())
            low[frames.back().node] = std::min(low[frames.back().node], low[finished]);
        }
      }
    }
    sccEdges_.assign(sccs_.size(), {});
    for (size_t e = 0; e < edges_.size(); ++e)
      if (sccOf_[edges_[e].from] == sccOf_[edges_[e].to])
        sccEdges_[sccOf_[edges_[e].from]].push_back(static_cast<int>(e));
  }

  OracleVerdict::Witness buildWitness(int scc, unsigned long allFlags) {
    OracleVerdict::Witness w;
    // shortest path from the virtual root into the SCC
    std::vector<int> prevEdge(nodes_.size(), -1);
    std::vector<bool> seen(nodes_.size(), false);
    std::deque<int> queue{0};
    seen[0] = true;
    int entry = sccOf_[0] == scc ? 0 : -1;
    while (!queue.empty() && entry < 0) {
      int cur = queue.front();
      queue.pop_front();
      for (int e : out_[cur]) {
        int to = edges_[e].to;
        if (seen[to]) continue;
        seen[to] = true;
        prevEdge[to] = e;
        if (sccOf_[to] == scc) {
          entry = to;
          break;
        }
        queue.push_back(to);
      }
    }
    std::vector<Name> prefix;
    for (int cur = entry; cur != 0 && cur >= 0;) {
      int e = prevEdge[cur];
      if (e < 0) break;
      prefix.push_back(edges_[e].ev);
      cur = edges_[e].from;
    }
    std::reverse(prefix.begin(), prefix.end());
    w.prefix = prefix;

    // cycle inside the SCC covering the acceptance flags and the fair events
    std::set<Name> needEvents = fairness_;
    unsigned long needFlags = allFlags;
    int cur = entry;
    auto pathTo = [&](int from, auto acceptEdge) -> std::optional<std::vector<int>> {
      std::vector<int> prev(nodes_.size(), -2);
      std::deque<int> q{from};
      prev[from] = -1;
      while (!q.empty()) {
        int node = q.front();
        q.pop_front();
        for (int e : out_[node]) {
          if (sccOf_[edges_[e].to] != scc) continue;
          if (acceptEdge(e)) {
            std::vector<int> path{e};
            for (int at = node; prev[at] != -1; at = edges_[prev[at]].from)
              path.push_back(prev[at]);
            std::reverse(path.begin(), path.end());
            return path;
          }
          if (prev[edges_[e].to] == -2) {
            prev[edges_[e].to] = e;
            q.push_back(edges_[e].to);
          }
        }
      }
      return std::nullopt;
    };
    std::vector<Name> cycle;
    int guard = 0;
    while ((needFlags || !needEvents.empty()) && guard++ < 64) {
      auto path = pathTo(cur, [&](int e) {
        if (edges_[e].flags & needFlags) return true;
        return needEvents.count(edges_[e].ev) > 0;
      });
      if (!path) break;
      for (int e : *path) {
        cycle.push_back(edges_[e].ev);
        needFlags &= ~edges_[e].flags;
        needEvents.erase(edges_[e].ev);
        cur = edges_[e].to;
      }
    }
    if (cur != entry) {
      auto back = pathTo(cur, [&](int e) { return edges_[e].to == entry; });
      if (back)
        for (int e : *back) {
          cycle.push_back(edges_[e].ev);
          cur = edges_[e].to;
        }
    }
    if (cycle.empty()) {
      // any edge and back
      auto any = pathTo(entry, [&](int e) { return edges_[e].to == entry; });
      if (any)
        for (int e : *any) cycle.push_back(edges_[e].ev);
    }
    w.cycle = cycle;
    return w;
  }
};

}  // namespace detail

// Does phi hold on every fair infinite path from the initial state? A fair
// path takes every event of the fairness set infinitely often.
inline OracleVerdict oracleCheck(const Lts& l, const FormulaPtr& phi, const FairnessSet& fairness,
                                 long budget = kDefaultBudget) {
  for (const auto& ev : fairness)
    if (std::find(l.events.begin(), l.events.end(), ev) == l.events.end())
      throw Error("fairness event '" + ev + "' is not a declared event");
  detail::OracleEngine engine(l, phi, fairness, budget);
  return engine.run();
}

}  // namespace rsl
