#pragma once

#include <map>
#include <string>
#include <vector>

#include "rsl/ast.hpp"
#include "rsl/ltl.hpp"
#include "rsl/parser.hpp"
#include "rsl/restricted.hpp"

// The built-in corpus: three mutual-exclusion systems, their hand-written
// restricted forms, the two temporal properties, and the expected verdicts.
// The same texts are shipped under corpus/ for command-line use.

namespace rsl::corpus {

inline const char* kExample1 = R"RSL(-- Two processes sharing a critical resource. A process may request access
-- whenever nobody is using the resource, take it when waiting, and release
-- it when using.
data Event = Request1/0 | Request2/0 | Take1/0 | Take2/0 | Release1/0 | Release2/0;
data State = ObsState/2;
data ProcState = T/0 | W/0 | U/0;

f es T T
where
  f = \es s1 s2. Cons (ObsState s1 s2) (case es of
    Cons e es: case e of
        Request1: (case s1 of U: f es s1 s2 | _: (case s2 of U: f es s1 s2 | _: f es W s2))
      | Request2: (case s2 of U: f es s1 s2 | _: (case s1 of U: f es s1 s2 | _: f es s1 W))
      | Take1: (case s1 of W: f es U s2 | _: f es s1 s2)
      | Take2: (case s2 of W: f es s1 U | _: f es s1 s2)
      | Release1: (case s1 of U: f es T s2 | _: f es s1 s2)
      | Release2: (case s2 of U: f es s1 T | _: f es s1 s2));
)RSL";

inline const char* kExample1Distilled = R"RSL(-- Restricted form of example 1: one function per reachable state pair.
data Event = Request1/0 | Request2/0 | Take1/0 | Take2/0 | Release1/0 | Release2/0;
data State = ObsState/2;
data ProcState = T/0 | W/0 | U/0;

f1 es
where
  f1 = \es. Cons (ObsState T T) (case es of Cons e es: case e of Request1: f2 es | Request2: f3 es | _: f1 es);
  f2 = \es. Cons (ObsState W T) (case es of Cons e es: case e of Take1: f4 es | Request2: f5 es | _: f2 es);
  f3 = \es. Cons (ObsState T W) (case es of Cons e es: case e of Request1: f5 es | Take2: f6 es | _: f3 es);
  f4 = \es. Cons (ObsState U T) (case es of Cons e es: case e of Release1: f1 es | _: f4 es);
  f5 = \es. Cons (ObsState W W) (case es of Cons e es: case e of Take1: f7 es | Take2: f8 es | _: f5 es);
  f6 = \es. Cons (ObsState T U) (case es of Cons e es: case e of Release2: f1 es | _: f6 es);
  f7 = \es. Cons (ObsState U W) (case es of Cons e es: case e of Release1: f3 es | Take2: f9 es | _: f7 es);
  f8 = \es. Cons (ObsState W U) (case es of Cons e es: case e of Release2: f2 es | Take1: f9 es | _: f8 es);
  f9 = \es. Cons (ObsState U U) (case es of Cons e es: case e of Release1: f6 es | Release2: f4 es | _: f9 es);
)RSL";

inline const char* kExample2 = R"RSL(-- A process may request only while thinking (and the other process is not
-- using), and may take the resource only when the other process is thinking.
data Event = Request1/0 | Request2/0 | Take1/0 | Take2/0 | Release1/0 | Release2/0;
data State = ObsState/2;
data ProcState = T/0 | W/0 | U/0;

f es T T
where
  f = \es s1 s2. Cons (ObsState s1 s2) (case es of
    Cons e es: case e of
        Request1: (case s1 of T: (case s2 of U: f es s1 s2 | _: f es W s2) | _: f es s1 s2)
      | Request2: (case s2 of T: (case s1 of U: f es s1 s2 | _: f es s1 W) | _: f es s1 s2)
      | Take1: (case s1 of W: (case s2 of T: f es U s2 | _: f es s1 s2) | _: f es s1 s2)
      | Take2: (case s2 of W: (case s1 of T: f es s1 U | _: f es s1 s2) | _: f es s1 s2)
      | Release1: (case s1 of U: f es T s2 | _: f es s1 s2)
      | Release2: (case s2 of U: f es s1 T | _: f es s1 s2));
)RSL";

inline const char* kExample2Distilled = R"RSL(-- Restricted form of example 2. Both processes waiting is a deadlock: f5
-- loops on every event.
data Event = Request1/0 | Request2/0 | Take1/0 | Take2/0 | Release1/0 | Release2/0;
data State = ObsState/2;
data ProcState = T/0 | W/0 | U/0;

f1 es
where
  f1 = \es. Cons (ObsState T T) (case es of Cons e es: case e of Request1: f2 es | Request2: f3 es | _: f1 es);
  f2 = \es. Cons (ObsState W T) (case es of Cons e es: case e of Take1: f4 es | Request2: f5 es | _: f2 es);
  f3 = \es. Cons (ObsState T W) (case es of Cons e es: case e of Request1: f5 es | Take2: f6 es | _: f3 es);
  f4 = \es. Cons (ObsState U T) (case es of Cons e es: case e of Release1: f1 es | _: f4 es);
  f5 = \es. Cons (ObsState W W) (case es of Cons e es: case e of _: f5 es);
  f6 = \es. Cons (ObsState T U) (case es of Cons e es: case e of Release2: f1 es | _: f6 es);
)RSL";

inline const char* kExample3 = R"RSL(-- Ticket-based mutual exclusion for two processes. Requesting takes a ticket
-- one above the other process's ticket; the lower ticket wins a contended
-- take; releasing resets the ticket. Ticket values are unbounded.
data Event = Request1/0 | Request2/0 | Take1/0 | Take2/0 | Release1/0 | Release2/0;
data State = ObsState/2;
data ProcState = T/0 | W/0 | U/0;
data Nat = Zero/0 | Succ/1;

f es T T Zero Zero
where
  f = \es s1 s2 t1 t2. Cons (ObsState s1 s2) (case es of
    Cons e es: case e of
        Request1: (case s1 of T: f es W s2 (Succ t2) t2 | _: f es s1 s2 t1 t2)
      | Request2: (case s2 of T: f es s1 W t1 (Succ t1) | _: f es s1 s2 t1 t2)
      | Take1: (case s1 of W: (case s2 of T: f es U s2 t1 t2 | _: (case lt t1 t2 of True: f es U s2 t1 t2 | False: f es s1 s2 t1 t2)) | _: f es s1 s2 t1 t2)
      | Take2: (case s2 of W: (case s1 of T: f es s1 U t1 t2 | _: (case lt t2 t1 of True: f es s1 U t1 t2 | False: f es s1 s2 t1 t2)) | _: f es s1 s2 t1 t2)
      | Release1: (case s1 of U: f es T s2 Zero t2 | _: f es s1 s2 t1 t2)
      | Release2: (case s2 of U: f es s1 T t1 Zero | _: f es s1 s2 t1 t2));
  lt = \x y. case y of Zero: False | Succ y1: (case x of Zero: True | Succ x1: lt x1 y1);
)RSL";

inline const char* kExample3Distilled = R"RSL(-- Restricted form of example 3: the tickets are gone, only the priority
-- between the two waiting processes remains (f6 versus f7).
data Event = Request1/0 | Request2/0 | Take1/0 | Take2/0 | Release1/0 | Release2/0;
data State = ObsState/2;
data ProcState = T/0 | W/0 | U/0;

f1 es
where
  f1 = \es. Cons (ObsState T T) (case es of Cons e es: case e of Request1: f2 es | Request2: f3 es | _: f1 es);
  f2 = \es. Cons (ObsState W T) (case es of Cons e es: case e of Take1: f4 es | Request2: f6 es | _: f2 es);
  f3 = \es. Cons (ObsState T W) (case es of Cons e es: case e of Take2: f5 es | Request1: f7 es | _: f3 es);
  f4 = \es. Cons (ObsState U T) (case es of Cons e es: case e of Release1: f1 es | Request2: f8 es | _: f4 es);
  f5 = \es. Cons (ObsState T U) (case es of Cons e es: case e of Release2: f1 es | Request1: f9 es | _: f5 es);
  f6 = \es. Cons (ObsState W W) (case es of Cons e es: case e of Take1: f8 es | _: f6 es);
  f7 = \es. Cons (ObsState W W) (case es of Cons e es: case e of Take2: f9 es | _: f7 es);
  f8 = \es. Cons (ObsState U W) (case es of Cons e es: case e of Release1: f3 es | _: f8 es);
  f9 = \es. Cons (ObsState W U) (case es of Cons e es: case e of Release2: f2 es | _: f9 es);
)RSL";

inline const char* kMutex = R"LTL(-- Safety: both processes are never using the resource at the same time.
G { case s of ObsState s1 s2: case s1 of U: (case s2 of U: False | _: True) | _: True }
)LTL";

inline const char* kNonStarve1 = R"LTL(-- Liveness: whenever process 1 waits it eventually gets to use the resource.
G ({ case s of ObsState s1 s2: case s1 of W: True | _: False }
   => F { case s of ObsState s1 s2: case s1 of U: True | _: False })
)LTL";

inline const char* kNonStarve2 = R"LTL(-- Liveness: whenever process 2 waits it eventually gets to use the resource.
G ({ case s of ObsState s1 s2: case s2 of W: True | _: False }
   => F { case s of ObsState s1 s2: case s2 of U: True | _: False })
)LTL";

inline const char* kGolden = R"TXT(example1 mutex False
example2 mutex True
example2 nonstarve1 False
example3 mutex True
example3 nonstarve1 True
example3 nonstarve2 True
)TXT";

struct CorpusProperty {
  std::string name;
  std::string text;
  FormulaPtr formula;
  TruthVal expected;
};

struct CorpusEntry {
  std::string name;
  std::string sourceText;
  std::string distilledText;
  SourceFile source;
  SourceFile distilledReference;
  std::vector<CorpusProperty> properties;
};

// filename -> content, as shipped under corpus/
inline const std::map<std::string, std::string>& files() {
  static const std::map<std::string, std::string> files = {
      {"example1.rsl", kExample1},
      {"example1_distilled.rsl", kExample1Distilled},
      {"example2.rsl", kExample2},
      {"example2_distilled.rsl", kExample2Distilled},
      {"example3.rsl", kExample3},
      {"example3_distilled.rsl", kExample3Distilled},
      {"mutex.ltl", kMutex},
      {"nonstarve1.ltl", kNonStarve1},
      {"nonstarve2.ltl", kNonStarve2},
      {"golden.txt", kGolden},
  };
  return files;
}

inline std::vector<CorpusEntry> loadCorpus() {
  auto property = [](const std::string& name, const char* text, const SourceFile& sf,
                     TruthVal expected) {
    return CorpusProperty{name, text, parseFormula(text, sf.table), expected};
  };
  std::vector<CorpusEntry> out;
  {
    CorpusEntry e;
    e.name = "example1";
    e.sourceText = kExample1;
    e.distilledText = kExample1Distilled;
    e.source = parseProgram(e.sourceText);
    e.distilledReference = parseProgram(e.distilledText);
    e.properties.push_back(property("mutex", kMutex, e.source, TruthVal::False));
    out.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.name = "example2";
    e.sourceText = kExample2;
    e.distilledText = kExample2Distilled;
    e.source = parseProgram(e.sourceText);
    e.distilledReference = parseProgram(e.distilledText);
    e.properties.push_back(property("mutex", kMutex, e.source, TruthVal::True));
    e.properties.push_back(property("nonstarve1", kNonStarve1, e.source, TruthVal::False));
    out.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.name = "example3";
    e.sourceText = kExample3;
    e.distilledText = kExample3Distilled;
    e.source = parseProgram(e.sourceText);
    e.distilledReference = parseProgram(e.distilledText);
    e.properties.push_back(property("mutex", kMutex, e.source, TruthVal::True));
    e.properties.push_back(property("nonstarve1", kNonStarve1, e.source, TruthVal::True));
    e.properties.push_back(property("nonstarve2", kNonStarve2, e.source, TruthVal::True));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace rsl::corpus
