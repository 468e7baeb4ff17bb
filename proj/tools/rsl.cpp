#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsl/ast.hpp"
#include "rsl/corpus.hpp"
#include "rsl/eval.hpp"
#include "rsl/ltl.hpp"
#include "rsl/lts.hpp"
#include "rsl/parser.hpp"
#include "rsl/pretty.hpp"
#include "rsl/restricted.hpp"
#include "rsl/transform.hpp"
#include "rsl/verify.hpp"

// Exit codes: 0/1/2 encode True/False/Undefined (and holds/fails for the
// oracle); 10 usage or I/O, 11 syntax, 12 semantic checks, 13 restricted-form
// validation, 14 transformation, 15 evaluation, 16 LTS extraction or oracle.

namespace {

using nlohmann::json;

constexpr int kExitTrue = 0;
constexpr int kExitFalse = 1;
constexpr int kExitUndefined = 2;
constexpr int kExitUsage = 10;
constexpr int kExitSyntax = 11;
constexpr int kExitSemantic = 12;
constexpr int kExitValidate = 13;
constexpr int kExitTransform = 14;
constexpr int kExitEval = 15;
constexpr int kExitLts = 16;

struct CliError {
  int code;
  std::string message;
};

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitUsage, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kExitUsage, "cannot write '" + path + "'"};
  out << content;
}

std::string locSuffix(const rsl::SourceLoc& loc) {
  if (loc.line == 0) return "";
  return " (line " + std::to_string(loc.line) + ", column " + std::to_string(loc.col) + ")";
}

rsl::SourceFile parseFile(const std::string& path) {
  try {
    return rsl::parseProgram(readFile(path));
  } catch (const rsl::SyntaxError& e) {
    throw CliError{kExitSyntax, path + ": " + e.what() + locSuffix(e.loc)};
  } catch (const rsl::UndeclaredConstructor& e) {
    throw CliError{kExitSyntax, path + ": " + e.what() + locSuffix(e.loc)};
  }
}

rsl::FormulaPtr parseProperty(const std::string& path, const rsl::ConstructorTable& table) {
  try {
    return rsl::parseFormula(readFile(path), table);
  } catch (const rsl::Error& e) {
    throw CliError{kExitSyntax, path + ": " + e.what() + locSuffix(e.loc)};
  }
}

rsl::FairnessSet resolveFairness(const std::string& fairArg, const rsl::SourceFile& sf) {
  auto events = sf.events();
  if (fairArg == "all") return {events.begin(), events.end()};
  rsl::FairnessSet out;
  std::stringstream ss(fairArg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (std::find(events.begin(), events.end(), item) == events.end())
      throw CliError{kExitSemantic, "fairness event '" + item + "' is not a declared event"};
    out.insert(item);
  }
  return out;
}

rsl::RestrictedProgram prepare(const rsl::SourceFile& sf, bool noTransform, int maxFunctions,
                               unsigned seed) {
  try {
    if (noTransform) return rsl::validateRestricted(sf);
    rsl::TransformOptions opts;
    opts.maxFunctions = maxFunctions;
    opts.seed = seed;
    return rsl::validateRestricted(rsl::transform(sf, opts));
  } catch (const rsl::ValidateError& e) {
    throw CliError{kExitValidate, std::string(e.what()) + locSuffix(e.loc)};
  } catch (const rsl::TransformError& e) {
    throw CliError{kExitTransform, e.what()};
  }
}

int exitCodeFor(rsl::TruthVal v) {
  switch (v) {
    case rsl::TruthVal::True: return kExitTrue;
    case rsl::TruthVal::False: return kExitFalse;
    case rsl::TruthVal::Undefined: return kExitUndefined;
  }
  return kExitUndefined;
}

json traceToJson(const std::vector<rsl::TraceEntry>& trace) {
  json out = json::array();
  for (const auto& t : trace) {
    json e;
    e["rule"] = t.rule;
    if (!t.fun.empty()) e["function"] = t.fun;
    e["formula"] = t.formula;
    e["rho"] = t.rho;
    out.push_back(e);
  }
  return out;
}

int cmdCheck(const std::string& path) {
  rsl::SourceFile sf = parseFile(path);
  try {
    rsl::arityCheck(sf);
    rsl::Program p = rsl::flatten(sf);
    auto fv = rsl::freeVars(p.top);
    std::cout << path << ": ok (" << p.defs.size() << " function(s), "
              << sf.events().size() << " event(s)";
    if (!fv.empty()) {
      std::cout << ", free:";
      for (const auto& v : fv) std::cout << ' ' << v;
    }
    std::cout << ")\n";
  } catch (const rsl::Error& e) {
    throw CliError{kExitSemantic, path + ": " + e.what() + locSuffix(e.loc)};
  }
  return 0;
}

int cmdEval(const std::string& path, const std::string& exprText, bool whnf, long budget) {
  rsl::SourceFile sf = parseFile(path);
  rsl::Program prog;
  try {
    rsl::arityCheck(sf);
    prog = rsl::flatten(sf);
  } catch (const rsl::Error& e) {
    throw CliError{kExitSemantic, e.what() + locSuffix(e.loc)};
  }
  rsl::ExprPtr target = prog.top;
  if (!exprText.empty()) {
    std::set<rsl::Name> funScope;
    for (const auto& d : prog.defs) funScope.insert(d.name);
    try {
      target = rsl::parseExpr(exprText, sf.table, funScope);
      rsl::arityCheck(target, sf.table);
    } catch (const rsl::Error& e) {
      throw CliError{kExitSyntax, std::string(e.what()) + locSuffix(e.loc)};
    }
  }
  // expression may refer to top-level functions
  rsl::Env env = rsl::Env::fromProgram(prog);
  rsl::EvalResult r = whnf ? rsl::evalWHNF(target, env, budget)
                           : rsl::evalGround(target, env, budget);
  switch (r.kind) {
    case rsl::EvalResult::Kind::Value:
      std::cout << rsl::prettyExpr(r.expr) << "\n";
      return 0;
    case rsl::EvalResult::Kind::Stuck:
      throw CliError{kExitEval, std::string("stuck: ") + rsl::stuckName(r.stuck) + " in '" +
                                    rsl::prettyExpr(r.expr) + "'"};
    case rsl::EvalResult::Kind::BudgetExhausted:
      throw CliError{kExitEval, "budget exhausted after " + std::to_string(r.steps) +
                                    " steps (possible divergence)"};
  }
  return kExitEval;
}

int cmdTransform(const std::string& path, const std::string& outPath, int maxFunctions,
                 unsigned seed) {
  rsl::SourceFile sf = parseFile(path);
  rsl::SourceFile out;
  try {
    rsl::TransformOptions opts;
    opts.maxFunctions = maxFunctions;
    opts.seed = seed;
    out = rsl::transform(sf, opts);
  } catch (const rsl::TransformError& e) {
    throw CliError{kExitTransform, e.what()};
  } catch (const rsl::Error& e) {
    throw CliError{kExitSemantic, e.what() + locSuffix(e.loc)};
  }
  std::string text = rsl::prettyPrint(out);
  if (outPath.empty())
    std::cout << text;
  else
    writeFile(outPath, text);
  return 0;
}

int cmdVerify(const std::string& progPath, const std::string& propPath, bool noTransform,
              const std::string& fairArg, bool trace, bool asJson, long budget, int maxFunctions,
              unsigned seed) {
  rsl::SourceFile sf = parseFile(progPath);
  rsl::FormulaPtr phi = parseProperty(propPath, sf.table);
  rsl::FairnessSet fairness = resolveFairness(fairArg, sf);
  rsl::RestrictedProgram rp = prepare(sf, noTransform, maxFunctions, seed);
  rsl::VerifyOptions opts;
  opts.trace = trace;
  opts.propBudget = budget;
  rsl::Report report;
  try {
    report = rsl::verifyProgram(rp, phi, fairness, opts);
  } catch (const rsl::VerifyError& e) {
    throw CliError{kExitEval, e.what() + locSuffix(e.loc)};
  }
  int code = exitCodeFor(report.verdict);
  if (asJson) {
    json out;
    out["command"] = "verify";
    out["program"] = progPath;
    out["property"] = propPath;
    out["transformed"] = !noTransform;
    out["fairness"] = std::vector<std::string>(fairness.begin(), fairness.end());
    out["verdict"] = rsl::truthName(report.verdict);
    out["exitCode"] = code;
    out["timingMs"] = report.millis;
    if (trace) out["trace"] = traceToJson(report.trace);
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << rsl::truthName(report.verdict) << "\n";
    if (trace)
      for (const auto& t : report.trace) {
        std::cout << "  (" << t.rule << ")";
        if (!t.fun.empty()) std::cout << " " << t.fun;
        std::cout << " " << t.formula << "  rho={";
        for (size_t i = 0; i < t.rho.size(); ++i) std::cout << (i ? "," : "") << t.rho[i];
        std::cout << "}\n";
      }
  }
  return code;
}

int cmdLts(const std::string& progPath, const std::string& dotPath, bool selfLoops,
           bool noTransform, int maxFunctions, unsigned seed) {
  rsl::SourceFile sf = parseFile(progPath);
  rsl::RestrictedProgram rp = prepare(sf, noTransform, maxFunctions, seed);
  try {
    rsl::Lts lts = rsl::extractLts(rp);
    std::string dot = rsl::exportDot(lts, selfLoops);
    if (dotPath.empty())
      std::cout << dot;
    else
      writeFile(dotPath, dot);
  } catch (const rsl::LtsError& e) {
    throw CliError{kExitLts, e.what()};
  }
  return 0;
}

int cmdOracle(const std::string& progPath, const std::string& propPath, const std::string& fairArg,
              bool noTransform, bool asJson, int maxFunctions, unsigned seed) {
  rsl::SourceFile sf = parseFile(progPath);
  rsl::FormulaPtr phi = parseProperty(propPath, sf.table);
  rsl::FairnessSet fairness = resolveFairness(fairArg, sf);
  rsl::RestrictedProgram rp = prepare(sf, noTransform, maxFunctions, seed);
  rsl::OracleVerdict verdict;
  try {
    rsl::Lts lts = rsl::extractLts(rp);
    verdict = rsl::oracleCheck(lts, phi, fairness);
  } catch (const rsl::LtsError& e) {
    throw CliError{kExitLts, e.what()};
  }
  if (asJson) {
    json out;
    out["command"] = "oracle";
    out["program"] = progPath;
    out["property"] = propPath;
    out["holds"] = verdict.holds;
    if (verdict.witness) {
      out["witness"]["prefix"] = verdict.witness->prefix;
      out["witness"]["cycle"] = verdict.witness->cycle;
    } else {
      out["witness"] = nullptr;
    }
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << (verdict.holds ? "holds" : "fails") << "\n";
    if (verdict.witness) {
      std::cout << "  prefix:";
      for (const auto& ev : verdict.witness->prefix) std::cout << " " << ev;
      std::cout << "\n  cycle:";
      for (const auto& ev : verdict.witness->cycle) std::cout << " " << ev;
      std::cout << "\n";
    }
  }
  return verdict.holds ? kExitTrue : kExitFalse;
}

int cmdCorpusRun(bool asJson) {
  auto corpus = rsl::corpus::loadCorpus();
  bool allPass = true;
  json results = json::array();
  for (const auto& e : corpus) {
    rsl::RestrictedProgram ref = rsl::validateRestricted(e.distilledReference);
    rsl::RestrictedProgram piped = rsl::validateRestricted(rsl::transform(e.source));
    rsl::FairnessSet fairness = rsl::allEventsFair(e.source);
    for (const auto& p : e.properties) {
      rsl::TruthVal onRef = rsl::verifyProgram(ref, p.formula, fairness).verdict;
      rsl::TruthVal onPiped = rsl::verifyProgram(piped, p.formula, fairness).verdict;
      bool pass = onRef == p.expected && onPiped == p.expected;
      allPass = allPass && pass;
      if (asJson) {
        json r;
        r["example"] = e.name;
        r["property"] = p.name;
        r["expected"] = rsl::truthName(p.expected);
        r["restricted"] = rsl::truthName(onRef);
        r["transformed"] = rsl::truthName(onPiped);
        r["pass"] = pass;
        results.push_back(r);
      } else {
        std::cout << e.name << " " << p.name << " expected=" << rsl::truthName(p.expected)
                  << " restricted=" << rsl::truthName(onRef)
                  << " transformed=" << rsl::truthName(onPiped) << (pass ? " PASS" : " FAIL")
                  << "\n";
      }
    }
  }
  if (asJson) {
    json out;
    out["command"] = "corpus run";
    out["results"] = results;
    out["pass"] = allPass;
    std::cout << out.dump(2) << "\n";
  }
  return allPass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verifier toolchain for stream-based reactive systems"};
  app.require_subcommand(1);

  std::string progPath, propPath, exprText, outPath, dotPath, fairArg = "all";
  bool noTransform = false, trace = false, asJson = false, selfLoops = false, whnf = false;
  long budget = rsl::kDefaultBudget;
  int maxFunctions = 512;
  unsigned seed = 1;

  auto* check = app.add_subcommand("check", "parse and arity-check a program");
  check->add_option("program", progPath, "program file (.rsl)")->required();

  auto* eval = app.add_subcommand("eval", "evaluate the main expression or -e EXPR");
  eval->add_option("program", progPath)->required();
  eval->add_option("-e,--expr", exprText, "expression to evaluate in the program's scope");
  eval->add_flag("--whnf", whnf, "stop at weak head normal form");
  eval->add_option("--budget", budget, "reduction step budget");

  auto* transform = app.add_subcommand("transform", "transform into the restricted form");
  transform->add_option("program", progPath)->required();
  transform->add_option("-o,--output", outPath, "output file (stdout if omitted)");
  transform->add_option("--max-functions", maxFunctions, "residual function budget");
  transform->add_option("--seed", seed, "seed for the trace-equivalence self check");

  auto* verify = app.add_subcommand("verify", "verify an LTL property");
  verify->add_option("program", progPath)->required();
  verify->add_option("property", propPath, "property file (.ltl)")->required();
  verify->add_flag("--no-transform", noTransform, "require the input to already be restricted");
  verify->add_option("--fair", fairArg, "comma-separated fair events, or 'all'");
  verify->add_flag("--trace", trace, "print the rule trace");
  verify->add_flag("--json", asJson, "machine-readable report");
  verify->add_option("--budget", budget, "proposition evaluation budget");
  verify->add_option("--max-functions", maxFunctions, "residual function budget");
  verify->add_option("--seed", seed, "transformation seed");

  auto* lts = app.add_subcommand("lts", "extract the labelled transition system");
  lts->add_option("program", progPath)->required();
  lts->add_option("--dot", dotPath, "write Graphviz output here (stdout if omitted)");
  lts->add_flag("--self-loops", selfLoops, "include transitions back into the same state");
  lts->add_flag("--no-transform", noTransform);
  lts->add_option("--max-functions", maxFunctions);
  lts->add_option("--seed", seed);

  auto* oracle = app.add_subcommand("oracle", "explicit-state fair-LTL check");
  oracle->add_option("program", progPath)->required();
  oracle->add_option("property", propPath)->required();
  oracle->add_option("--fair", fairArg);
  oracle->add_flag("--no-transform", noTransform);
  oracle->add_flag("--json", asJson);
  oracle->add_option("--max-functions", maxFunctions);
  oracle->add_option("--seed", seed);

  auto* corpus = app.add_subcommand("corpus", "built-in example systems");
  auto* corpusRun = corpus->add_subcommand("run", "check every golden verdict");
  corpusRun->add_flag("--json", asJson);
  corpus->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (check->parsed()) return cmdCheck(progPath);
    if (eval->parsed()) return cmdEval(progPath, exprText, whnf, budget);
    if (transform->parsed()) return cmdTransform(progPath, outPath, maxFunctions, seed);
    if (verify->parsed())
      return cmdVerify(progPath, propPath, noTransform, fairArg, trace, asJson, budget,
                       maxFunctions, seed);
    if (lts->parsed()) return cmdLts(progPath, dotPath, selfLoops, noTransform, maxFunctions, seed);
    if (oracle->parsed())
      return cmdOracle(progPath, propPath, fairArg, noTransform, asJson, maxFunctions, seed);
    if (corpusRun->parsed()) return cmdCorpusRun(asJson);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const rsl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::cerr << "error: no subcommand\n";
  return kExitUsage;
}
