#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

// End-to-end checks of the command-line tool, driven through the shell.

namespace {

struct RunResult {
  int exitCode;
  std::string out;
};

RunResult runCli(const std::string& args) {
  std::string cmd = std::string(RSL_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string corpusPath(const std::string& name) {
  return std::string(RSL_CORPUS_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("verify exit codes encode the three verdicts") {
  CHECK(runCli("verify " + corpusPath("example2.rsl") + " " + corpusPath("mutex.ltl")).exitCode ==
        0);
  CHECK(runCli("verify " + corpusPath("example2.rsl") + " " + corpusPath("nonstarve1.ltl"))
            .exitCode == 1);
  CHECK(runCli("verify " + corpusPath("example1.rsl") + " " + corpusPath("mutex.ltl")).exitCode ==
        1);
}

TEST_CASE("verify without transformation accepts the restricted forms verbatim") {
  auto r = runCli("verify --no-transform " + corpusPath("example3_distilled.rsl") + " " +
                  corpusPath("nonstarve2.ltl"));
  CHECK(r.exitCode == 0);
  CHECK(r.out.find("True") != std::string::npos);
  // and rejects non-restricted input
  CHECK(runCli("verify --no-transform " + corpusPath("example3.rsl") + " " +
               corpusPath("mutex.ltl"))
            .exitCode == 13);
}

TEST_CASE("an undefined verdict exits with code two") {
  std::string tmp = "/tmp/rsl_cli_undefined.rsl";
  std::ofstream(tmp) << "data Event = Tick/0;\ndata State = ObsState/2;\ndata ProcState = T/0;\n"
                        "let h = \\es2. f1 es2 in h es\nwhere\n"
                        "  f1 = \\es. Cons (ObsState T T) (case es of Cons e es: case e of _: f1 "
                        "es);\n";
  std::string prop = "/tmp/rsl_cli_undefined.ltl";
  std::ofstream(prop) << "G {True}\n";
  CHECK(runCli("verify --no-transform " + tmp + " " + prop).exitCode == 2);
}

TEST_CASE("missing files are usage errors") {
  CHECK(runCli("check does-not-exist.rsl").exitCode >= 10);
}

TEST_CASE("check reports basic program facts") {
  auto r = runCli("check " + corpusPath("example3.rsl"));
  CHECK(r.exitCode == 0);
  CHECK(r.out.find("ok") != std::string::npos);
  CHECK(r.out.find("6 event(s)") != std::string::npos);
}

TEST_CASE("eval computes ground terms in the program scope") {
  auto r = runCli("eval " + corpusPath("example3.rsl") + " -e \"lt Zero (Succ Zero)\"");
  CHECK(r.exitCode == 0);
  CHECK(r.out == "True\n");
  CHECK(runCli("eval " + corpusPath("example3.rsl") + " -e \"lt (Succ Zero) Zero\"").out ==
        "False\n");
  // a stuck evaluation is an evaluation error
  CHECK(runCli("eval " + corpusPath("example1.rsl") + " -e \"case es of Cons h t: h\"").exitCode ==
        15);
}

TEST_CASE("transform writes a restricted program that verifies") {
  std::string out = "/tmp/rsl_cli_transformed.rsl";
  CHECK(runCli("transform " + corpusPath("example3.rsl") + " -o " + out).exitCode == 0);
  CHECK(runCli("verify --no-transform " + out + " " + corpusPath("nonstarve1.ltl")).exitCode == 0);
}

TEST_CASE("lts exports graphviz text") {
  auto r = runCli("lts --no-transform " + corpusPath("example2_distilled.rsl"));
  CHECK(r.exitCode == 0);
  CHECK(r.out.find("digraph lts {") != std::string::npos);
  CHECK(r.out.find("\"f5\"") != std::string::npos);
}

TEST_CASE("oracle exit codes and witness output") {
  auto holds = runCli("oracle " + corpusPath("example3.rsl") + " " + corpusPath("mutex.ltl"));
  CHECK(holds.exitCode == 0);
  CHECK(holds.out.find("holds") != std::string::npos);
  auto fails = runCli("oracle --no-transform " + corpusPath("example1_distilled.rsl") + " " +
                      corpusPath("mutex.ltl"));
  CHECK(fails.exitCode == 1);
  CHECK(fails.out.find("prefix:") != std::string::npos);
}

TEST_CASE("corpus run exits zero and prints one line per golden verdict") {
  auto r = runCli("corpus run");
  CHECK(r.exitCode == 0);
  int lines = 0;
  for (char c : r.out) lines += c == '\n';
  CHECK(lines == 6);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("json reports parse and carry the verdict") {
  auto r = runCli("verify --json --trace " + corpusPath("example2.rsl") + " " +
                  corpusPath("mutex.ltl"));
  CHECK(r.exitCode == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["verdict"] == "True");
  CHECK(j["exitCode"] == 0);
  CHECK(j["trace"].is_array());
  CHECK(!j["trace"].empty());

  auto o = runCli("oracle --json --no-transform " + corpusPath("example1_distilled.rsl") + " " +
                  corpusPath("mutex.ltl"));
  CHECK(o.exitCode == 1);
  auto jo = nlohmann::json::parse(o.out);
  CHECK(jo["holds"] == false);
  CHECK(jo["witness"]["prefix"].is_array());

  auto c = runCli("corpus run --json");
  CHECK(c.exitCode == 0);
  auto jc = nlohmann::json::parse(c.out);
  CHECK(jc["pass"] == true);
  CHECK(jc["results"].size() == 6);
}
