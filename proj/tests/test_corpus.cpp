#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "rsl/corpus.hpp"
#include "rsl/restricted.hpp"
#include "rsl/transform.hpp"
#include "rsl/verify.hpp"

using namespace rsl;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("the corpus loads with three entries and the expected verdict table") {
  auto entries = corpus::loadCorpus();
  REQUIRE(entries.size() == 3);

  CHECK(entries[0].name == "example1");
  REQUIRE(entries[0].properties.size() == 1);
  CHECK(entries[0].properties[0].name == "mutex");
  CHECK(entries[0].properties[0].expected == TruthVal::False);

  CHECK(entries[1].name == "example2");
  REQUIRE(entries[1].properties.size() == 2);
  CHECK(entries[1].properties[0].expected == TruthVal::True);
  CHECK(entries[1].properties[1].name == "nonstarve1");
  CHECK(entries[1].properties[1].expected == TruthVal::False);

  CHECK(entries[2].name == "example3");
  REQUIRE(entries[2].properties.size() == 3);
  for (const auto& p : entries[2].properties) CHECK(p.expected == TruthVal::True);
}

TEST_CASE("every shipped restricted form validates") {
  for (const auto& entry : corpus::loadCorpus())
    CHECK_NOTHROW(validateRestricted(entry.distilledReference));
}

TEST_CASE("source and restricted forms are trace-equivalent") {
  for (const auto& entry : corpus::loadCorpus()) {
    INFO(entry.name);
    CHECK(boundedBisim(entry.source, entry.distilledReference, 20, 200, 20240715));
  }
}

TEST_CASE("the restricted forms verify to the expected verdicts") {
  for (const auto& entry : corpus::loadCorpus()) {
    auto rp = validateRestricted(entry.distilledReference);
    for (const auto& prop : entry.properties) {
      INFO(entry.name << " / " << prop.name);
      CHECK(verifyProgram(rp, prop.formula, allEventsFair(entry.source)).verdict ==
            prop.expected);
    }
  }
}

TEST_CASE("the shipped corpus files match the embedded texts") {
  for (const auto& [name, text] : corpus::files()) {
    INFO(name);
    CHECK(slurp(std::string(RSL_CORPUS_DIR) + "/" + name) == text);
  }
}

TEST_CASE("the golden manifest lists exactly the embedded verdict table") {
  std::istringstream manifest(corpus::files().at("golden.txt"));
  auto entries = corpus::loadCorpus();
  std::string example, property, verdict;
  int rows = 0;
  while (manifest >> example >> property >> verdict) {
    ++rows;
    bool found = false;
    for (const auto& e : entries) {
      if (e.name != example) continue;
      for (const auto& p : e.properties)
        if (p.name == property) {
          found = true;
          CHECK(truthName(p.expected) == verdict);
        }
    }
    CHECK(found);
  }
  int total = 0;
  for (const auto& e : entries) total += static_cast<int>(e.properties.size());
  CHECK(rows == total);
}
