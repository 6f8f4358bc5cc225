#include "pdgen/dataset.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "pdgen/validate.hpp"
#include "support.hpp"

using namespace pdgen;

namespace {

// On-atoms of a problem's init, as "(above below)" strings.
std::set<std::string> init_stacking(const Problem& problem) {
  std::set<std::string> pairs;
  for (const auto& atom : problem.init) {
    if (atom.predicate.str() == "on") pairs.insert(atom.str());
  }
  return pairs;
}

std::set<std::string> goal_atoms(const Problem& problem) {
  std::set<std::string> atoms;
  for (const auto& literal : problem.goal.literals()) {
    REQUIRE_FALSE(literal.negated);
    atoms.insert(literal.atom.str());
  }
  return atoms;
}

}  // namespace

TEST_CASE("tower arrangement counts follow the known sequence") {
  // Arrangements of n distinct blocks into towers: 1, 3, 13, 73, 501, ...
  CHECK(blocksworld_state_count(1) == 1);
  CHECK(blocksworld_state_count(2) == 3);
  CHECK(blocksworld_state_count(3) == 13);
  CHECK(blocksworld_state_count(4) == 73);
  CHECK(blocksworld_state_count(5) == 501);
  CHECK(blocksworld_state_count(6) == 4051);
  CHECK(blocksworld_state_count(7) == 37633);

  CHECK(lah_number(3, 1) == 6);    // one tower: any of the 3! orders
  CHECK(lah_number(3, 3) == 1);    // all on the table
  CHECK(lah_number(5, 2) == 240);  // 5!/2! * C(4,1)
  CHECK(lah_number(4, 5) == 0);
  CHECK(lah_number(4, 0) == 0);

  CHECK_NOTHROW(blocksworld_state_count(12));
  CHECK_THROWS_AS(blocksworld_state_count(13), Error);
  CHECK_THROWS_AS(blocksworld_state_count(0), Error);
}

TEST_CASE("blocksworld cases are deterministic in their seed") {
  const ProblemCase a = generate_blocksworld_case(4, 7);
  const ProblemCase b = generate_blocksworld_case(4, 7);
  CHECK(a.id == b.id);
  CHECK(a.instruction == b.instruction);
  CHECK(a.problem_text == b.problem_text);
  CHECK(scene_to_json(a.scene) == scene_to_json(b.scene));

  const ProblemCase c = generate_blocksworld_case(4, 8);
  CHECK(a.problem_text != c.problem_text);
}

TEST_CASE("blocksworld initial states cover every arrangement evenly") {
  // With 3 blocks there are 13 arrangements; a seed sweep should hit each
  // one at close to the uniform rate.
  std::map<std::string, int> counts;
  const int samples = 2600;
  for (int seed = 0; seed < samples; ++seed) {
    const ProblemCase pc = generate_blocksworld_case(3, static_cast<std::uint64_t>(seed));
    std::string signature;
    for (const auto& atom : pc.problem.init) {
      if (atom.predicate.str() == "on" || atom.predicate.str() == "ontable") {
        signature += atom.str();
      }
    }
    ++counts[signature];
  }
  CHECK(counts.size() == 13);
  for (const auto& [signature, count] : counts) {
    INFO("arrangement ", signature, " seen ", count, " times");
    CHECK(count > 130);  // expected 200 each
    CHECK(count < 270);
  }
}

TEST_CASE("blocksworld goals demand a real rearrangement") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const ProblemCase pc = generate_blocksworld_case(3 + seed % 3, seed);
    const auto goal = goal_atoms(pc.problem);
    REQUIRE_FALSE(goal.empty());
    for (const auto& atom : goal) CHECK(atom.substr(0, 4) == "(on ");
    CHECK(goal != init_stacking(pc.problem));
  }
}

TEST_CASE("generated blocksworld cases survive the full toolchain") {
  const Domain domain = blocksworld_domain();
  const DomainKnowledge knowledge = blocksworld_knowledge(4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProblemCase pc = generate_blocksworld_case(4, seed);
    REQUIRE(validate(domain, pc.problem).ok());
    const PlannerResult result = solve(domain, pc.problem);
    REQUIRE(result.outcome == PlanOutcome::Solved);
    CHECK(validate_plan(domain, pc.problem, result.plan).valid);

    // Scene and object list agree.
    const auto assignments = detections_to_objects(pc.scene.detections, knowledge);
    std::set<std::string> from_scene, declared;
    for (const auto& assignment : assignments) {
      from_scene.insert(assignment.object.name.str() + " - " + assignment.object.type.str());
    }
    for (const auto& object : pc.problem.objects) {
      declared.insert(object.name.str() + " - " + object.type.str());
    }
    CHECK(from_scene == declared);
    CHECK(pc.scene.captions.size() == pc.scene.detections.size());
  }
}

TEST_CASE("the canonical tower move appears at seed zero") {
  const ProblemCase pc = generate_hanoi_case(3, 0);
  CHECK(pc.instruction == "move all the disks to the right peg");

  const auto init = std::set<Atom>(pc.problem.init.begin(), pc.problem.init.end());
  CHECK(init.count(Atom{Name("on"), {Name("disk3"), Name("peg1")}}));
  CHECK(init.count(Atom{Name("on"), {Name("disk2"), Name("disk3")}}));
  CHECK(init.count(Atom{Name("on"), {Name("disk1"), Name("disk2")}}));
  CHECK(init.count(Atom{Name("clear"), {Name("disk1")}}));
  CHECK(init.count(Atom{Name("clear"), {Name("peg2")}}));
  CHECK(init.count(Atom{Name("clear"), {Name("peg3")}}));

  const auto goal = goal_atoms(pc.problem);
  CHECK(goal.count("(on disk3 peg3)"));
  CHECK(goal.count("(on disk2 disk3)"));
  CHECK(goal.count("(on disk1 disk2)"));

  // 2^3 - 1 moves, the textbook optimum.
  SearchConfig optimal;
  optimal.algorithm = Algorithm::AStar;
  optimal.heuristic = Heuristic::HMax;
  const PlannerResult result = solve(hanoi_domain(), pc.problem, optimal);
  REQUIRE(result.outcome == PlanOutcome::Solved);
  CHECK(result.plan.steps.size() == 7);
}

TEST_CASE("random hanoi arrangements are legal and recoverable") {
  const Domain domain = hanoi_domain();
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const ProblemCase pc = generate_hanoi_case(4, seed);
    REQUIRE(validate(domain, pc.problem).ok());

    // Every disk sits on exactly one thing, and the size table is complete:
    // 3 pegs x 4 disks plus one fact per disk pair.
    std::map<std::string, int> on_count;
    std::size_t smaller = 0;
    for (const auto& atom : pc.problem.init) {
      if (atom.predicate.str() == "on") ++on_count[atom.args[0].str()];
      if (atom.predicate.str() == "smaller") ++smaller;
    }
    CHECK(on_count.size() == 4);
    for (const auto& [disk, count] : on_count) {
      INFO(disk);
      CHECK(count == 1);
    }
    CHECK(smaller == 3 * 4 + 6);

    const PlannerResult result = solve(domain, pc.problem);
    REQUIRE(result.outcome == PlanOutcome::Solved);
    CHECK_FALSE(result.plan.steps.empty());  // goals never hold in the initial state
    CHECK(validate_plan(domain, pc.problem, result.plan).valid);
  }
}

TEST_CASE("hanoi scenes recover disk and peg names from geometry") {
  const ProblemCase pc = generate_hanoi_case(5, 3);
  const auto assignments = detections_to_objects(pc.scene.detections, hanoi_knowledge());
  std::map<std::string, std::string> named;
  for (const auto& assignment : assignments) {
    named[assignment.object.name.str()] = assignment.object.type.str();
  }
  const std::map<std::string, std::string> expected = {
      {"disk1", "disk"}, {"disk2", "disk"}, {"disk3", "disk"}, {"disk4", "disk"},
      {"disk5", "disk"}, {"peg1", "peg"},   {"peg2", "peg"},   {"peg3", "peg"}};
  CHECK(named == expected);

  // disk1 is the narrowest detection, peg1 the leftmost peg.
  for (const auto& assignment : assignments) {
    if (assignment.object.name.str() == "disk1") {
      REQUIRE(assignment.detection.has_value());
      const auto& box = pc.scene.detections[*assignment.detection].box;
      for (const auto& detection : pc.scene.detections) {
        if (detection.label == "disk") CHECK(box.w <= detection.box.w);
      }
    }
  }
  CHECK(pc.scene.captions.size() == pc.scene.detections.size());
}

TEST_CASE("bundles round-trip through the filesystem byte for byte") {
  const DomainBundle bundle = scaffold_bundle(ScaffoldKind::Blocksworld, 3, 5, 2);
  REQUIRE(bundle.cases.size() == 5);
  CHECK(bundle.cases.front().id == "case01");
  CHECK(bundle.cases.back().id == "case05");
  CHECK(bundle.knowledge.example_pool.size() == 5);

  testsupport::TempDir tmp;
  const auto first = tmp.path() / "first";
  const auto second = tmp.path() / "second";
  write_bundle(first, bundle);
  write_bundle(second, bundle);

  const char* const files[] = {"domain.pddl", "knowledge.json",
                               "problems/case03/instruction.txt",
                               "problems/case03/scene.json", "problems/case03/problem.pddl"};
  for (const char* file : files) {
    INFO(file);
    CHECK(testsupport::slurp(first / file) == testsupport::slurp(second / file));
  }

  const DomainBundle loaded = load_bundle(first);
  REQUIRE(loaded.cases.size() == 5);
  CHECK(loaded.domain.name.str() == "blocksworld");
  CHECK(loaded.domain_text == bundle.domain_text);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(loaded.cases[i].id == bundle.cases[i].id);
    CHECK(loaded.cases[i].instruction == bundle.cases[i].instruction);
    CHECK(loaded.cases[i].problem_text == bundle.cases[i].problem_text);
    CHECK(loaded.cases[i].scene == bundle.cases[i].scene);
  }
  REQUIRE(loaded.knowledge.example_pool.size() == 5);
  CHECK(loaded.knowledge.example_pool[2].id == "case03");
  CHECK(loaded.knowledge.example_pool[2].problem_text == bundle.cases[2].problem_text);

  CHECK(verify_bundle(loaded).ok());
}

TEST_CASE("scaffolded hanoi bundles verify clean") {
  const DomainBundle bundle = scaffold_bundle(ScaffoldKind::Hanoi, 4, 6, 3);
  const BundleReport report = verify_bundle(bundle);
  for (const auto& issue : report.issues) {
    INFO(issue.case_id, ": ", issue.message);
    CHECK(false);
  }
  CHECK(report.ok());
}

TEST_CASE("verification reports broken cases by name") {
  DomainBundle bundle = scaffold_bundle(ScaffoldKind::Blocksworld, 3, 3, 5);

  SUBCASE("an invalid reference problem") {
    bundle.cases[1].problem.init.push_back(
        Atom{Name("on"), {Name("red_block"), Name("phantom")}});
    const BundleReport report = verify_bundle(bundle);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].case_id == "case02");
    CHECK(report.issues[0].message.find("problem fails validation") == 0);
    CHECK(report.issues[0].message.find("phantom") != std::string::npos);
  }

  SUBCASE("an unsolvable goal") {
    auto& problem = bundle.cases[0].problem;
    problem.goal = Condition{};
    problem.goal.add(Literal{Atom{Name("on"), {Name("red_block"), Name("blue_block")}}});
    problem.goal.add(Literal{Atom{Name("on"), {Name("blue_block"), Name("red_block")}}});
    const BundleReport report = verify_bundle(bundle);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].case_id == "case01");
    CHECK(report.issues[0].message.find("unsolvable") != std::string::npos);
  }

  SUBCASE("a scene that does not match the object list") {
    bundle.cases[2].scene.detections[0].label = "mystery_block";
    const BundleReport report = verify_bundle(bundle);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].case_id == "case03");
    CHECK(report.issues[0].message.find("scene does not name its objects") == 0);
  }

  SUBCASE("a missing caption") {
    bundle.cases[0].scene.captions.erase(0);
    const BundleReport report = verify_bundle(bundle);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].case_id == "case01");
    CHECK(report.issues[0].message.find("has no caption") != std::string::npos);
  }
}

TEST_CASE("loading rejects directories that are not bundles") {
  testsupport::TempDir tmp;
  CHECK_THROWS_WITH_AS(load_bundle(tmp.path()),
                       doctest::Contains("missing domain.pddl"), Error);

  write_bundle(tmp.path() / "b", scaffold_bundle(ScaffoldKind::Blocksworld, 3, 2, 0));
  std::filesystem::remove(tmp.path() / "b" / "problems" / "case02" / "instruction.txt");
  CHECK_THROWS_WITH_AS(load_bundle(tmp.path() / "b"),
                       doctest::Contains("case 'case02' is missing instruction.txt"), Error);
}

TEST_CASE("example pools may live in a dedicated directory") {
  DomainBundle bundle = scaffold_bundle(ScaffoldKind::Blocksworld, 3, 2, 4);
  testsupport::TempDir tmp;
  write_bundle(tmp.path(), bundle);

  // Move case02 out of the evaluation set and into examples/.
  std::filesystem::create_directories(tmp.path() / "examples");
  std::filesystem::rename(tmp.path() / "problems" / "case02", tmp.path() / "examples" / "case02");

  const DomainBundle loaded = load_bundle(tmp.path());
  CHECK(loaded.cases.size() == 1);
  REQUIRE(loaded.knowledge.example_pool.size() == 2);
  CHECK(loaded.knowledge.example_pool[1].id == "case02");
  CHECK(loaded.knowledge.example_pool[1].instruction == bundle.cases[1].instruction);

  // A pool id with no directory anywhere is an error.
  std::filesystem::remove_all(tmp.path() / "examples");
  CHECK_THROWS_WITH_AS(load_bundle(tmp.path()),
                       doctest::Contains("example pool references unknown case 'case02'"), Error);
}

TEST_CASE("scaffold kinds parse from their command-line names") {
  CHECK(scaffold_kind_from_string("blocksworld") == ScaffoldKind::Blocksworld);
  CHECK(scaffold_kind_from_string("hanoi") == ScaffoldKind::Hanoi);
  CHECK_THROWS_WITH_AS(scaffold_kind_from_string("sokoban"),
                       doctest::Contains("unknown scaffold domain 'sokoban'"), Error);
}
