#include <doctest.h>

#include <pdgen/pipeline.hpp>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "support.hpp"

using namespace pdgen;

namespace {

const char* const kBlocksworld = R"((define (domain blocksworld)
  (:requirements :strips :typing)
  (:types block robot - object)
  (:predicates
    (on ?x - block ?y - block)
    (ontable ?x - block)
    (clear ?x - block)
    (handempty ?r - robot)
    (handfull ?r - robot)
    (holding ?x - block))
  (:action pick-up
    :parameters (?x - block ?r - robot)
    :precondition (and (clear ?x) (ontable ?x) (handempty ?r))
    :effect (and (holding ?x) (handfull ?r)
                 (not (clear ?x)) (not (ontable ?x)) (not (handempty ?r))))
  (:action put-down
    :parameters (?x - block ?r - robot)
    :precondition (and (holding ?x) (handfull ?r))
    :effect (and (clear ?x) (ontable ?x) (handempty ?r)
                 (not (holding ?x)) (not (handfull ?r))))
  (:action stack
    :parameters (?x - block ?y - block ?r - robot)
    :precondition (and (holding ?x) (clear ?y) (handfull ?r))
    :effect (and (on ?x ?y) (clear ?x) (handempty ?r)
                 (not (holding ?x)) (not (clear ?y)) (not (handfull ?r))))
  (:action unstack
    :parameters (?x - block ?y - block ?r - robot)
    :precondition (and (on ?x ?y) (clear ?x) (handempty ?r))
    :effect (and (holding ?x) (clear ?y) (handfull ?r)
                 (not (on ?x ?y)) (not (clear ?x)) (not (handempty ?r)))))
)";

const char* const kExampleProblem = R"((define (problem ex-stack)
  (:domain blocksworld)
  (:objects red_block blue_block - block robot - robot)
  (:init (clear red_block) (clear blue_block)
         (ontable red_block) (ontable blue_block) (handempty robot))
  (:goal (and (on red_block blue_block))))
)";

Detection det(const std::string& label, double x) {
  return Detection{label, BoundingBox{x, 600, 90, 60}, 0.9};
}

WorkedExample make_example(const std::string& id) {
  WorkedExample ex;
  ex.id = id;
  ex.instruction = "stack the red block on the blue block";
  ex.annotation.image_ref = id + ".png";
  ex.annotation.width = 1280;
  ex.annotation.height = 720;
  ex.annotation.detections = {det("red_block", 100), det("blue_block", 300)};
  ex.annotation.captions = {{0, "a red block resting on the table"},
                            {1, "a blue block resting on the table"}};
  ex.problem = parse_problem(kExampleProblem);
  ex.problem_text = print_problem(ex.problem);
  return ex;
}

DomainKnowledge make_knowledge() {
  DomainKnowledge k;
  k.query_elaborations = {{"red_block", "a red block"},
                          {"blue_block", "a blue block"},
                          {"green_block", "a green block"}};
  k.type_map = {{"red_block", Name("block")},
                {"blue_block", Name("block")},
                {"green_block", Name("block")}};
  k.fixed_objects = {TypedObject{Name("robot"), Name("robot")}};
  for (const char* id : {"ex01", "ex02", "ex03"}) k.example_pool.push_back(make_example(id));
  return k;
}

PromptLibrary shipped_prompts() {
  return PromptLibrary::load_dir(PDGEN_DATA_DIR "/prompts");
}

/// A pipeline over a scripted backend with two blocks in view.
struct Rig {
  Domain dom = parse_domain(kBlocksworld);
  DomainKnowledge know = make_knowledge();
  ScriptedBackend backend;
  PipelineConfig config;
  SearchConfig search;

  GenerationInput input{"case01", "put the red block on the blue block", "img01.png",
                        "scenes/case01.json"};

  void queue_scene() {
    backend.push_detections({det("red_block", 100), det("blue_block", 300)});
    backend.push_caption("a red block on the table");
    backend.push_caption("a blue block on the table");
  }

  GenerationRecord run() {
    Pipeline pipeline(dom, know, shipped_prompts(), backend, config, search);
    return pipeline.generate(input);
  }
};

const char* const kGoodInit =
    "(:init (clear red_block) (clear blue_block) (ontable red_block)"
    " (ontable blue_block) (handempty robot))";
const char* const kGoodGoal = "(:goal (and (on red_block blue_block)))";

const char* const kCorrected = R"(Here is the corrected description:
(define (problem case01)
  (:domain blocksworld)
  (:objects red_block blue_block - block robot - robot)
  (:init (clear red_block) (clear blue_block)
         (ontable red_block) (ontable blue_block) (handempty robot))
  (:goal (and (on red_block blue_block))))
)";

}  // namespace

TEST_CASE("the captioning prompt names the class in plain words") {
  CHECK(caption_prompt("red_block") == "Q: what does this red block describe? A: ");
  CHECK(caption_prompt("peg") == "Q: what does this peg describe? A: ");
}

TEST_CASE("select_examples visits every k-subset exactly once") {
  std::vector<WorkedExample> pool;
  for (int i = 1; i <= 10; ++i) {
    pool.push_back(make_example("ex" + std::to_string(i)));
  }
  // Excluding one case leaves 9; C(9, 3) = 84 distinct selections.
  std::set<std::vector<std::string>> seen;
  for (std::uint64_t index = 0; index < 84; ++index) {
    auto picked = select_examples(pool, 3, index, "ex4");
    REQUIRE(picked.size() == 3);
    std::vector<std::string> ids;
    for (const auto* ex : picked) {
      CHECK(ex->id != "ex4");
      ids.push_back(ex->id);
    }
    // Selections come back in pool order.
    CHECK(std::is_sorted(ids.begin(), ids.end(), [&](const auto& a, const auto& b) {
      auto pos = [&](const std::string& id) {
        return std::find_if(pool.begin(), pool.end(),
                            [&](const auto& e) { return e.id == id; }) -
               pool.begin();
      };
      return pos(a) < pos(b);
    }));
    seen.insert(ids);
  }
  CHECK(seen.size() == 84);

  // The index wraps around the subset count.
  auto first = select_examples(pool, 3, 0, "ex4");
  auto wrapped = select_examples(pool, 3, 84, "ex4");
  CHECK(first == wrapped);
}

TEST_CASE("select_examples needs a large enough pool") {
  std::vector<WorkedExample> pool = {make_example("ex1"), make_example("ex2"),
                                     make_example("ex3")};
  CHECK(select_examples(pool, 3, 0, "other").size() == 3);
  CHECK_THROWS_WITH_AS(select_examples(pool, 3, 0, "ex2"),
                       "example pool has 2 usable cases but 3 are requested", Error);
  CHECK(select_examples(pool, 0, 5, "ex2").empty());
}

TEST_CASE("extract_pddl_block prefers fenced code and finds bare forms") {
  CHECK(extract_pddl_block("Sure!\n```pddl\n(:init (on a b))\n```\ndone (aside)") ==
        "(:init (on a b))");
  CHECK(extract_pddl_block("prose first (not pddl) then (define (problem p) (:domain d) "
                           "(:init) (:goal (and))) trailing") ==
        "(define (problem p) (:domain d) (:init) (:goal (and)))");
  CHECK(extract_pddl_block("the goal is (and (on a b))") == "(and (on a b))");
  // A fenced block without PDDL falls back to the full text.
  CHECK(extract_pddl_block("```\njust code\n```\nbut see (:goal (and (on a b)))") ==
        "(:goal (and (on a b)))");
  CHECK(extract_pddl_block("(android) (androids everywhere)") == std::nullopt);
  CHECK(extract_pddl_block("(:init (truncated") == std::nullopt);
  CHECK(extract_pddl_block("no forms at all") == std::nullopt);
}

TEST_CASE("modular generation succeeds first try with two chat turns") {
  Rig rig;
  rig.queue_scene();
  rig.backend.push_chat(kGoodInit);
  rig.backend.push_chat(kGoodGoal);

  auto record = rig.run();

  REQUIRE(record.attempts.size() == 1);
  CHECK(record.success);
  CHECK(record.final_index == 0);
  CHECK_FALSE(record.fatal_error.has_value());
  const auto& attempt = record.attempts[0];
  CHECK(attempt.parsable);
  CHECK(attempt.validation_errors.empty());
  CHECK(attempt.planner_outcome == "solved");
  CHECK(attempt.plan_steps ==
        std::vector<std::string>{"(pick-up red_block robot)",
                                 "(stack red_block blue_block robot)"});
  CHECK_FALSE(attempt.error.has_value());
  CHECK_FALSE(attempt.cot.has_value());

  // The assembled description uses the scene's object list.
  CHECK(attempt.problem_text.find("red_block - block") != std::string::npos);
  CHECK(attempt.problem_text.find("robot - robot") != std::string::npos);

  // One detector query, one caption per detected object, no correction chats.
  CHECK(rig.backend.detect_calls() == 1);
  CHECK(rig.backend.caption_calls() == 2);
  CHECK(rig.backend.chat_calls() == 2);
  CHECK(rig.backend.detect_requests()[0].query ==
        "a red block. a blue block. a green block.");
  CHECK(rig.backend.caption_requests()[0].prompt ==
        "Q: what does this red block describe? A: ");

  // The init prompt carries the worked examples, the scene and the objects.
  const auto& init_request = rig.backend.chat_requests()[0];
  REQUIRE(init_request.messages.size() == 2);
  CHECK(init_request.messages[0].role == "system");
  CHECK(init_request.messages[0].content.find("(on ?x - block ?y - block)") !=
        std::string::npos);
  const std::string& user = init_request.messages[1].content;
  CHECK(user.find("Instruction: stack the red block on the blue block") !=
        std::string::npos);
  CHECK(user.find("red_block: a red block on the table") != std::string::npos);
  CHECK(user.find("Instruction: put the red block on the blue block") != std::string::npos);

  // The goal prompt includes the init just estimated.
  const std::string& goal_user = rig.backend.chat_requests()[1].messages[1].content;
  CHECK(goal_user.find("(handempty robot)") != std::string::npos);
}

TEST_CASE("a validation error triggers one analysis and one refinement") {
  Rig rig;
  rig.queue_scene();
  rig.backend.push_chat(
      "(:init (clear red_block) (ontable red_block) (on red_block green_block)"
      " (handempty robot))");
  rig.backend.push_chat("(:goal (and (ontable red_block)))");
  rig.backend.push_chat("The init mentions green_block, which is not in the object list.");
  rig.backend.push_chat(kCorrected);

  auto record = rig.run();

  REQUIRE(record.attempts.size() == 2);
  CHECK(record.success);
  CHECK(record.final_index == 1);
  CHECK(rig.backend.chat_calls() == 4);

  const auto& first = record.attempts[0];
  CHECK(first.parsable);
  REQUIRE(first.validation_errors.size() == 1);
  CHECK(first.validation_errors[0].find("undefined-object in :init") != std::string::npos);
  REQUIRE(first.error.has_value());
  CHECK(first.cot == "The init mentions green_block, which is not in the object list.");

  const auto& second = record.attempts[1];
  CHECK(second.parsable);
  CHECK(second.planner_outcome == "solved");
  CHECK_FALSE(second.error.has_value());

  // The analysis prompt quotes the rejected description and its error and
  // asks the fault-localization question.
  const auto& cot_request = rig.backend.chat_requests()[2];
  const std::string& cot_user = cot_request.messages[1].content;
  CHECK(cot_user.find(first.problem_text) != std::string::npos);
  CHECK(cot_user.find(*first.error) != std::string::npos);
  CHECK(cot_user.find("What part of the PDDL problem do you think is causing this error?") !=
        std::string::npos);

  // The refinement prompt carries the error and the model's analysis.
  const std::string& refine_user = rig.backend.chat_requests()[3].messages[1].content;
  CHECK(refine_user.find("It was rejected with this error:") != std::string::npos);
  CHECK(refine_user.find(*first.error) != std::string::npos);
  CHECK(refine_user.find("An analysis of the error:") != std::string::npos);
  CHECK(refine_user.find(*first.cot) != std::string::npos);
}

TEST_CASE("disabling the analysis step saves its chat turn") {
  Rig rig;
  rig.config.use_cot = false;
  rig.queue_scene();
  rig.backend.push_chat("(:init (on red_block green_block) (handempty robot))");
  rig.backend.push_chat("(:goal (and (ontable red_block)))");
  rig.backend.push_chat(kCorrected);

  auto record = rig.run();

  REQUIRE(record.attempts.size() == 2);
  CHECK(record.success);
  CHECK(rig.backend.chat_calls() == 3);
  CHECK_FALSE(record.attempts[0].cot.has_value());
  const std::string& refine_user = rig.backend.chat_requests()[2].messages[1].content;
  CHECK(refine_user.find("An analysis of the error:") == std::string::npos);
}

TEST_CASE("corrections stop once the budget is spent") {
  Rig rig;
  rig.queue_scene();
  rig.backend.push_chat("I cannot help with that.");  // no (:init ...) block
  rig.backend.push_chat("analysis one");
  rig.backend.push_chat("still nothing useful");
  rig.backend.push_chat("analysis two");
  rig.backend.push_chat("sorry, no");

  auto record = rig.run();

  REQUIRE(record.attempts.size() == 3);  // initial + max_corrections
  CHECK_FALSE(record.success);
  CHECK(record.final_index == 2);
  CHECK_FALSE(record.fatal_error.has_value());
  CHECK(rig.backend.chat_calls() == 5);
  CHECK(record.attempts[0].error ==
        "could not find an (:init ...) block in the model output");
  CHECK(record.attempts[1].error ==
        "could not find a (define (problem ...) ...) form in the model output");
  CHECK_FALSE(record.attempts[2].parsable);
}

TEST_CASE("an unsolvable goal feeds the planner's message back") {
  Rig rig;
  rig.queue_scene();
  rig.backend.push_chat(kGoodInit);
  rig.backend.push_chat("(:goal (and (on red_block blue_block) (on blue_block red_block)))");
  rig.backend.push_chat("The two on goals contradict each other.");
  rig.backend.push_chat(kCorrected);

  auto record = rig.run();

  REQUIRE(record.attempts.size() == 2);
  CHECK(record.success);
  CHECK(record.attempts[0].planner_outcome == "unsolvable");
  REQUIRE(record.attempts[0].error.has_value());
  CHECK(record.attempts[0].error->find("unsolvable: goal") == 0);

  const std::string& refine_user = rig.backend.chat_requests()[3].messages[1].content;
  CHECK(refine_user.find("unsolvable: goal") != std::string::npos);
}

TEST_CASE("whole mode generates the description in one chat turn") {
  Rig rig;
  rig.config.mode = PipelineMode::Whole;
  rig.queue_scene();
  rig.backend.push_chat("```\n" + std::string(kCorrected) + "\n```");

  auto record = rig.run();

  REQUIRE(record.attempts.size() == 1);
  CHECK(record.success);
  CHECK(rig.backend.chat_calls() == 1);
  CHECK(rig.backend.detect_calls() == 1);
  CHECK(rig.backend.caption_calls() == 2);
  CHECK(record.attempts[0].planner_outcome == "solved");

  // The single prompt shows complete example problems.
  const std::string& user = rig.backend.chat_requests()[0].messages[1].content;
  CHECK(user.find("(define (problem ex-stack)") != std::string::npos);
  CHECK(user.find("Instruction: put the red block on the blue block") != std::string::npos);
}

TEST_CASE("an unparsable refinement reuses the last good description") {
  Rig rig;
  rig.queue_scene();
  rig.backend.push_chat("(:init (on red_block green_block) (handempty robot))");
  rig.backend.push_chat("(:goal (and (ontable red_block)))");
  rig.backend.push_chat("analysis of the undefined object");
  rig.backend.push_chat("sorry, here is prose without any code");
  rig.backend.push_chat("analysis of the parse failure");
  rig.backend.push_chat(kCorrected);

  auto record = rig.run();

  REQUIRE(record.attempts.size() == 3);
  CHECK(record.success);
  CHECK(record.final_index == 2);
  CHECK(rig.backend.chat_calls() == 6);
  CHECK(record.attempts[0].parsable);
  CHECK_FALSE(record.attempts[1].parsable);
  CHECK(record.attempts[2].planner_outcome == "solved");

  // The second analysis talks about the first parsable description and folds
  // both failures into one message.
  const std::string& cot_user = rig.backend.chat_requests()[4].messages[1].content;
  CHECK(cot_user.find(record.attempts[0].problem_text) != std::string::npos);
  CHECK(cot_user.find("could not be parsed") != std::string::npos);
  CHECK(cot_user.find("the previous description failed with:") != std::string::npos);
}

TEST_CASE("running out of scripted responses is a fatal backend error") {
  Rig rig;
  rig.queue_scene();  // detections and captions, but no chat responses

  auto record = rig.run();

  CHECK(record.attempts.empty());
  CHECK_FALSE(record.success);
  REQUIRE(record.fatal_error.has_value());
  CHECK(record.fatal_error->find("no chat response queued") != std::string::npos);
}

TEST_CASE("generation records serialize deterministically and round-trip") {
  auto run_once = [] {
    Rig rig;
    rig.queue_scene();
    rig.backend.push_chat(
        "(:init (clear red_block) (ontable red_block) (on red_block green_block)"
        " (handempty robot))");
    rig.backend.push_chat("(:goal (and (ontable red_block)))");
    rig.backend.push_chat("The init mentions an unknown object.");
    rig.backend.push_chat(kCorrected);
    return record_to_json(rig.run());
  };

  const std::string first = run_once();
  const std::string second = run_once();
  CHECK(first == second);
  CHECK(first.back() == '\n');

  GenerationRecord parsed = record_from_json(first);
  CHECK(record_to_json(parsed) == first);
  CHECK(parsed.input.case_id == "case01");
  CHECK(parsed.domain_name == "blocksworld");
  CHECK(parsed.config.mode == PipelineMode::Modular);
  CHECK(parsed.config.k_examples == 3);
  CHECK(parsed.search.algorithm == Algorithm::Gbfs);
  CHECK(parsed.search.timeout.count() == 30000);
  REQUIRE(parsed.attempts.size() == 2);
  CHECK_FALSE(parsed.attempts[0].expansions.has_value());  // rejected before planning
  CHECK(parsed.attempts[1].expansions.has_value());
  CHECK(parsed.success);

  CHECK_THROWS_AS(record_from_json("not json"), Error);
  CHECK_THROWS_AS(record_from_json("{}"), Error);
}
