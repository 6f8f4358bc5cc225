#include <doctest.h>

#include <pdgen/pddl.hpp>

using namespace pdgen;

namespace {

constexpr const char* kBlocksworld = R"((define (domain blocksworld)
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

constexpr const char* kTinyProblem = R"((define (problem tiny)
  (:domain blocksworld)
  (:objects a b - block robot - robot)
  (:init (ontable b) (on a b) (clear a) (handempty robot))
  (:goal (and (on b a))))
)";

}  // namespace

TEST_SUITE("pddl") {

TEST_CASE("names fold to lowercase and compare case-insensitively") {
  CHECK(Name("Red_Block") == Name("red_block"));
  CHECK(Name("ON").str() == "on");
  CHECK(Name("?X").variable());
  CHECK_FALSE(Name("x").variable());
  CHECK(Name("pick-up").str() == "pick-up");
}

TEST_CASE("names reject malformed identifiers") {
  CHECK_THROWS_AS(Name(""), InvalidName);
  CHECK_THROWS_AS(Name("?"), InvalidName);
  CHECK_THROWS_AS(Name("3blocks"), InvalidName);
  CHECK_THROWS_AS(Name("has space"), InvalidName);
  CHECK_THROWS_AS(Name("-dash"), InvalidName);
}

TEST_CASE("atom and literal rendering") {
  Atom at{Name("at"), {Name("carrot"), Name("counter")}};
  CHECK(at.str() == "(at carrot counter)");
  CHECK(Literal{at, true}.str() == "(not (at carrot counter))");
  CHECK(Atom{Name("handempty"), {}}.str() == "(handempty)");
  CHECK(GroundAction{Name("stack"), {Name("a"), Name("b"), Name("robot")}}.str() ==
        "(stack a b robot)");
  CHECK_FALSE(Atom{Name("on"), {Name("?x"), Name("b")}}.ground());
  CHECK(at.ground());
}

TEST_CASE("condition collapses duplicate literals but keeps order") {
  Condition c;
  c.add({Atom{Name("on"), {Name("a"), Name("b")}}, false});
  c.add({Atom{Name("clear"), {Name("a")}}, false});
  c.add({Atom{Name("on"), {Name("a"), Name("b")}}, false});
  REQUIRE(c.literals().size() == 2);
  CHECK(c.literals()[0].atom.predicate == Name("on"));
  CHECK(c.literals()[1].atom.predicate == Name("clear"));
}

TEST_CASE("blocksworld domain parses with full structure") {
  Domain d = parse_domain(kBlocksworld);
  CHECK(d.name == Name("blocksworld"));
  CHECK(d.requirements == std::vector<std::string>{":strips", ":typing"});
  CHECK(d.predicates.size() == 6);
  CHECK(d.actions.size() == 4);
  CHECK(d.has_type(Name("block")));
  CHECK(d.has_type(Name("robot")));
  CHECK(d.has_type(Name("object")));
  CHECK_FALSE(d.has_type(Name("disk")));

  const PredicateDecl* on = d.find_predicate(Name("on"));
  REQUIRE(on != nullptr);
  CHECK(on->arity() == 2);
  CHECK(on->params[0].type == Name("block"));

  const ActionSchema* pick = d.find_action(Name("pick-up"));
  REQUIRE(pick != nullptr);
  CHECK(pick->params.size() == 2);
  CHECK(pick->precondition.literals().size() == 3);
  CHECK(pick->add.size() == 2);
  CHECK(pick->del.size() == 3);
  CHECK(d.find_action(Name("fly")) == nullptr);
}

TEST_CASE("minimal empty domain parses") {
  Domain d = parse_domain("(define (domain d))");
  CHECK(d.name == Name("d"));
  CHECK(d.types.empty());
  CHECK(d.predicates.empty());
  CHECK(d.actions.empty());
}

TEST_CASE("requirements are sorted and deduplicated") {
  Domain d = parse_domain("(define (domain d) (:requirements :typing :strips :typing))");
  CHECK(d.requirements == std::vector<std::string>{":strips", ":typing"});
}

TEST_CASE("comments are stripped before tokenizing") {
  Domain d = parse_domain("; header comment\n(define (domain d) ; trailing\n(:types a))");
  CHECK(d.has_type(Name("a")));
}

TEST_CASE("unbalanced parentheses report the position") {
  try {
    parse_domain("(define (domain d)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 19);
    CHECK(e.expected() == "')'");
  }
  CHECK_THROWS_AS(parse_domain("(define (domain d)))"), ParseError);
}

TEST_CASE("type hierarchy supports chained supertypes") {
  Domain d = parse_domain("(define (domain d) (:types car - vehicle))");
  CHECK(d.has_type(Name("vehicle")));
  CHECK(is_subtype(d, Name("car"), Name("vehicle")));
  CHECK(is_subtype(d, Name("car"), Name("object")));
  CHECK(is_subtype(d, Name("car"), Name("car")));
  CHECK_FALSE(is_subtype(d, Name("vehicle"), Name("car")));
  CHECK_THROWS_AS(is_subtype(d, Name("boat"), Name("object")), UnknownType);
  CHECK_THROWS_AS(is_subtype(d, Name("car"), Name("boat")), UnknownType);
}

TEST_CASE("type cycles are rejected") {
  CHECK_THROWS_AS(parse_domain("(define (domain d) (:types a - b b - a))"), ParseError);
  CHECK_THROWS_AS(parse_domain("(define (domain d) (:types object - a))"), ParseError);
}

TEST_CASE("unsupported constructs raise UnsupportedFeature") {
  CHECK_THROWS_AS(parse_domain("(define (domain d) (:functions (cost)))"), UnsupportedFeature);
  CHECK_THROWS_AS(parse_domain("(define (domain d) (:constants a - block))"), UnsupportedFeature);
  CHECK_THROWS_AS(
      parse_domain("(define (domain d) (:action a :parameters (?x)"
                   " :precondition (or (p ?x) (q ?x)) :effect (p ?x)))"),
      UnsupportedFeature);
  CHECK_THROWS_AS(
      parse_domain("(define (domain d) (:action a :parameters (?x)"
                   " :effect (when (p ?x) (q ?x))))"),
      UnsupportedFeature);
  CHECK_THROWS_AS(
      parse_problem("(define (problem p) (:domain d) (:goal (forall (?x) (p ?x))))"),
      UnsupportedFeature);
  CHECK_THROWS_AS(
      parse_problem("(define (problem p) (:domain d) (:init (not (p a))) (:goal (and)))"),
      UnsupportedFeature);
  CHECK_THROWS_AS(
      parse_problem("(define (problem p) (:domain d) (:goal (not (and (p a) (q a)))))"),
      UnsupportedFeature);
}

TEST_CASE("action variables must be declared parameters") {
  CHECK_THROWS_AS(
      parse_domain("(define (domain d) (:action a :parameters (?x)"
                   " :precondition (p ?y) :effect (q ?x)))"),
      ParseError);
  CHECK_THROWS_AS(
      parse_domain("(define (domain d) (:action a :parameters (?x ?x) :effect (p ?x)))"),
      ParseError);
}

TEST_CASE("an add effect wins over a delete of the same atom") {
  Domain d = parse_domain(
      "(define (domain d) (:action a :parameters (?x)"
      " :effect (and (p ?x) (not (p ?x)) (not (q ?x)))))");
  const ActionSchema& a = d.actions.at(0);
  REQUIRE(a.add.size() == 1);
  REQUIRE(a.del.size() == 1);
  CHECK(a.del[0].predicate == Name("q"));
}

TEST_CASE("problem parses objects, init and goal") {
  Problem p = parse_problem(kTinyProblem);
  CHECK(p.name == Name("tiny"));
  CHECK(p.domain_name == Name("blocksworld"));
  REQUIRE(p.objects.size() == 3);
  CHECK(p.objects[0].name == Name("a"));
  CHECK(p.objects[0].type == Name("block"));
  CHECK(p.objects[2].type == Name("robot"));
  CHECK(p.init.size() == 4);
  CHECK(std::is_sorted(p.init.begin(), p.init.end()));
  REQUIRE(p.goal.literals().size() == 1);
  CHECK(p.goal.literals()[0].atom.str() == "(on b a)");
}

TEST_CASE("untyped objects default to object") {
  Problem p = parse_problem("(define (problem p) (:domain d) (:objects a b) (:goal (and)))");
  REQUIRE(p.objects.size() == 2);
  CHECK(p.objects[1].type == Name("object"));
}

TEST_CASE("init is stored sorted and deduplicated") {
  Problem p = parse_problem(
      "(define (problem p) (:domain d)"
      " (:init (on b c) (on a b) (on b c)) (:goal (and)))");
  REQUIRE(p.init.size() == 2);
  CHECK(p.init[0].str() == "(on a b)");
  CHECK(p.init[1].str() == "(on b c)");
}

TEST_CASE("goal accepts a bare atom, negation and nested conjunctions") {
  Problem bare = parse_problem("(define (problem p) (:domain d) (:goal (on a b)))");
  CHECK(bare.goal.literals().size() == 1);

  Problem nested = parse_problem(
      "(define (problem p) (:domain d)"
      " (:goal (and (on a b) (and (not (clear a)) (on b c)))))");
  REQUIRE(nested.goal.literals().size() == 3);
  CHECK(nested.goal.literals()[1].negated);
}

TEST_CASE("missing goal or domain reference is a parse error") {
  CHECK_THROWS_AS(parse_problem("(define (problem p) (:domain d))"), ParseError);
  CHECK_THROWS_AS(parse_problem("(define (problem p) (:goal (and)))"), ParseError);
}

TEST_CASE("variables in init survive parsing for the validator to flag") {
  Problem p = parse_problem(
      "(define (problem p) (:domain d) (:init (on ?x b)) (:goal (and)))");
  REQUIRE(p.init.size() == 1);
  CHECK_FALSE(p.init[0].ground());
}

TEST_CASE("flatten_goal sorts and deduplicates") {
  Problem p = parse_problem(
      "(define (problem p) (:domain d)"
      " (:goal (and (on b c) (on a b) (not (on a b)) (on b c))))");
  std::vector<Literal> flat = flatten_goal(p);
  REQUIRE(flat.size() == 3);
  CHECK(std::is_sorted(flat.begin(), flat.end()));
}

TEST_CASE("domain round-trips through the canonical printer") {
  Domain d = parse_domain(kBlocksworld);
  std::string text = print_domain(d);
  Domain again = parse_domain(text);
  CHECK(again == d);
  CHECK(print_domain(again) == text);
}

TEST_CASE("problem round-trips through the canonical printer") {
  Problem p = parse_problem(kTinyProblem);
  std::string text = print_problem(p);
  Problem again = parse_problem(text);
  CHECK(again == p);
  CHECK(print_problem(again) == text);
}

TEST_CASE("canonical problem layout is pinned") {
  Problem p = parse_problem(kTinyProblem);
  CHECK(print_problem(p) ==
        "(define (problem tiny)\n"
        "  (:domain blocksworld)\n"
        "  (:objects\n"
        "    a - block\n"
        "    b - block\n"
        "    robot - robot)\n"
        "  (:init\n"
        "    (clear a)\n"
        "    (handempty robot)\n"
        "    (on a b)\n"
        "    (ontable b))\n"
        "  (:goal (and\n"
        "    (on b a))))\n");
}

TEST_CASE("empty problem sections print as empty forms") {
  Problem p = parse_problem("(define (problem p) (:domain d) (:goal (and)))");
  CHECK(print_problem(p) ==
        "(define (problem p)\n"
        "  (:domain d)\n"
        "  (:objects)\n"
        "  (:init)\n"
        "  (:goal (and)))\n");
}

TEST_CASE("section fragments print standalone") {
  Problem p = parse_problem(kTinyProblem);
  CHECK(print_objects_block(p.objects) ==
        "(:objects\n  a - block\n  b - block\n  robot - robot)");
  CHECK(print_init_block(p.init) ==
        "(:init\n  (clear a)\n  (handempty robot)\n  (on a b)\n  (ontable b))");
  CHECK(print_goal_block(p.goal) == "(:goal (and\n  (on b a)))");
  CHECK(print_objects_block({}) == "(:objects)");
  CHECK(print_init_block({}) == "(:init)");
  CHECK(print_goal_block(Condition{}) == "(:goal (and))");
}

TEST_CASE("mixed-case input folds to one canonical form") {
  Problem upper = parse_problem(
      "(DEFINE (PROBLEM Tiny) (:DOMAIN BlocksWorld)"
      " (:OBJECTS A B - Block Robot - ROBOT)"
      " (:INIT (OnTable B) (ON A B) (Clear A) (HandEmpty Robot))"
      " (:GOAL (AND (On B A))))");
  Problem lower = parse_problem(kTinyProblem);
  CHECK(upper == lower);
  CHECK(print_problem(upper) == print_problem(lower));
}

TEST_CASE("trailing junk after the closing form is rejected") {
  CHECK_THROWS_AS(parse_problem("(define (problem p) (:domain d) (:goal (and))) extra"),
                  ParseError);
}

}  // TEST_SUITE
