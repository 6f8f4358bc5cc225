#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdgen/planner.hpp"
#include "pdgen/scene.hpp"

namespace pdgen {

/// One evaluation case: what the instructor said, what the camera saw, and
/// the reference problem description.
struct ProblemCase {
  std::string id;
  std::string instruction;
  SceneAnnotation scene;
  Problem problem;
  std::string problem_text;  // file text as shipped
};

/// A domain directory: domain.pddl, knowledge.json and problems/<id>/ with
/// instruction.txt, scene.json and problem.pddl per case. An optional
/// examples/ directory holds worked examples that are not evaluation cases.
struct DomainBundle {
  std::filesystem::path root;
  Domain domain;
  std::string domain_text;
  DomainKnowledge knowledge;  // example_pool resolved against the bundle
  std::vector<ProblemCase> cases;  // sorted by id
};

DomainBundle load_bundle(const std::filesystem::path& root);

/// Writes the bundle layout under `root`. Re-writing the same bundle
/// produces identical bytes.
void write_bundle(const std::filesystem::path& root, const DomainBundle& bundle);

struct BundleIssue {
  std::string case_id;
  std::string message;
};

struct BundleReport {
  std::vector<BundleIssue> issues;
  bool ok() const noexcept { return issues.empty(); }
};

/// Integrity check over every case: the reference problem must validate,
/// the planner must solve it, the plan must simulate, and the scene must
/// name exactly the problem's objects and caption every detection.
BundleReport verify_bundle(const DomainBundle& bundle, const SearchConfig& search = {});

// Built-in domains for procedural data.
const std::string& blocksworld_domain_text();
const std::string& hanoi_domain_text();
Domain blocksworld_domain();
Domain hanoi_domain();

/// Detector knowledge for scenes with `blocks` color-named blocks.
DomainKnowledge blocksworld_knowledge(std::size_t blocks);

/// Detector knowledge for disk-and-peg scenes. Disks are numbered by
/// increasing width (disk1 is the smallest), pegs left to right.
DomainKnowledge hanoi_knowledge();

/// Partitions of n distinct blocks into k unordered towers; the tower
/// contents are ordered bottom to top.
std::uint64_t lah_number(std::uint64_t n, std::uint64_t k);

/// Number of distinct blocksworld states with `blocks` blocks (towers are
/// interchangeable, so this is the sum of lah_number over all tower counts).
std::uint64_t blocksworld_state_count(std::uint64_t blocks);

/// A random solvable case: the initial state is drawn uniformly from all
/// states, the goal keeps only the stacking atoms of a second draw and is
/// redrawn until it is non-empty and differs from the initial stacking.
/// 1 <= blocks <= 7 (the color palette bounds the object count).
ProblemCase generate_blocksworld_case(std::size_t blocks, std::uint64_t seed);

/// A random legal disk arrangement with the goal of rebuilding the full
/// tower on one peg. seed == 0 is the canonical tower move: everything
/// starts on peg1 and must reach peg3.
ProblemCase generate_hanoi_case(std::size_t disks, std::uint64_t seed);

enum class ScaffoldKind { Blocksworld, Hanoi };

ScaffoldKind scaffold_kind_from_string(const std::string& text);

/// A complete bundle of `cases` generated cases (seed, seed+1, ...), with
/// every case in the example pool. Deterministic in its arguments.
DomainBundle scaffold_bundle(ScaffoldKind kind, std::size_t size, std::size_t cases,
                             std::uint64_t seed);

}  // namespace pdgen
