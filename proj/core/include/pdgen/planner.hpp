#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdgen/pddl.hpp"

namespace pdgen {

enum class Algorithm { Bfs, AStar, Gbfs };
enum class Heuristic { HMax, HAdd };

Algorithm algorithm_from_string(const std::string& text);   // "bfs", "astar", "gbfs"
Heuristic heuristic_from_string(const std::string& text);   // "hmax", "hadd"
std::string_view to_string(Algorithm algorithm);
std::string_view to_string(Heuristic heuristic);

struct SearchConfig {
  Algorithm algorithm = Algorithm::Gbfs;
  Heuristic heuristic = Heuristic::HAdd;
  std::chrono::milliseconds timeout{30'000};
  std::uint64_t max_expansions = 5'000'000;
};

/// Action instance over fact ids. `source` keeps the schema name and argument
/// objects for plan output.
struct GroundedAction {
  GroundAction source;
  std::vector<std::uint32_t> pre;
  std::vector<std::uint32_t> pre_neg;
  std::vector<std::uint32_t> add;
  std::vector<std::uint32_t> del;
};

/// Propositional task produced by ground(). Static predicates (those no
/// action adds or deletes) are evaluated during instantiation and do not
/// become facts, except where the goal mentions them.
struct GroundTask {
  std::vector<Atom> facts;  // fact id -> atom
  std::vector<std::uint32_t> init;
  std::vector<std::uint32_t> goal_pos;
  std::vector<std::uint32_t> goal_neg;
  std::vector<GroundedAction> actions;
};

/// ground()/solve() were handed a problem that fails validation.
class ValidationRequired : public Error {
 public:
  using Error::Error;
};

/// Instantiate every action schema over type-consistent, pairwise-distinct
/// argument tuples, then prune instances whose static preconditions fail in
/// the initial state or that stay inapplicable under delete-relaxation.
/// Goal atoms are registered as facts even when unreachable.
GroundTask ground(const Domain& d, const Problem& p);

enum class PlanOutcome { Solved, Unsolvable, Timeout };

struct SearchStats {
  std::uint64_t expansions = 0;
  std::chrono::milliseconds elapsed{0};
};

struct PlannerResult {
  PlanOutcome outcome = PlanOutcome::Unsolvable;
  Plan plan;  // meaningful when outcome == Solved
  SearchStats statistics;
  bool expansion_capped = false;  // Timeout caused by the expansion budget
  std::chrono::milliseconds timeout_budget{0};
  std::uint64_t expansion_budget = 0;
  std::string goal_text;  // goal literals, sorted, for error rendering
};

PlannerResult solve(const GroundTask& task, const SearchConfig& config = {});
PlannerResult solve(const Domain& d, const Problem& p, const SearchConfig& config = {});

/// Plan step names an action schema the domain does not define.
class UnknownAction : public Error {
 public:
  using Error::Error;
};

/// Result of simulating a plan from the initial state.
struct PlanValidation {
  bool valid = false;
  std::size_t failing_step = 0;  // 0-based; == plan size when the goal is unmet
  std::string unmet;             // the unmet literal, or a description of the defect
  std::string message;
};

PlanValidation validate_plan(const Domain& d, const Problem& p, const Plan& plan);

/// render_planner_error was handed a solved result.
class NotAnError : public Error {
 public:
  using Error::Error;
};

/// Describe a failed planner result for corrective re-prompting, e.g.
/// "unsolvable: goal (on a b) unreachable from initial state".
std::string render_planner_error(const PlannerResult& result);

/// Heuristic value of the initial state, or nullopt when the goal is
/// unreachable under delete-relaxation. Exposed for admissibility checks.
std::optional<int> relaxed_goal_cost(const GroundTask& task, Heuristic heuristic);

}  // namespace pdgen
