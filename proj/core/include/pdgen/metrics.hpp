#pragma once

#include <string>
#include <vector>

#include "pdgen/planner.hpp"
#include "pdgen/validate.hpp"

namespace pdgen {

/// One generated problem description paired with its reference.
struct EvalItem {
  std::string case_id;
  std::string generated;     // problem text under evaluation
  std::string ground_truth;  // reference problem text; must parse and validate
};

/// Fraction of the ground truth's object names that the generation declares.
/// Types are ignored; names compare case-insensitively (Name folds case).
double object_recall(const Problem& ground_truth, const Problem& generated);

/// Fraction of the ground truth's init atoms present in the generation.
double init_recall(const Problem& ground_truth, const Problem& generated);

/// Fraction of the ground truth's goal literals (flattened, deduplicated)
/// present in the generation's goal.
double goal_recall(const Problem& ground_truth, const Problem& generated);

struct ItemScores {
  std::string case_id;
  bool syntax = false;        // parses and validates against the domain
  bool plan = false;          // a plan was found and simulates correctly
  bool plan_timeout = false;  // planning failed on budget, not on reachability
  double objects_recall = 0;
  double init_recall = 0;
  double goal_recall = 0;
  double part_score = 0;   // mean of the three recalls
  bool all_parts = false;  // every ground-truth element present in every part
  std::vector<std::string> notes;
};

struct BatchScores {
  std::vector<ItemScores> items;
  double r_syntax = 0;  // fraction of items with syntax == true
  double r_plan = 0;    // fraction with plan == true; never exceeds r_syntax
  double r_part = 0;    // mean part_score
  double r_all = 0;     // fraction with all_parts == true
};

/// Score one generated description. Throws Error when the ground truth
/// itself fails to parse or validate — that is broken reference data, not a
/// bad generation.
ItemScores score_item(const Domain& domain, const EvalItem& item,
                      const SearchConfig& search = {});

/// Score a batch and aggregate. Planning runs only on items that pass the
/// syntax check, so r_plan <= r_syntax holds by construction.
BatchScores evaluate_batch(const Domain& domain, const std::vector<EvalItem>& items,
                           const SearchConfig& search = {});

/// Fixed-width text summary of the four aggregate metrics.
std::string render_table(const BatchScores& scores);

/// Versioned JSON document with aggregates and per-case rows.
std::string scores_to_json(const BatchScores& scores);

}  // namespace pdgen
