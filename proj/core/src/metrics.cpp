#include "pdgen/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

namespace pdgen {
namespace {

std::set<Name> object_names(const Problem& p) {
  std::set<Name> names;
  for (const auto& object : p.objects) names.insert(object.name);
  return names;
}

template <typename Set>
double recall_of(const Set& truth, const Set& generated) {
  if (truth.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& element : truth) hit += generated.count(element);
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::set<Literal> goal_literals(const Problem& p) {
  auto flat = flatten_goal(p);
  return {flat.begin(), flat.end()};
}

}  // namespace

double object_recall(const Problem& ground_truth, const Problem& generated) {
  return recall_of(object_names(ground_truth), object_names(generated));
}

double init_recall(const Problem& ground_truth, const Problem& generated) {
  const std::set<Atom> truth(ground_truth.init.begin(), ground_truth.init.end());
  const std::set<Atom> gen(generated.init.begin(), generated.init.end());
  return recall_of(truth, gen);
}

double goal_recall(const Problem& ground_truth, const Problem& generated) {
  return recall_of(goal_literals(ground_truth), goal_literals(generated));
}

ItemScores score_item(const Domain& domain, const EvalItem& item,
                      const SearchConfig& search) {
  ItemScores scores;
  scores.case_id = item.case_id;

  Problem truth;
  try {
    truth = parse_problem(item.ground_truth);
  } catch (const Error& e) {
    throw Error("ground truth for case '" + item.case_id + "' does not parse: " + e.what());
  }
  if (auto report = validate(domain, truth); !report.ok()) {
    throw Error("ground truth for case '" + item.case_id +
                "' fails validation: " + render_error(report));
  }

  std::optional<Problem> generated;
  try {
    generated = parse_problem(item.generated);
  } catch (const Error& e) {
    scores.notes.push_back(std::string("generated text does not parse: ") + e.what());
  }

  if (generated) {
    if (auto report = validate(domain, *generated); report.ok()) {
      scores.syntax = true;
    } else {
      scores.notes.push_back("generated problem fails validation: " + render_error(report));
    }
  }

  if (scores.syntax) {
    PlannerResult result = solve(domain, *generated, search);
    switch (result.outcome) {
      case PlanOutcome::Solved: {
        PlanValidation check = validate_plan(domain, *generated, result.plan);
        scores.plan = check.valid;
        if (!check.valid) {
          scores.notes.push_back("planner output fails simulation: " + check.message);
        }
        break;
      }
      case PlanOutcome::Timeout:
        scores.plan_timeout = true;
        scores.notes.push_back("planning hit its budget: " + render_planner_error(result));
        break;
      case PlanOutcome::Unsolvable:
        scores.notes.push_back(render_planner_error(result));
        break;
    }
  }

  if (generated) {
    if (truth.objects.empty()) {
      scores.notes.push_back("ground truth declares no objects; object recall scores 1");
    }
    if (truth.init.empty()) {
      scores.notes.push_back("ground truth :init is empty; init recall scores 1");
    }
    if (goal_literals(truth).empty()) {
      scores.notes.push_back("ground truth :goal is empty; goal recall scores 1");
    }
    scores.objects_recall = object_recall(truth, *generated);
    scores.init_recall = init_recall(truth, *generated);
    scores.goal_recall = goal_recall(truth, *generated);
  }
  scores.part_score = (scores.objects_recall + scores.init_recall + scores.goal_recall) / 3.0;
  scores.all_parts = scores.objects_recall == 1.0 && scores.init_recall == 1.0 &&
                     scores.goal_recall == 1.0;
  return scores;
}

BatchScores evaluate_batch(const Domain& domain, const std::vector<EvalItem>& items,
                           const SearchConfig& search) {
  if (items.empty()) throw Error("evaluation needs at least one case");

  BatchScores batch;
  batch.items.reserve(items.size());
  std::size_t syntax = 0, plan = 0, all = 0;
  double part_sum = 0;
  for (const auto& item : items) {
    ItemScores scores = score_item(domain, item, search);
    syntax += scores.syntax;
    plan += scores.plan;
    all += scores.all_parts;
    part_sum += scores.part_score;
    batch.items.push_back(std::move(scores));
  }
  const auto n = static_cast<double>(items.size());
  batch.r_syntax = static_cast<double>(syntax) / n;
  batch.r_plan = static_cast<double>(plan) / n;
  batch.r_part = part_sum / n;
  batch.r_all = static_cast<double>(all) / n;
  return batch;
}

std::string render_table(const BatchScores& scores) {
  char line[64];
  std::snprintf(line, sizeof line, "%-9s %zu\n", "cases", scores.items.size());
  std::string out = line;
  const std::pair<const char*, double> rows[] = {
      {"R_syntax", scores.r_syntax},
      {"R_plan", scores.r_plan},
      {"R_part", scores.r_part},
      {"R_all", scores.r_all},
  };
  for (const auto& [name, value] : rows) {
    std::snprintf(line, sizeof line, "%-9s %.3f\n", name, value);
    out += line;
  }
  return out;
}

std::string scores_to_json(const BatchScores& scores) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  nlohmann::ordered_json metrics;
  metrics["r_syntax"] = scores.r_syntax;
  metrics["r_plan"] = scores.r_plan;
  metrics["r_part"] = scores.r_part;
  metrics["r_all"] = scores.r_all;
  j["metrics"] = std::move(metrics);

  nlohmann::ordered_json cases = nlohmann::ordered_json::array();
  for (const auto& item : scores.items) {
    nlohmann::ordered_json row;
    row["case"] = item.case_id;
    row["syntax"] = item.syntax;
    row["plan"] = item.plan;
    row["plan_timeout"] = item.plan_timeout;
    row["objects_recall"] = item.objects_recall;
    row["init_recall"] = item.init_recall;
    row["goal_recall"] = item.goal_recall;
    row["part_score"] = item.part_score;
    row["all_parts"] = item.all_parts;
    row["notes"] = item.notes;
    cases.push_back(std::move(row));
  }
  j["cases"] = std::move(cases);
  return j.dump(2) + "\n";
}

}  // namespace pdgen
