// Command-line front end: validate and plan PDDL files, generate problem
// descriptions from bundles through a model backend, score the results, and
// scaffold procedural bundles.
//
// Exit codes, shared by every subcommand:
//   0  success
//   1  the checked artifact failed (validation issues, generation failure)
//   2  the problem is provably unsolvable
//   3  a budget ran out or the model backend failed
//   4  usage errors, unreadable inputs, broken reference data

#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdgen/backends.hpp"
#include "pdgen/dataset.hpp"
#include "pdgen/metrics.hpp"
#include "pdgen/pipeline.hpp"
#include "pdgen/planner.hpp"
#include "pdgen/prompts.hpp"
#include "pdgen/validate.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitArtifactFailed = 1;
constexpr int kExitUnsolvable = 2;
constexpr int kExitBudgetOrBackend = 3;
constexpr int kExitUsage = 4;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pdgen::Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw pdgen::Error("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw pdgen::Error("short write to " + path.string());
}

/// "30s", "250ms" or a bare number of seconds.
std::chrono::milliseconds parse_duration(const std::string& text) {
  std::size_t digits = 0;
  while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits]))) {
    ++digits;
  }
  const std::string suffix = text.substr(digits);
  if (digits == 0 || (suffix != "" && suffix != "s" && suffix != "ms")) {
    throw pdgen::Error("cannot read duration '" + text + "' (expected e.g. 30s or 250ms)");
  }
  const unsigned long long value = std::stoull(text.substr(0, digits));
  if (suffix == "ms") return std::chrono::milliseconds(value);
  return std::chrono::seconds(value);
}

/// Search options shared by plan, generate and evaluate.
struct SearchOptions {
  std::string algorithm = "gbfs";
  std::string heuristic = "hadd";
  std::string timeout = "30s";
  std::uint64_t max_expansions = 5'000'000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--algorithm", algorithm, "Search algorithm: bfs, astar or gbfs")
        ->capture_default_str();
    cmd->add_option("--heuristic", heuristic, "Heuristic for astar/gbfs: hmax or hadd")
        ->capture_default_str();
    cmd->add_option("--timeout", timeout, "Search time budget, e.g. 30s or 250ms")
        ->capture_default_str();
    cmd->add_option("--max-expansions", max_expansions, "Search expansion budget")
        ->capture_default_str();
  }

  pdgen::SearchConfig resolve() const {
    pdgen::SearchConfig config;
    config.algorithm = pdgen::algorithm_from_string(algorithm);
    config.heuristic = pdgen::heuristic_from_string(heuristic);
    config.timeout = parse_duration(timeout);
    config.max_expansions = max_expansions;
    return config;
  }
};

bool structured_output(const std::string& output) {
  if (output == "structured") return true;
  if (output == "human") return false;
  throw pdgen::Error("unknown output format '" + output + "' (expected human or structured)");
}

// --- validate ---------------------------------------------------------------

struct ValidateOptions {
  std::string domain_file;
  std::string problem_file;
  std::string output = "human";
};

int run_validate(const ValidateOptions& options) {
  const bool structured = structured_output(options.output);
  const std::string domain_text = read_file(options.domain_file);
  pdgen::Domain domain;
  try {
    domain = pdgen::parse_domain(domain_text);
  } catch (const pdgen::Error& e) {
    std::cerr << options.domain_file << ": " << e.what() << "\n";
    return kExitUsage;  // the reference domain must be sound before problems can be judged
  }

  const std::string problem_text = read_file(options.problem_file);
  pdgen::Problem problem;
  try {
    problem = pdgen::parse_problem(problem_text);
  } catch (const pdgen::Error& e) {
    if (structured) {
      nlohmann::ordered_json doc{{"ok", false}, {"parse_error", e.what()}};
      std::cout << doc.dump(2) << "\n";
    } else {
      std::cout << "parse error: " << e.what() << "\n";
    }
    return kExitArtifactFailed;
  }

  const pdgen::ValidationReport report = pdgen::validate(domain, problem);
  if (structured) {
    nlohmann::ordered_json issues = nlohmann::ordered_json::array();
    for (const auto& issue : report.issues) issues.push_back(issue.str());
    nlohmann::ordered_json doc{{"ok", report.ok()}, {"issues", issues}};
    std::cout << doc.dump(2) << "\n";
  } else if (report.ok()) {
    std::cout << "ok\n";
  } else {
    std::cout << pdgen::render_error(report) << "\n";
  }
  return report.ok() ? kExitSuccess : kExitArtifactFailed;
}

// --- plan -------------------------------------------------------------------

struct PlanOptions {
  std::string domain_file;
  std::string problem_file;
  std::string output = "human";
  SearchOptions search;
};

int run_plan(const PlanOptions& options) {
  const bool structured = structured_output(options.output);
  const pdgen::SearchConfig search = options.search.resolve();

  pdgen::Domain domain;
  try {
    domain = pdgen::parse_domain(read_file(options.domain_file));
  } catch (const pdgen::Error& e) {
    std::cerr << options.domain_file << ": " << e.what() << "\n";
    return kExitUsage;
  }
  pdgen::Problem problem;
  try {
    problem = pdgen::parse_problem(read_file(options.problem_file));
  } catch (const pdgen::Error& e) {
    std::cerr << options.problem_file << ": " << e.what() << "\n";
    return kExitArtifactFailed;
  }
  if (const auto report = pdgen::validate(domain, problem); !report.ok()) {
    std::cerr << pdgen::render_error(report) << "\n";
    return kExitArtifactFailed;
  }

  const pdgen::PlannerResult result = pdgen::solve(domain, problem, search);
  if (structured) {
    nlohmann::ordered_json doc;
    doc["outcome"] = result.outcome == pdgen::PlanOutcome::Solved      ? "solved"
                     : result.outcome == pdgen::PlanOutcome::Unsolvable ? "unsolvable"
                                                                        : "timeout";
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const auto& step : result.plan.steps) steps.push_back(step.str());
    doc["plan"] = std::move(steps);
    doc["expansions"] = result.statistics.expansions;
    doc["elapsed_ms"] = result.statistics.elapsed.count();
    if (result.outcome != pdgen::PlanOutcome::Solved) {
      doc["error"] = pdgen::render_planner_error(result);
    }
    std::cout << doc.dump(2) << "\n";
  } else if (result.outcome == pdgen::PlanOutcome::Solved) {
    for (const auto& step : result.plan.steps) std::cout << step.str() << "\n";
    std::cerr << "solved: " << result.plan.steps.size() << " steps, "
              << result.statistics.expansions << " expansions\n";
  } else {
    std::cerr << pdgen::render_planner_error(result) << "\n";
  }

  switch (result.outcome) {
    case pdgen::PlanOutcome::Solved:
      return kExitSuccess;
    case pdgen::PlanOutcome::Unsolvable:
      return kExitUnsolvable;
    case pdgen::PlanOutcome::Timeout:
      return kExitBudgetOrBackend;
  }
  return kExitUsage;
}

// --- generate ---------------------------------------------------------------

struct GenerateOptions {
  std::string bundle;
  std::vector<std::string> cases;
  std::string backend_mode = "replay";
  std::string endpoint;
  std::string fixtures;
  std::string prompts;
  std::string records;
  std::string mode = "modular";
  std::size_t examples = 3;
  std::uint64_t combination = 0;
  std::uint64_t selector_seed = 0;
  std::size_t max_corrections = 2;
  bool no_cot = false;
  double temperature = 0.0;
  int max_tokens = 1024;
  SearchOptions search;
};

std::filesystem::path resolve_prompts_dir(const GenerateOptions& options,
                                          const std::filesystem::path& bundle_root) {
  if (!options.prompts.empty()) return options.prompts;
  for (const auto& candidate :
       {bundle_root / "prompts", bundle_root.parent_path() / "prompts"}) {
    if (std::filesystem::is_directory(candidate)) return candidate;
  }
  throw pdgen::Error("no prompts directory next to " + bundle_root.string() +
                     " (pass --prompts)");
}

std::vector<const pdgen::ProblemCase*> select_cases(const pdgen::DomainBundle& bundle,
                                                    const std::vector<std::string>& wanted) {
  std::vector<const pdgen::ProblemCase*> selected;
  if (wanted.empty()) {
    for (const auto& pc : bundle.cases) selected.push_back(&pc);
    return selected;
  }
  for (const auto& id : wanted) {
    const auto it = std::find_if(bundle.cases.begin(), bundle.cases.end(),
                                 [&](const pdgen::ProblemCase& pc) { return pc.id == id; });
    if (it == bundle.cases.end()) {
      throw pdgen::Error("bundle has no case '" + id + "'");
    }
    selected.push_back(&*it);
  }
  return selected;
}

int run_generate(const GenerateOptions& options) {
  const pdgen::DomainBundle bundle = pdgen::load_bundle(options.bundle);
  const auto selected = select_cases(bundle, options.cases);
  const auto prompts_dir = resolve_prompts_dir(options, bundle.root);
  const pdgen::PromptLibrary prompts = pdgen::PromptLibrary::load_dir(prompts_dir);

  pdgen::BackendConfig backend_config;
  backend_config.mode = pdgen::backend_mode_from_string(options.backend_mode);
  backend_config.endpoint = options.endpoint;
  backend_config.fixture_dir = options.fixtures.empty()
                                   ? bundle.root / "fixtures"
                                   : std::filesystem::path(options.fixtures);
  const auto backend = pdgen::make_backend(backend_config);

  pdgen::PipelineConfig config;
  config.mode = options.mode == "whole" ? pdgen::PipelineMode::Whole
              : options.mode == "modular"
                  ? pdgen::PipelineMode::Modular
                  : throw pdgen::Error("unknown generation mode '" + options.mode +
                                       "' (expected modular or whole)");
  config.k_examples = options.examples;
  config.combination_index = options.combination;
  config.example_selector_seed = options.selector_seed;
  config.max_corrections = options.max_corrections;
  config.use_cot = !options.no_cot;
  config.temperature = options.temperature;
  config.max_tokens = options.max_tokens;

  pdgen::Pipeline pipeline(bundle.domain, bundle.knowledge, prompts, *backend, config,
                           options.search.resolve());

  const std::filesystem::path records_dir =
      options.records.empty() ? bundle.root / "records" : std::filesystem::path(options.records);
  std::filesystem::create_directories(records_dir);

  bool any_failed = false;
  bool any_backend_error = false;
  for (const pdgen::ProblemCase* pc : selected) {
    pdgen::GenerationInput input;
    input.case_id = pc->id;
    input.instruction = pc->instruction;
    input.image_ref = pc->scene.image_ref;
    input.scene_ref = (bundle.root / "problems" / pc->id / "scene.json").string();

    const pdgen::GenerationRecord record = pipeline.generate(input);
    write_text(records_dir / (pc->id + ".json"), pdgen::record_to_json(record));

    if (record.fatal_error) {
      any_backend_error = true;
      std::cout << pc->id << ": backend error: " << *record.fatal_error << "\n";
    } else if (record.success) {
      std::cout << pc->id << ": ok (" << record.attempts.size() << " attempt"
                << (record.attempts.size() == 1 ? "" : "s") << ")\n";
    } else {
      any_failed = true;
      std::cout << pc->id << ": failed after " << record.attempts.size() << " attempt"
                << (record.attempts.size() == 1 ? "" : "s") << "\n";
    }
  }
  if (any_backend_error) return kExitBudgetOrBackend;
  return any_failed ? kExitArtifactFailed : kExitSuccess;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateOptions {
  std::string bundle;
  std::vector<std::string> cases;
  std::string records;
  std::string output = "human";
  std::string scores_file;
  SearchOptions search;
};

int run_evaluate(const EvaluateOptions& options) {
  const bool structured = structured_output(options.output);
  const pdgen::DomainBundle bundle = pdgen::load_bundle(options.bundle);
  const std::filesystem::path records_dir =
      options.records.empty() ? bundle.root / "records" : std::filesystem::path(options.records);

  std::vector<pdgen::EvalItem> items;
  for (const pdgen::ProblemCase* pc : select_cases(bundle, options.cases)) {
    const auto record_file = records_dir / (pc->id + ".json");
    if (!std::filesystem::is_regular_file(record_file)) {
      if (options.cases.empty()) continue;  // sweep mode scores whatever was generated
      throw pdgen::Error("no generation record for case '" + pc->id + "' in " +
                         records_dir.string());
    }
    const pdgen::GenerationRecord record = pdgen::record_from_json(read_file(record_file));
    pdgen::EvalItem item;
    item.case_id = pc->id;
    if (!record.attempts.empty()) {
      item.generated = record.attempts[record.final_index].problem_text;
    }
    item.ground_truth = pc->problem_text;
    items.push_back(std::move(item));
  }
  if (items.empty()) {
    throw pdgen::Error("no generation records found in " + records_dir.string());
  }

  const pdgen::BatchScores scores =
      pdgen::evaluate_batch(bundle.domain, items, options.search.resolve());
  if (structured) {
    std::cout << pdgen::scores_to_json(scores);
  } else {
    std::cout << pdgen::render_table(scores);
  }
  if (!options.scores_file.empty()) {
    write_text(options.scores_file, pdgen::scores_to_json(scores));
  }
  return kExitSuccess;
}

// --- verify -----------------------------------------------------------------

struct VerifyOptions {
  std::string bundle;
  SearchOptions search;
};

int run_verify(const VerifyOptions& options) {
  const pdgen::DomainBundle bundle = pdgen::load_bundle(options.bundle);
  const pdgen::BundleReport report = pdgen::verify_bundle(bundle, options.search.resolve());
  for (const auto& issue : report.issues) {
    std::cout << issue.case_id << ": " << issue.message << "\n";
  }
  if (report.ok()) {
    std::cout << "ok (" << bundle.cases.size() << " case"
              << (bundle.cases.size() == 1 ? "" : "s") << ")\n";
    return kExitSuccess;
  }
  return kExitArtifactFailed;
}

// --- scaffold ---------------------------------------------------------------

struct ScaffoldOptions {
  std::string kind;
  std::string out;
  std::size_t size = 4;
  std::size_t cases = 10;
  std::uint64_t seed = 0;
  bool force = false;
};

int run_scaffold(const ScaffoldOptions& options) {
  const std::filesystem::path out = options.out;
  if (std::filesystem::exists(out / "domain.pddl")) {
    if (!options.force) {
      throw pdgen::Error(out.string() + " already holds a bundle (pass --force to overwrite)");
    }
    // A smaller replacement must not leave stale cases from the old bundle
    // behind, so clear the generated layout before writing.
    std::filesystem::remove_all(out / "problems");
    std::filesystem::remove_all(out / "examples");
  }

  const pdgen::DomainBundle bundle = pdgen::scaffold_bundle(
      pdgen::scaffold_kind_from_string(options.kind), options.size, options.cases, options.seed);
  pdgen::write_bundle(out, bundle);

  const pdgen::BundleReport report = pdgen::verify_bundle(bundle);
  for (const auto& issue : report.issues) {
    std::cerr << issue.case_id << ": " << issue.message << "\n";
  }
  if (!report.ok()) return kExitArtifactFailed;

  std::cout << "wrote " << bundle.cases.size() << " cases to " << out.string() << "\n";
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PDDL problem generation toolchain"};
  app.require_subcommand(1);
  int rc = kExitSuccess;

  ValidateOptions validate_options;
  auto* validate_cmd =
      app.add_subcommand("validate", "Check a problem description against its domain");
  validate_cmd->add_option("domain", validate_options.domain_file, "Domain file")->required();
  validate_cmd->add_option("problem", validate_options.problem_file, "Problem file")->required();
  validate_cmd->add_option("--output", validate_options.output, "Output format: human or structured")
      ->capture_default_str();
  validate_cmd->callback([&] { rc = run_validate(validate_options); });

  PlanOptions plan_options;
  auto* plan_cmd = app.add_subcommand("plan", "Search for a plan and print it");
  plan_cmd->add_option("domain", plan_options.domain_file, "Domain file")->required();
  plan_cmd->add_option("problem", plan_options.problem_file, "Problem file")->required();
  plan_cmd->add_option("--output", plan_options.output, "Output format: human or structured")
      ->capture_default_str();
  plan_options.search.attach(plan_cmd);
  plan_cmd->callback([&] { rc = run_plan(plan_options); });

  GenerateOptions generate_options;
  auto* generate_cmd =
      app.add_subcommand("generate", "Generate problem descriptions for a bundle's cases");
  generate_cmd->add_option("bundle", generate_options.bundle, "Bundle directory")->required();
  generate_cmd->add_option("--case", generate_options.cases, "Only these case ids (repeatable)");
  generate_cmd
      ->add_option("--backend-mode", generate_options.backend_mode,
                   "Backend: live, replay, record or scripted")
      ->capture_default_str();
  generate_cmd->add_option("--endpoint", generate_options.endpoint,
                           "Model server base URL (live/record)");
  generate_cmd->add_option("--fixtures", generate_options.fixtures,
                           "Fixture directory (default: <bundle>/fixtures)");
  generate_cmd->add_option("--prompts", generate_options.prompts,
                           "Prompt template directory (default: <bundle>/prompts or sibling)");
  generate_cmd->add_option("--records", generate_options.records,
                           "Where to write generation records (default: <bundle>/records)");
  generate_cmd->add_option("--mode", generate_options.mode, "Generation mode: modular or whole")
      ->capture_default_str();
  generate_cmd->add_option("--examples", generate_options.examples, "Worked examples per prompt")
      ->capture_default_str();
  generate_cmd
      ->add_option("--combination", generate_options.combination, "Example combination index")
      ->capture_default_str();
  generate_cmd
      ->add_option("--selector-seed", generate_options.selector_seed,
                   "Offset added to the combination index")
      ->capture_default_str();
  generate_cmd
      ->add_option("--max-corrections", generate_options.max_corrections,
                   "Corrective re-prompting rounds")
      ->capture_default_str();
  generate_cmd->add_flag("--no-cot", generate_options.no_cot,
                         "Skip the reasoning step before each correction");
  generate_cmd->add_option("--temperature", generate_options.temperature, "Sampling temperature")
      ->capture_default_str();
  generate_cmd->add_option("--max-tokens", generate_options.max_tokens, "Response token cap")
      ->capture_default_str();
  generate_options.search.attach(generate_cmd);
  generate_cmd->callback([&] { rc = run_generate(generate_options); });

  EvaluateOptions evaluate_options;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Score generation records against a bundle's references");
  evaluate_cmd->add_option("bundle", evaluate_options.bundle, "Bundle directory")->required();
  evaluate_cmd->add_option("--case", evaluate_options.cases, "Only these case ids (repeatable)");
  evaluate_cmd->add_option("--records", evaluate_options.records,
                           "Generation record directory (default: <bundle>/records)");
  evaluate_cmd->add_option("--output", evaluate_options.output, "Output format: human or structured")
      ->capture_default_str();
  evaluate_cmd->add_option("--scores", evaluate_options.scores_file,
                           "Also write the score document to this file");
  evaluate_options.search.attach(evaluate_cmd);
  evaluate_cmd->callback([&] { rc = run_evaluate(evaluate_options); });

  VerifyOptions verify_options;
  auto* verify_cmd =
      app.add_subcommand("verify", "Check a bundle's reference data end to end");
  verify_cmd->add_option("bundle", verify_options.bundle, "Bundle directory")->required();
  verify_options.search.attach(verify_cmd);
  verify_cmd->callback([&] { rc = run_verify(verify_options); });

  ScaffoldOptions scaffold_options;
  auto* scaffold_cmd =
      app.add_subcommand("scaffold", "Write a procedurally generated bundle");
  scaffold_cmd->add_option("kind", scaffold_options.kind, "Bundle kind: blocksworld or hanoi")
      ->required();
  scaffold_cmd->add_option("out", scaffold_options.out, "Output directory")->required();
  scaffold_cmd->add_option("--size", scaffold_options.size, "Blocks or disks per case")
      ->capture_default_str();
  scaffold_cmd->add_option("--cases", scaffold_options.cases, "Number of cases")
      ->capture_default_str();
  scaffold_cmd->add_option("--seed", scaffold_options.seed, "Base random seed")
      ->capture_default_str();
  scaffold_cmd->add_flag("--force", scaffold_options.force, "Overwrite an existing bundle");
  scaffold_cmd->callback([&] { rc = run_scaffold(scaffold_options); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int cli_rc = app.exit(e);
    return cli_rc == 0 ? kExitSuccess : kExitUsage;
  } catch (const pdgen::BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudgetOrBackend;
  } catch (const pdgen::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return rc;
}
