#include "pdgen/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <utility>

#include <json.hpp>

namespace pdgen {

PipelineMode pipeline_mode_from_string(const std::string& text) {
  if (text == "modular") return PipelineMode::Modular;
  if (text == "whole") return PipelineMode::Whole;
  throw Error("unknown pipeline mode '" + text + "' (expected modular or whole)");
}

std::string_view to_string(PipelineMode mode) {
  return mode == PipelineMode::Modular ? "modular" : "whole";
}

namespace {

using ojson = nlohmann::ordered_json;

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

ojson opt_json(const std::optional<std::string>& value) {
  return value ? ojson(*value) : ojson(nullptr);
}

ojson opt_json(const std::optional<std::uint64_t>& value) {
  return value ? ojson(*value) : ojson(nullptr);
}

std::optional<std::string> opt_string(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

bool is_delimiter(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')';
}

bool candidate_at(const std::string& text, std::size_t i) {
  static constexpr const char* kHeads[] = {"(define", "(:init", "(:goal", "(and"};
  for (const char* head : kHeads) {
    const std::size_t n = std::strlen(head);
    if (text.compare(i, n, head) != 0) continue;
    if (i + n < text.size() && is_delimiter(text[i + n])) return true;
  }
  return false;
}

std::optional<std::string> balanced_from(const std::string& text, std::size_t start) {
  int depth = 0;
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] == '(') {
      ++depth;
    } else if (text[i] == ')') {
      if (--depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

std::optional<std::string> scan_for_block(const std::string& text) {
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] == '(' && candidate_at(text, i)) {
      if (auto block = balanced_from(text, i)) return block;
    }
  }
  return std::nullopt;
}

std::string_view trimmed_front(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  return std::string_view(text).substr(i);
}

/// Parse a standalone "(:init ...)" block by wrapping it into a skeleton
/// problem, reusing the full problem parser and its error reporting.
std::vector<Atom> parse_init_fragment(const std::string& block) {
  std::string text =
      "(define (problem fragment) (:domain fragment) " + block + " (:goal (and)))";
  return parse_problem(text).init;
}

/// Parse "(:goal ...)" — or a bare condition such as "(and ...)", which
/// models frequently answer with — into a goal condition.
Condition parse_goal_fragment(const std::string& block) {
  std::string form(trimmed_front(block));
  if (form.compare(0, 6, "(:goal") != 0) form = "(:goal " + form + ")";
  std::string text = "(define (problem fragment) (:domain fragment) (:init) " + form + ")";
  return parse_problem(text).goal;
}

/// One line per predicate declaration, for prompt context.
std::string predicates_text(const Domain& domain) {
  std::string out;
  for (const auto& pred : domain.predicates) {
    if (!out.empty()) out += "\n";
    out += "(" + pred.name.str();
    for (const auto& param : pred.params) {
      out += " " + param.name.str() + " - " + param.type.str();
    }
    out += ")";
  }
  return out;
}

std::string objects_block_of(const SceneEstimate& scene) {
  std::vector<TypedObject> objects;
  objects.reserve(scene.assignments.size());
  for (const auto& assignment : scene.assignments) objects.push_back(assignment.object);
  return print_objects_block(objects);
}

/// Caption lines for a worked example. Ground-truth annotations are taken
/// as-is (no score or overlap filtering), so the caption indices of the
/// annotation line up with the detections handed to the naming step.
std::string example_scene_lines(const WorkedExample& example, const DomainKnowledge& knowledge) {
  auto assignments = detections_to_objects(example.annotation.detections, knowledge);
  std::string out;
  for (const auto& assignment : assignments) {
    if (!assignment.detection) continue;
    auto it = example.annotation.captions.find(*assignment.detection);
    if (it == example.annotation.captions.end()) continue;
    if (!out.empty()) out += "\n";
    out += assignment.object.name.str() + ": " + it->second;
  }
  return out;
}

}  // namespace

std::vector<const WorkedExample*> select_examples(const std::vector<WorkedExample>& pool,
                                                  std::size_t k,
                                                  std::uint64_t combination_index,
                                                  const std::string& excluded_id) {
  std::vector<const WorkedExample*> usable;
  usable.reserve(pool.size());
  for (const auto& example : pool) {
    if (example.id != excluded_id) usable.push_back(&example);
  }
  const std::size_t m = usable.size();
  if (k > m) {
    throw Error("example pool has " + std::to_string(m) + " usable cases but " +
                std::to_string(k) + " are requested");
  }
  if (k == 0) return {};

  std::uint64_t rank = combination_index % binomial(m, k);
  std::vector<const WorkedExample*> out;
  out.reserve(k);
  std::size_t next = 0;
  for (std::size_t remaining = k; remaining > 0; --remaining) {
    for (std::size_t e = next;; ++e) {
      const std::uint64_t below = binomial(m - e - 1, remaining - 1);
      if (rank < below) {
        out.push_back(usable[e]);
        next = e + 1;
        break;
      }
      rank -= below;
    }
  }
  return out;
}

std::optional<std::string> extract_pddl_block(const std::string& text) {
  // Prefer fenced code blocks; models usually put the PDDL there and the
  // prose around them can contain stray parentheses.
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find("```", pos);
    if (open == std::string::npos) break;
    std::size_t body = text.find('\n', open);
    if (body == std::string::npos) break;
    ++body;  // skip the fence line with its optional language tag
    const std::size_t close = text.find("```", body);
    if (close == std::string::npos) break;
    if (auto block = scan_for_block(text.substr(body, close - body))) return block;
    pos = close + 3;
  }
  return scan_for_block(text);
}

Problem assemble_problem(const Name& problem_name, const Name& domain_name,
                         const std::vector<ObjectAssignment>& objects,
                         std::vector<Atom> init, Condition goal) {
  Problem p;
  p.name = problem_name;
  p.domain_name = domain_name;
  p.objects.reserve(objects.size());
  for (const auto& assignment : objects) p.objects.push_back(assignment.object);
  std::sort(init.begin(), init.end());
  init.erase(std::unique(init.begin(), init.end()), init.end());
  p.init = std::move(init);
  p.goal = std::move(goal);
  return p;
}

std::string caption_prompt(const std::string& class_name) {
  return "Q: what does this " + class_display_name(class_name) + " describe? A: ";
}

Pipeline::Pipeline(Domain domain, DomainKnowledge knowledge, PromptLibrary prompts,
                   Backend& backend, PipelineConfig config, SearchConfig search)
    : domain_(std::move(domain)),
      knowledge_(std::move(knowledge)),
      prompts_(std::move(prompts)),
      backend_(backend),
      config_(config),
      search_(search) {}

ChatResponse Pipeline::chat(std::vector<ChatMessage> messages) {
  ChatRequest request;
  request.messages = std::move(messages);
  request.temperature = config_.temperature;
  request.max_tokens = config_.max_tokens;
  return backend_.chat(request);
}

SceneEstimate Pipeline::estimate_objects(const GenerationInput& input) {
  DetectionRequest request{input.image_ref, build_query(knowledge_)};
  const auto raw = backend_.detect(request);

  SceneEstimate scene;
  scene.detections = filter_detections(raw, config_.score_threshold, config_.iou_threshold);
  scene.assignments = detections_to_objects(scene.detections, knowledge_);
  for (const auto& assignment : scene.assignments) {
    if (!assignment.detection) continue;  // fixed objects are not in the image
    CaptionRequest caption{input.image_ref, scene.detections[*assignment.detection].box,
                           caption_prompt(assignment.class_name)};
    scene.captions[assignment.object.name.str()] = backend_.caption(caption);
  }
  return scene;
}

std::string Pipeline::scene_text(const SceneEstimate& scene) const {
  std::string out;
  for (const auto& assignment : scene.assignments) {
    auto it = scene.captions.find(assignment.object.name.str());
    if (it == scene.captions.end()) continue;
    if (!out.empty()) out += "\n";
    out += assignment.object.name.str() + ": " + it->second;
  }
  return out;
}

std::string Pipeline::example_vars_text(const WorkedExample& example,
                                        const std::string& tmpl) const {
  return prompts_.render(tmpl, {
      {"instruction", example.instruction},
      {"captions", example_scene_lines(example, knowledge_)},
      {"objects", print_objects_block(example.problem.objects)},
      {"init", print_init_block(example.problem.init)},
      {"goal", print_goal_block(example.problem.goal)},
      {"problem", example.problem_text},
  });
}

std::string Pipeline::examples_text(const std::string& example_template,
                                    const std::vector<const WorkedExample*>& examples) const {
  std::string out;
  for (const WorkedExample* example : examples) {
    if (!out.empty()) out += "\n\n";
    out += example_vars_text(*example, example_template);
  }
  return out;
}

std::string Pipeline::estimate_init(const GenerationInput& input, const SceneEstimate& scene,
                                    const std::vector<const WorkedExample*>& examples) {
  std::string system = prompts_.render("init_system", {{"predicates", predicates_text(domain_)}});
  std::string user = examples_text("init_example", examples);
  if (!user.empty()) user += "\n\n";
  user += prompts_.render("init_query", {
      {"instruction", input.instruction},
      {"captions", scene_text(scene)},
      {"objects", objects_block_of(scene)},
  });
  return chat({{"system", std::move(system)}, {"user", std::move(user)}}).content;
}

std::string Pipeline::estimate_goal(const GenerationInput& input, const SceneEstimate& scene,
                                    const std::vector<const WorkedExample*>& examples,
                                    const std::string& init_block) {
  std::string system = prompts_.render("goal_system", {{"predicates", predicates_text(domain_)}});
  std::string user = examples_text("goal_example", examples);
  if (!user.empty()) user += "\n\n";
  user += prompts_.render("goal_query", {
      {"instruction", input.instruction},
      {"captions", scene_text(scene)},
      {"objects", objects_block_of(scene)},
      {"init", init_block},
  });
  return chat({{"system", std::move(system)}, {"user", std::move(user)}}).content;
}

std::string Pipeline::generate_whole_text(const GenerationInput& input,
                                          const SceneEstimate& scene,
                                          const std::vector<const WorkedExample*>& examples) {
  std::string system = prompts_.render("whole_system", {{"predicates", predicates_text(domain_)}});
  std::string user = examples_text("whole_example", examples);
  if (!user.empty()) user += "\n\n";
  user += prompts_.render("whole_query", {
      {"instruction", input.instruction},
      {"captions", scene_text(scene)},
      {"objects", objects_block_of(scene)},
  });
  return chat({{"system", std::move(system)}, {"user", std::move(user)}}).content;
}

std::string Pipeline::cot_explain(const std::string& problem_text, const std::string& error) {
  std::string system = prompts_.render("refine_system", {});
  std::string user = prompts_.render("cot", {{"problem", problem_text}, {"error", error}});
  return chat({{"system", std::move(system)}, {"user", std::move(user)}}).content;
}

std::string Pipeline::refine(const GenerationInput& input, const SceneEstimate& scene,
                             const std::vector<const WorkedExample*>& examples,
                             const std::string& problem_text, const std::string& error,
                             const std::string& analysis) {
  std::string system = prompts_.render("refine_system", {});
  std::string user = prompts_.render("refine", {
      {"examples", examples_text("refine_example", examples)},
      {"instruction", input.instruction},
      {"captions", scene_text(scene)},
      {"objects", objects_block_of(scene)},
      {"problem", problem_text},
      {"error", error},
      {"analysis", analysis},
  });
  return chat({{"system", std::move(system)}, {"user", std::move(user)}}).content;
}

namespace {

/// Validate and plan a parsed problem, recording outcomes on the attempt.
/// Leaves attempt.error unset exactly when the description passed every
/// check and the planner found a plan.
void check_attempt(Attempt& attempt, const Domain& domain, const Problem& problem,
                   const SearchConfig& search) {
  ValidationReport report = validate(domain, problem);
  if (!report.ok()) {
    for (const auto& issue : report.issues) attempt.validation_errors.push_back(issue.str());
    attempt.error = render_error(report);
    return;
  }
  PlannerResult result = solve(domain, problem, search);
  attempt.expansions = result.statistics.expansions;
  switch (result.outcome) {
    case PlanOutcome::Solved:
      attempt.planner_outcome = "solved";
      for (const auto& step : result.plan.steps) attempt.plan_steps.push_back(step.str());
      break;
    case PlanOutcome::Unsolvable:
      attempt.planner_outcome = "unsolvable";
      attempt.error = render_planner_error(result);
      break;
    case PlanOutcome::Timeout:
      attempt.planner_outcome = "timeout";
      attempt.error = render_planner_error(result);
      break;
  }
}

}  // namespace

GenerationRecord Pipeline::generate(const GenerationInput& input) {
  GenerationRecord record;
  record.input = input;
  record.domain_name = domain_.name.str();
  record.config = config_;
  record.search = search_;

  try {
    SceneEstimate scene = estimate_objects(input);
    const auto examples =
        select_examples(knowledge_.example_pool, config_.k_examples,
                        config_.combination_index + config_.example_selector_seed,
                        input.case_id);

    // An attempt from a full problem description in raw model output.
    const auto attempt_from_text = [&](const std::string& raw) {
      Attempt attempt;
      auto block = extract_pddl_block(raw);
      if (!block) {
        attempt.problem_text = raw;
        attempt.error = "could not find a (define (problem ...) ...) form in the model output";
        return std::make_pair(attempt, std::optional<Problem>());
      }
      try {
        Problem problem = parse_problem(*block);
        attempt.problem_text = print_problem(problem);
        attempt.parsable = true;
        return std::make_pair(attempt, std::optional<Problem>(std::move(problem)));
      } catch (const Error& e) {
        attempt.problem_text = *block;
        attempt.error = std::string("the problem description does not parse: ") + e.what();
        return std::make_pair(attempt, std::optional<Problem>());
      }
    };

    // First attempt for the modular mode: estimate init and goal separately,
    // then assemble around the scene's object list. A failed stage skips the
    // later stages and goes straight to correction.
    const auto modular_first_attempt = [&]() {
      Attempt attempt;
      std::optional<Problem> problem;
      const std::string init_raw = estimate_init(input, scene, examples);
      const auto init_block = extract_pddl_block(init_raw);
      if (!init_block) {
        attempt.problem_text = init_raw;
        attempt.error = "could not find an (:init ...) block in the model output";
        return std::make_pair(attempt, problem);
      }
      std::vector<Atom> init_atoms;
      try {
        init_atoms = parse_init_fragment(*init_block);
      } catch (const Error& e) {
        attempt.problem_text = *init_block;
        attempt.error = std::string("the (:init ...) block does not parse: ") + e.what();
        return std::make_pair(attempt, problem);
      }
      const std::string init_text = print_init_block(init_atoms);

      const std::string goal_raw = estimate_goal(input, scene, examples, init_text);
      const auto goal_block = extract_pddl_block(goal_raw);
      if (!goal_block) {
        attempt.problem_text = goal_raw;
        attempt.error = "could not find a (:goal ...) block in the model output";
        return std::make_pair(attempt, problem);
      }
      Condition goal;
      try {
        goal = parse_goal_fragment(*goal_block);
      } catch (const Error& e) {
        attempt.problem_text = *goal_block;
        attempt.error = std::string("the (:goal ...) block does not parse: ") + e.what();
        return std::make_pair(attempt, problem);
      }

      problem = assemble_problem(Name(input.case_id), domain_.name, scene.assignments,
                                 std::move(init_atoms), std::move(goal));
      attempt.problem_text = print_problem(*problem);
      attempt.parsable = true;
      return std::make_pair(attempt, problem);
    };

    std::optional<std::size_t> last_parsable;
    std::size_t corrections = 0;
    while (true) {
      std::pair<Attempt, std::optional<Problem>> produced;
      if (record.attempts.empty()) {
        produced = config_.mode == PipelineMode::Modular
                       ? modular_first_attempt()
                       : attempt_from_text(generate_whole_text(input, scene, examples));
      } else {
        // Corrective round. When the previous round produced unparsable
        // text, prompt with the last parsable description instead and fold
        // both failures into the error message.
        const Attempt& previous = record.attempts.back();
        std::string prompt_problem = previous.problem_text;
        std::string prompt_error = previous.error.value_or("");
        if (!previous.parsable && last_parsable) {
          const Attempt& good = record.attempts[*last_parsable];
          prompt_problem = good.problem_text;
          prompt_error = "the corrected description could not be parsed: " +
                         previous.error.value_or("") +
                         "\nthe previous description failed with: " + good.error.value_or("");
        }
        std::string analysis;
        if (config_.use_cot) {
          std::string explanation = cot_explain(prompt_problem, prompt_error);
          record.attempts.back().cot = explanation;
          analysis = prompts_.render("refine_explanation", {{"explanation", explanation}});
        }
        produced = attempt_from_text(
            refine(input, scene, examples, prompt_problem, prompt_error, analysis));
      }

      auto& [attempt, problem] = produced;
      if (problem) check_attempt(attempt, domain_, *problem, search_);
      record.attempts.push_back(std::move(attempt));
      if (record.attempts.back().parsable) last_parsable = record.attempts.size() - 1;

      if (!record.attempts.back().error) {
        record.success = true;
        break;
      }
      if (corrections >= config_.max_corrections) break;
      ++corrections;
    }
  } catch (const BackendError& e) {
    record.fatal_error = e.what();
    record.success = false;
  }

  if (!record.attempts.empty()) record.final_index = record.attempts.size() - 1;
  return record;
}

std::string record_to_json(const GenerationRecord& record) {
  ojson j;
  j["case"] = record.input.case_id;
  j["domain"] = record.domain_name;
  j["instruction"] = record.input.instruction;
  j["image"] = record.input.image_ref;
  j["scene"] = record.input.scene_ref;
  j["mode"] = std::string(to_string(record.config.mode));

  ojson config;
  config["k_examples"] = record.config.k_examples;
  config["combination_index"] = record.config.combination_index;
  config["example_selector_seed"] = record.config.example_selector_seed;
  config["max_corrections"] = record.config.max_corrections;
  config["use_cot"] = record.config.use_cot;
  config["score_threshold"] = record.config.score_threshold;
  config["iou_threshold"] = record.config.iou_threshold;
  config["temperature"] = record.config.temperature;
  config["max_tokens"] = record.config.max_tokens;
  config["algorithm"] = std::string(to_string(record.search.algorithm));
  config["heuristic"] = std::string(to_string(record.search.heuristic));
  config["planner_timeout_ms"] = record.search.timeout.count();
  config["max_expansions"] = record.search.max_expansions;
  j["config"] = std::move(config);

  ojson attempts = ojson::array();
  for (const auto& attempt : record.attempts) {
    ojson a;
    a["problem"] = attempt.problem_text;
    a["parsable"] = attempt.parsable;
    a["validation_errors"] = attempt.validation_errors;
    a["planner_outcome"] = opt_json(attempt.planner_outcome);
    a["plan"] = attempt.plan_steps;
    a["expansions"] = opt_json(attempt.expansions);
    a["error"] = opt_json(attempt.error);
    a["cot"] = opt_json(attempt.cot);
    attempts.push_back(std::move(a));
  }
  j["attempts"] = std::move(attempts);
  j["final"] = record.final_index;
  j["success"] = record.success;
  j["fatal_error"] = opt_json(record.fatal_error);
  return j.dump(2) + "\n";
}

GenerationRecord record_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed generation record: ") + e.what());
  }
  try {
    GenerationRecord record;
    record.input.case_id = j.at("case").get<std::string>();
    record.domain_name = j.at("domain").get<std::string>();
    record.input.instruction = j.at("instruction").get<std::string>();
    record.input.image_ref = j.at("image").get<std::string>();
    record.input.scene_ref = j.at("scene").get<std::string>();
    record.config.mode = pipeline_mode_from_string(j.at("mode").get<std::string>());

    const auto& config = j.at("config");
    record.config.k_examples = config.at("k_examples").get<std::size_t>();
    record.config.combination_index = config.at("combination_index").get<std::uint64_t>();
    record.config.example_selector_seed =
        config.at("example_selector_seed").get<std::uint64_t>();
    record.config.max_corrections = config.at("max_corrections").get<std::size_t>();
    record.config.use_cot = config.at("use_cot").get<bool>();
    record.config.score_threshold = config.at("score_threshold").get<double>();
    record.config.iou_threshold = config.at("iou_threshold").get<double>();
    record.config.temperature = config.at("temperature").get<double>();
    record.config.max_tokens = config.at("max_tokens").get<int>();
    record.search.algorithm = algorithm_from_string(config.at("algorithm").get<std::string>());
    record.search.heuristic = heuristic_from_string(config.at("heuristic").get<std::string>());
    record.search.timeout =
        std::chrono::milliseconds(config.at("planner_timeout_ms").get<std::int64_t>());
    record.search.max_expansions = config.at("max_expansions").get<std::uint64_t>();

    for (const auto& a : j.at("attempts")) {
      Attempt attempt;
      attempt.problem_text = a.at("problem").get<std::string>();
      attempt.parsable = a.at("parsable").get<bool>();
      attempt.validation_errors = a.at("validation_errors").get<std::vector<std::string>>();
      attempt.planner_outcome = opt_string(a.at("planner_outcome"));
      attempt.plan_steps = a.at("plan").get<std::vector<std::string>>();
      if (!a.at("expansions").is_null()) {
        attempt.expansions = a.at("expansions").get<std::uint64_t>();
      }
      attempt.error = opt_string(a.at("error"));
      attempt.cot = opt_string(a.at("cot"));
      record.attempts.push_back(std::move(attempt));
    }
    record.final_index = j.at("final").get<std::size_t>();
    record.success = j.at("success").get<bool>();
    record.fatal_error = opt_string(j.at("fatal_error"));
    return record;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed generation record: ") + e.what());
  }
}

}  // namespace pdgen
