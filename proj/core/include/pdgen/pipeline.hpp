#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdgen/backends.hpp"
#include "pdgen/planner.hpp"
#include "pdgen/prompts.hpp"
#include "pdgen/scene.hpp"
#include "pdgen/validate.hpp"

namespace pdgen {

enum class PipelineMode { Modular, Whole };

PipelineMode pipeline_mode_from_string(const std::string& text);
std::string_view to_string(PipelineMode mode);

struct PipelineConfig {
  PipelineMode mode = PipelineMode::Modular;
  std::size_t k_examples = 3;
  std::uint64_t combination_index = 0;
  std::uint64_t example_selector_seed = 0;  // added to combination_index
  std::size_t max_corrections = 2;
  bool use_cot = true;
  double score_threshold = 0.3;
  double iou_threshold = 0.9;
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct GenerationInput {
  std::string case_id;
  std::string instruction;
  std::string image_ref;
  std::string scene_ref;  // recorded for reference; detections come from the backend
};

/// One problem description the pipeline produced and checked. Plain data so
/// that records round-trip through JSON byte for byte.
struct Attempt {
  std::string problem_text;  // canonical print when parsable, raw model text otherwise
  bool parsable = false;
  std::vector<std::string> validation_errors;  // rendered, section order
  std::optional<std::string> planner_outcome;  // "solved", "unsolvable", "timeout"
  std::vector<std::string> plan_steps;
  std::optional<std::uint64_t> expansions;
  std::optional<std::string> error;  // message the next correction prompts with
  std::optional<std::string> cot;    // model's analysis of this attempt's error
};

struct GenerationRecord {
  GenerationInput input;
  std::string domain_name;
  PipelineConfig config;
  SearchConfig search;
  std::vector<Attempt> attempts;
  std::size_t final_index = 0;
  bool success = false;
  std::optional<std::string> fatal_error;  // backend failure that aborted the run
};

/// Deterministic serialization: fixed key order, two-space indent, trailing
/// newline, no wall-clock data. Two identical runs produce identical bytes.
std::string record_to_json(const GenerationRecord& record);
GenerationRecord record_from_json(const std::string& text);

/// The k-subset of `pool` (minus the example whose id equals `excluded_id`)
/// at lexicographic position `combination_index mod C(m, k)`. Pointers into
/// `pool`, in pool order.
std::vector<const WorkedExample*> select_examples(const std::vector<WorkedExample>& pool,
                                                  std::size_t k,
                                                  std::uint64_t combination_index,
                                                  const std::string& excluded_id);

/// First plausible PDDL s-expression in model output: a balanced form whose
/// head is (define, (:init, (:goal or (and. Fenced ``` blocks are searched
/// before the surrounding prose.
std::optional<std::string> extract_pddl_block(const std::string& text);

/// Problem struct from scene objects plus estimated init and goal. Init is
/// sorted and deduplicated as parse_problem would leave it.
Problem assemble_problem(const Name& problem_name, const Name& domain_name,
                         const std::vector<ObjectAssignment>& objects,
                         std::vector<Atom> init, Condition goal);

/// The captioning prompt for one object class. The trailing space is part of
/// the prompt: the answer continues the line.
std::string caption_prompt(const std::string& class_name);

/// Scene understanding for one input image: filtered detections, named
/// objects, and a caption per detected object.
struct SceneEstimate {
  std::vector<Detection> detections;  // after score and overlap filtering
  std::vector<ObjectAssignment> assignments;
  std::map<std::string, std::string> captions;  // object name -> caption
};

/// Instruction + scene in, checked problem description out. One generate()
/// call performs detection and captioning once, then up to
/// 1 + max_corrections description attempts, re-prompting with the
/// validator's or planner's error message between attempts.
class Pipeline {
 public:
  Pipeline(Domain domain, DomainKnowledge knowledge, PromptLibrary prompts,
           Backend& backend, PipelineConfig config = {}, SearchConfig search = {});

  GenerationRecord generate(const GenerationInput& input);

  // The individual stages, usable on their own.
  SceneEstimate estimate_objects(const GenerationInput& input);
  std::string scene_text(const SceneEstimate& scene) const;
  std::string estimate_init(const GenerationInput& input, const SceneEstimate& scene,
                            const std::vector<const WorkedExample*>& examples);
  std::string estimate_goal(const GenerationInput& input, const SceneEstimate& scene,
                            const std::vector<const WorkedExample*>& examples,
                            const std::string& init_block);
  std::string generate_whole_text(const GenerationInput& input, const SceneEstimate& scene,
                                  const std::vector<const WorkedExample*>& examples);
  std::string cot_explain(const std::string& problem_text, const std::string& error);
  std::string refine(const GenerationInput& input, const SceneEstimate& scene,
                     const std::vector<const WorkedExample*>& examples,
                     const std::string& problem_text, const std::string& error,
                     const std::string& analysis);

  const Domain& domain() const noexcept { return domain_; }
  const DomainKnowledge& knowledge() const noexcept { return knowledge_; }
  const PipelineConfig& config() const noexcept { return config_; }

 private:
  ChatResponse chat(std::vector<ChatMessage> messages);
  std::string examples_text(const std::string& example_template,
                            const std::vector<const WorkedExample*>& examples) const;
  std::string example_vars_text(const WorkedExample& example, const std::string& tmpl) const;

  Domain domain_;
  DomainKnowledge knowledge_;
  PromptLibrary prompts_;
  Backend& backend_;
  PipelineConfig config_;
  SearchConfig search_;
};

}  // namespace pdgen
