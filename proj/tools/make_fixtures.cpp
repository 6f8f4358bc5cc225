// Builds the replay fixtures for a bundle by running the generation pipeline
// against a scripted stand-in primed with the bundle's own reference data:
// detections and captions come from each case's scene annotation, chat
// answers from its reference problem. A recording wrapper writes one fixture
// file per response, which is exactly what replay mode serves later.
//
// The scripted answers are correct by construction, so every case generates
// on the first attempt and the fixture set stays minimal.

#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "pdgen/backends.hpp"
#include "pdgen/dataset.hpp"
#include "pdgen/pipeline.hpp"
#include "pdgen/prompts.hpp"
#include "pdgen/scene.hpp"

namespace {

struct Options {
  std::string bundle;
  std::string fixtures;
  std::string prompts;
  std::size_t examples = 3;
  std::uint64_t combination = 0;
  std::uint64_t selector_seed = 0;
};

/// Queue the scripted responses one generation of `pc` will consume.
void prime(pdgen::ScriptedBackend& scripted, const pdgen::ProblemCase& pc,
           const pdgen::DomainKnowledge& knowledge, const pdgen::PipelineConfig& config,
           pdgen::PipelineMode mode) {
  scripted.push_detections(pc.scene.detections);

  // The pipeline captions the filtered detections in assignment order. The
  // reference scenes must survive filtering unchanged or the caption queue
  // would drift out of step.
  const auto filtered = pdgen::filter_detections(pc.scene.detections, config.score_threshold,
                                                 config.iou_threshold);
  if (filtered != pc.scene.detections) {
    throw pdgen::Error("case '" + pc.id +
                       "': scene detections do not survive filtering unchanged");
  }
  for (const auto& assignment : pdgen::detections_to_objects(filtered, knowledge)) {
    if (!assignment.detection) continue;
    const auto it = pc.scene.captions.find(*assignment.detection);
    if (it == pc.scene.captions.end()) {
      throw pdgen::Error("case '" + pc.id + "': detection " +
                         std::to_string(*assignment.detection) + " has no caption");
    }
    scripted.push_caption(it->second);
  }

  if (mode == pdgen::PipelineMode::Modular) {
    scripted.push_chat(pdgen::print_init_block(pc.problem.init));
    scripted.push_chat(pdgen::print_goal_block(pc.problem.goal));
  } else {
    scripted.push_chat(pdgen::print_problem(pc.problem));
  }
}

int run(const Options& options) {
  const pdgen::DomainBundle bundle = pdgen::load_bundle(options.bundle);
  const std::filesystem::path prompts_dir =
      options.prompts.empty() ? bundle.root.parent_path() / "prompts"
                              : std::filesystem::path(options.prompts);
  const pdgen::PromptLibrary prompts = pdgen::PromptLibrary::load_dir(prompts_dir);

  pdgen::BackendConfig backend_config;
  backend_config.mode = pdgen::BackendMode::Record;
  backend_config.fixture_dir = options.fixtures.empty()
                                   ? bundle.root / "fixtures"
                                   : std::filesystem::path(options.fixtures);

  std::size_t fixtures_before = 0;
  if (std::filesystem::is_directory(backend_config.fixture_dir)) {
    for ([[maybe_unused]] const auto& entry :
         std::filesystem::directory_iterator(backend_config.fixture_dir)) {
      ++fixtures_before;
    }
  }

  // Record both generation modes so replay works for either.
  for (const auto mode : {pdgen::PipelineMode::Modular, pdgen::PipelineMode::Whole}) {
    for (const auto& pc : bundle.cases) {
      auto scripted = std::make_unique<pdgen::ScriptedBackend>();
      prime(*scripted, pc, bundle.knowledge, pdgen::PipelineConfig{}, mode);
      pdgen::RecordBackend recorder(std::move(scripted), backend_config);

      pdgen::PipelineConfig config;
      config.mode = mode;
      config.k_examples = options.examples;
      config.combination_index = options.combination;
      config.example_selector_seed = options.selector_seed;

      pdgen::Pipeline pipeline(bundle.domain, bundle.knowledge, prompts, recorder, config);
      pdgen::GenerationInput input;
      input.case_id = pc.id;
      input.instruction = pc.instruction;
      input.image_ref = pc.scene.image_ref;
      input.scene_ref = (bundle.root / "problems" / pc.id / "scene.json").string();

      const pdgen::GenerationRecord record = pipeline.generate(input);
      if (record.fatal_error) {
        throw pdgen::Error("case '" + pc.id + "': " + *record.fatal_error);
      }
      if (!record.success) {
        throw pdgen::Error("case '" + pc.id +
                           "': reference data did not generate cleanly; fixtures would replay "
                           "a failing run");
      }
    }
  }

  std::size_t fixtures_after = 0;
  for ([[maybe_unused]] const auto& entry :
       std::filesystem::directory_iterator(backend_config.fixture_dir)) {
    ++fixtures_after;
  }
  std::cout << "recorded " << (fixtures_after - fixtures_before) << " new fixtures in "
            << backend_config.fixture_dir.string() << " (" << fixtures_after << " total)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Record replay fixtures for a bundle from its reference data"};
  Options options;
  app.add_option("bundle", options.bundle, "Bundle directory")->required();
  app.add_option("--fixtures", options.fixtures,
                 "Fixture directory (default: <bundle>/fixtures)");
  app.add_option("--prompts", options.prompts,
                 "Prompt template directory (default: sibling prompts/)");
  app.add_option("--examples", options.examples, "Worked examples per prompt")
      ->capture_default_str();
  app.add_option("--combination", options.combination, "Example combination index")
      ->capture_default_str();
  app.add_option("--selector-seed", options.selector_seed,
                 "Offset added to the combination index")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  }
  try {
    return run(options);
  } catch (const pdgen::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
