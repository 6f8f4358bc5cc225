#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdgen/pddl.hpp"

namespace pdgen {

struct BoundingBox {
  double x = 0;  // left
  double y = 0;  // top
  double w = 0;
  double h = 0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Intersection-over-union of two boxes; 0 when either is degenerate.
double iou(const BoundingBox& a, const BoundingBox& b);

struct Detection {
  std::string label;  // object class, e.g. "blue_disk"
  BoundingBox box;
  double score = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct SceneAnnotation {
  std::string image_ref;
  double width = 0;
  double height = 0;
  std::vector<Detection> detections;
  std::map<std::size_t, std::string> captions;  // detection index -> caption

  friend bool operator==(const SceneAnnotation&, const SceneAnnotation&) = default;
};

SceneAnnotation scene_from_json(const std::string& text);
std::string scene_to_json(const SceneAnnotation& scene);
SceneAnnotation load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const SceneAnnotation& scene);

/// How objects of one class get their PDDL names when several are present.
enum class NamingRule { None, NumberByIncreasingWidth, NumberLeftToRight };

NamingRule naming_rule_from_string(const std::string& text);
std::string_view to_string(NamingRule rule);

/// A fully worked generation example: instruction, scene and the matching
/// problem, used for in-context prompting.
struct WorkedExample {
  std::string id;
  std::string instruction;
  SceneAnnotation annotation;
  Problem problem;
  std::string problem_text;  // canonical text of `problem`
};

/// Domain-side knowledge that turns raw detections into a PDDL object list.
struct DomainKnowledge {
  // class -> elaborated detector phrase, in prompt order
  std::vector<std::pair<std::string, std::string>> query_elaborations;
  std::map<std::string, Name> type_map;            // class -> PDDL type
  std::vector<TypedObject> fixed_objects;          // always appended, e.g. robots
  std::map<std::string, NamingRule> naming_rules;  // default NamingRule::None
  std::vector<std::string> example_pool_ids;
  std::vector<WorkedExample> example_pool;  // resolved by the bundle loader
};

DomainKnowledge knowledge_from_json(const std::string& text);
std::string knowledge_to_json(const DomainKnowledge& knowledge);
DomainKnowledge load_knowledge(const std::filesystem::path& path);

class EmptyKnowledge : public Error {
 public:
  using Error::Error;
};

/// Detection label with no entry in the knowledge's elaborations or type map.
class UnknownLabel : public Error {
 public:
  using Error::Error;
};

/// Several detections of one class but no rule to tell their names apart.
class AmbiguousNaming : public Error {
 public:
  using Error::Error;
};

/// The open-vocabulary detector query: elaborated phrases joined by ". "
/// with a trailing period. Throws EmptyKnowledge without elaborations.
std::string build_query(const DomainKnowledge& knowledge);

/// Class name rendered for captioning prompts: underscores become spaces.
std::string class_display_name(const std::string& class_name);

struct ObjectAssignment {
  TypedObject object;
  std::string class_name;
  std::optional<std::size_t> detection;  // index into the input detections

  friend bool operator==(const ObjectAssignment&, const ObjectAssignment&) = default;
};

/// Drop low-scoring detections, then collapse same-label near-duplicates
/// (IoU above `iou_threshold`) keeping the highest score. Survivors stay in
/// input order.
std::vector<Detection> filter_detections(const std::vector<Detection>& detections,
                                         double score_threshold, double iou_threshold);

/// Name each detection according to the knowledge. Classes appear in
/// elaboration order; within a class the naming rule fixes the order, so the
/// result does not depend on how the detections were listed.
std::vector<ObjectAssignment> assign_objects(const std::vector<Detection>& detections,
                                             const DomainKnowledge& knowledge);

/// assign_objects plus the knowledge's fixed objects appended at the end.
std::vector<ObjectAssignment> detections_to_objects(const std::vector<Detection>& detections,
                                                    const DomainKnowledge& knowledge);

}  // namespace pdgen
