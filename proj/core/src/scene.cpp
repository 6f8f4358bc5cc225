#include "pdgen/scene.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace pdgen {
namespace {

using nlohmann::json;

json box_to_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

BoundingBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw Error("scene json: a box must be an [x, y, w, h] array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid ") + what + " json: " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

SceneAnnotation scene_from_json(const std::string& text) {
  json j = parse_json(text, "scene");
  try {
    SceneAnnotation scene;
    scene.image_ref = j.at("image").get<std::string>();
    scene.width = j.value("width", 0.0);
    scene.height = j.value("height", 0.0);
    for (const auto& dj : j.at("detections")) {
      Detection det;
      det.label = dj.at("label").get<std::string>();
      det.box = box_from_json(dj.at("box"));
      det.score = dj.value("score", 1.0);
      scene.detections.push_back(std::move(det));
    }
    if (j.contains("captions")) {
      for (const auto& [key, value] : j.at("captions").items()) {
        scene.captions[std::stoul(key)] = value.get<std::string>();
      }
    }
    return scene;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid scene json: ") + e.what());
  }
}

std::string scene_to_json(const SceneAnnotation& scene) {
  json j;
  j["image"] = scene.image_ref;
  j["width"] = scene.width;
  j["height"] = scene.height;
  j["detections"] = json::array();
  for (const auto& det : scene.detections) {
    j["detections"].push_back({{"label", det.label}, {"box", box_to_json(det.box)},
                               {"score", det.score}});
  }
  if (!scene.captions.empty()) {
    json captions = json::object();
    for (const auto& [index, text] : scene.captions) captions[std::to_string(index)] = text;
    j["captions"] = std::move(captions);
  }
  return j.dump(2) + "\n";
}

SceneAnnotation load_scene(const std::filesystem::path& path) {
  return scene_from_json(read_file(path));
}

void save_scene(const std::filesystem::path& path, const SceneAnnotation& scene) {
  write_file(path, scene_to_json(scene));
}

NamingRule naming_rule_from_string(const std::string& text) {
  if (text == "none") return NamingRule::None;
  if (text == "number_by_increasing_width") return NamingRule::NumberByIncreasingWidth;
  if (text == "number_left_to_right") return NamingRule::NumberLeftToRight;
  throw Error("unknown naming rule '" + text + "'");
}

std::string_view to_string(NamingRule rule) {
  switch (rule) {
    case NamingRule::None: return "none";
    case NamingRule::NumberByIncreasingWidth: return "number_by_increasing_width";
    case NamingRule::NumberLeftToRight: return "number_left_to_right";
  }
  return "none";
}

DomainKnowledge knowledge_from_json(const std::string& text) {
  json j = parse_json(text, "knowledge");
  try {
    DomainKnowledge k;
    for (const auto& pair : j.at("query_elaborations")) {
      k.query_elaborations.emplace_back(pair.at(0).get<std::string>(),
                                        pair.at(1).get<std::string>());
    }
    for (const auto& [cls, type] : j.at("type_map").items()) {
      k.type_map.emplace(cls, Name(type.get<std::string>()));
    }
    for (const auto& pair : j.value("fixed_objects", json::array())) {
      k.fixed_objects.push_back(
          {Name(pair.at(0).get<std::string>()), Name(pair.at(1).get<std::string>())});
    }
    if (j.contains("naming_rules")) {
      for (const auto& [cls, rule] : j.at("naming_rules").items()) {
        k.naming_rules.emplace(cls, naming_rule_from_string(rule.get<std::string>()));
      }
    }
    for (const auto& id : j.value("example_pool", json::array())) {
      k.example_pool_ids.push_back(id.get<std::string>());
    }
    return k;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid knowledge json: ") + e.what());
  }
}

std::string knowledge_to_json(const DomainKnowledge& knowledge) {
  json j;
  j["query_elaborations"] = json::array();
  for (const auto& [cls, phrase] : knowledge.query_elaborations) {
    j["query_elaborations"].push_back(json::array({cls, phrase}));
  }
  j["type_map"] = json::object();
  for (const auto& [cls, type] : knowledge.type_map) j["type_map"][cls] = type.str();
  j["fixed_objects"] = json::array();
  for (const auto& obj : knowledge.fixed_objects) {
    j["fixed_objects"].push_back(json::array({obj.name.str(), obj.type.str()}));
  }
  j["naming_rules"] = json::object();
  for (const auto& [cls, rule] : knowledge.naming_rules) {
    j["naming_rules"][cls] = std::string(to_string(rule));
  }
  j["example_pool"] = knowledge.example_pool_ids;
  return j.dump(2) + "\n";
}

DomainKnowledge load_knowledge(const std::filesystem::path& path) {
  return knowledge_from_json(read_file(path));
}

std::string build_query(const DomainKnowledge& knowledge) {
  if (knowledge.query_elaborations.empty()) {
    throw EmptyKnowledge("no query elaborations to build a detector query from");
  }
  std::string out;
  for (std::size_t i = 0; i < knowledge.query_elaborations.size(); ++i) {
    if (i) out += ". ";
    out += knowledge.query_elaborations[i].second;
  }
  return out + ".";
}

std::string class_display_name(const std::string& class_name) {
  std::string out = class_name;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::vector<Detection> filter_detections(const std::vector<Detection>& detections,
                                         double score_threshold, double iou_threshold) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score >= score_threshold) candidates.push_back(i);
  }
  // Consider high scores first so a near-duplicate always loses to the best
  // overlapping detection of its label.
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  std::vector<std::size_t> kept;
  for (std::size_t i : candidates) {
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return detections[k].label == detections[i].label &&
             iou(detections[k].box, detections[i].box) > iou_threshold;
    });
    if (!duplicate) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(detections[i]);
  return out;
}

std::vector<ObjectAssignment> assign_objects(const std::vector<Detection>& detections,
                                             const DomainKnowledge& knowledge) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const std::string& label = detections[i].label;
    const bool elaborated =
        std::any_of(knowledge.query_elaborations.begin(), knowledge.query_elaborations.end(),
                    [&](const auto& pair) { return pair.first == label; });
    if (!elaborated) {
      throw UnknownLabel("detection label '" + label + "' has no query elaboration");
    }
    if (!knowledge.type_map.count(label)) {
      throw UnknownLabel("detection label '" + label + "' has no type mapping");
    }
    by_class[label].push_back(i);
  }

  std::vector<ObjectAssignment> out;
  for (const auto& [cls, phrase] : knowledge.query_elaborations) {
    (void)phrase;
    auto it = by_class.find(cls);
    if (it == by_class.end()) continue;
    std::vector<std::size_t>& members = it->second;
    const Name type = knowledge.type_map.at(cls);

    auto rule_it = knowledge.naming_rules.find(cls);
    const NamingRule rule = rule_it == knowledge.naming_rules.end() ? NamingRule::None
                                                                    : rule_it->second;
    if (rule == NamingRule::None) {
      if (members.size() > 1) {
        throw AmbiguousNaming(std::to_string(members.size()) + " detections of class '" + cls +
                              "' but no naming rule to tell them apart");
      }
      out.push_back({{Name(cls), type}, cls, members[0]});
      continue;
    }

    auto geom_key = [&](std::size_t i) {
      const Detection& d = detections[i];
      if (rule == NamingRule::NumberByIncreasingWidth) {
        return std::make_tuple(d.box.w, d.box.x, d.box.y, d.box.h, d.score);
      }
      return std::make_tuple(d.box.x, d.box.y, d.box.w, d.box.h, d.score);
    };
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return geom_key(a) < geom_key(b); });
    for (std::size_t n = 0; n < members.size(); ++n) {
      // Numbered rules always append the index, even for a single member.
      out.push_back({{Name(cls + std::to_string(n + 1)), type}, cls, members[n]});
    }
  }
  return out;
}

std::vector<ObjectAssignment> detections_to_objects(const std::vector<Detection>& detections,
                                                    const DomainKnowledge& knowledge) {
  std::vector<ObjectAssignment> out = assign_objects(detections, knowledge);
  for (const auto& obj : knowledge.fixed_objects) {
    out.push_back({obj, "", std::nullopt});
  }
  return out;
}

}  // namespace pdgen
