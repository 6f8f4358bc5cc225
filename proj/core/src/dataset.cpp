#include "pdgen/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "pdgen/validate.hpp"

namespace pdgen {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw Error("short write to " + path.string());
}

/// Uniform draw from [0, bound). Hand-rolled rejection sampling keeps the
/// stream identical on every standard library, which std::uniform_int_distribution
/// does not guarantee.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % bound;
  for (;;) {
    const std::uint64_t value = rng();
    if (value < limit) return value % bound;
  }
}

template <typename T>
void shuffle_values(std::mt19937_64& rng, std::vector<T>& values) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[uniform_below(rng, i)]);
  }
}

const char* const kBlocksworldDomain = R"((define (domain blocksworld)
  (:requirements :strips :typing)
  (:types block robot - object)
  (:predicates
    (on ?x - block ?y - block)
    (ontable ?x - block)
    (clear ?x - block)
    (handempty ?r - robot)
    (handfull ?r - robot)
    (holding ?x - block))
  (:action pick-up
    :parameters (?x - block ?r - robot)
    :precondition (and (clear ?x) (ontable ?x) (handempty ?r))
    :effect (and (holding ?x) (handfull ?r)
                 (not (clear ?x)) (not (ontable ?x)) (not (handempty ?r))))
  (:action put-down
    :parameters (?x - block ?r - robot)
    :precondition (and (holding ?x) (handfull ?r))
    :effect (and (clear ?x) (ontable ?x) (handempty ?r)
                 (not (holding ?x)) (not (handfull ?r))))
  (:action stack
    :parameters (?x - block ?y - block ?r - robot)
    :precondition (and (holding ?x) (clear ?y) (handfull ?r))
    :effect (and (on ?x ?y) (clear ?x) (handempty ?r)
                 (not (holding ?x)) (not (clear ?y)) (not (handfull ?r))))
  (:action unstack
    :parameters (?x - block ?y - block ?r - robot)
    :precondition (and (on ?x ?y) (clear ?x) (handempty ?r))
    :effect (and (holding ?x) (clear ?y) (handfull ?r)
                 (not (on ?x ?y)) (not (clear ?x)) (not (handempty ?r)))))
)";

const char* const kHanoiDomain = R"((define (domain hanoi)
  (:requirements :strips :typing)
  (:types disk peg - object)
  (:predicates
    (clear ?x - object)
    (on ?d - disk ?x - object)
    (smaller ?big - object ?small - disk))
  (:action move
    :parameters (?d - disk ?from - object ?to - object)
    :precondition (and (on ?d ?from) (clear ?d) (clear ?to) (smaller ?to ?d))
    :effect (and (on ?d ?to) (clear ?from)
                 (not (on ?d ?from)) (not (clear ?to)))))
)";

const char* const kBlockColors[] = {"red",    "blue",   "green", "yellow",
                                    "purple", "orange", "white"};
constexpr std::size_t kBlockColorCount = sizeof(kBlockColors) / sizeof(kBlockColors[0]);

const char* const kDiskColors[] = {"blue", "red", "green", "yellow", "purple", "orange"};
constexpr std::size_t kDiskColorCount = sizeof(kDiskColors) / sizeof(kDiskColors[0]);

const char* const kPegSides[] = {"left", "middle", "right"};
constexpr double kPegCenters[] = {240, 640, 1040};

std::string block_label(std::size_t index) {
  return std::string(kBlockColors[index]) + "_block";
}

/// Towers of block indices, bottom to top, in canonical order (sorted by
/// bottom block). Drawn uniformly from all arrangements: the tower count is
/// weighted by the partition counts, then a random permutation is cut at a
/// random set of k-1 gaps, which hits every unordered k-tower arrangement
/// exactly k! ways.
std::vector<std::vector<std::size_t>> sample_towers(std::mt19937_64& rng, std::size_t n) {
  std::uint64_t rank = uniform_below(rng, blocksworld_state_count(n));
  std::size_t k = 1;
  while (rank >= lah_number(n, k)) {
    rank -= lah_number(n, k);
    ++k;
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle_values(rng, order);

  std::vector<std::size_t> gaps(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) gaps[i] = i + 1;
  shuffle_values(rng, gaps);
  gaps.resize(k - 1);
  std::sort(gaps.begin(), gaps.end());
  gaps.push_back(n);

  std::vector<std::vector<std::size_t>> towers;
  std::size_t start = 0;
  for (const std::size_t end : gaps) {
    towers.emplace_back(order.begin() + start, order.begin() + end);
    start = end;
  }
  std::sort(towers.begin(), towers.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return towers;
}

using OnPair = std::pair<std::size_t, std::size_t>;  // (above, below)

std::set<OnPair> stacking_of(const std::vector<std::vector<std::size_t>>& towers) {
  std::set<OnPair> pairs;
  for (const auto& tower : towers) {
    for (std::size_t level = 1; level < tower.size(); ++level) {
      pairs.insert({tower[level], tower[level - 1]});
    }
  }
  return pairs;
}

}  // namespace

const std::string& blocksworld_domain_text() {
  static const std::string text = kBlocksworldDomain;
  return text;
}

const std::string& hanoi_domain_text() {
  static const std::string text = kHanoiDomain;
  return text;
}

Domain blocksworld_domain() { return parse_domain(blocksworld_domain_text()); }

Domain hanoi_domain() { return parse_domain(hanoi_domain_text()); }

DomainKnowledge blocksworld_knowledge(std::size_t blocks) {
  if (blocks < 1 || blocks > kBlockColorCount) {
    throw Error("blocksworld scenes support 1 to " + std::to_string(kBlockColorCount) +
                " blocks, not " + std::to_string(blocks));
  }
  DomainKnowledge knowledge;
  for (std::size_t i = 0; i < blocks; ++i) {
    knowledge.query_elaborations.emplace_back(block_label(i),
                                              "a " + std::string(kBlockColors[i]) + " block");
    knowledge.type_map[block_label(i)] = Name("block");
  }
  knowledge.fixed_objects.push_back(TypedObject{Name("robot"), Name("robot")});
  return knowledge;
}

DomainKnowledge hanoi_knowledge() {
  DomainKnowledge knowledge;
  knowledge.query_elaborations.emplace_back("disk", "a wooden disk");
  knowledge.query_elaborations.emplace_back("peg", "a vertical peg");
  knowledge.type_map["disk"] = Name("disk");
  knowledge.type_map["peg"] = Name("peg");
  knowledge.naming_rules["disk"] = NamingRule::NumberByIncreasingWidth;
  knowledge.naming_rules["peg"] = NamingRule::NumberLeftToRight;
  return knowledge;
}

std::uint64_t lah_number(std::uint64_t n, std::uint64_t k) {
  if (k == 0 || k > n) return 0;
  unsigned __int128 value = 1;
  for (std::uint64_t i = k + 1; i <= n; ++i) value *= i;  // n! / k!
  // times C(n-1, k-1)
  std::uint64_t choose = 1;
  for (std::uint64_t i = 1; i <= k - 1; ++i) choose = choose * (n - k + i) / i;
  value *= choose;
  if (value > std::numeric_limits<std::uint64_t>::max()) {
    throw Error("tower arrangement count overflows 64 bits");
  }
  return static_cast<std::uint64_t>(value);
}

std::uint64_t blocksworld_state_count(std::uint64_t blocks) {
  if (blocks == 0 || blocks > 12) {
    throw Error("state counting supports 1 to 12 blocks, not " + std::to_string(blocks));
  }
  std::uint64_t total = 0;
  for (std::uint64_t k = 1; k <= blocks; ++k) total += lah_number(blocks, k);
  return total;
}

ProblemCase generate_blocksworld_case(std::size_t blocks, std::uint64_t seed) {
  if (blocks < 2 || blocks > kBlockColorCount) {
    throw Error("blocksworld cases need 2 to " + std::to_string(kBlockColorCount) +
                " blocks, not " + std::to_string(blocks));
  }
  std::mt19937_64 rng(seed);
  const auto towers = sample_towers(rng, blocks);
  const auto init_stacking = stacking_of(towers);

  // Goal: the stacking atoms of a second uniform draw, redrawn until they
  // say something new. Everything-on-the-table goals say nothing in
  // on-atoms, so they are redrawn too.
  std::set<OnPair> goal_stacking;
  do {
    goal_stacking = stacking_of(sample_towers(rng, blocks));
  } while (goal_stacking.empty() || goal_stacking == init_stacking);

  ProblemCase out;
  out.id = "blocksworld-n" + std::to_string(blocks) + "-s" + std::to_string(seed);

  Problem problem;
  problem.name = Name(out.id);
  problem.domain_name = Name("blocksworld");
  for (std::size_t i = 0; i < blocks; ++i) {
    problem.objects.push_back(TypedObject{Name(block_label(i)), Name("block")});
  }
  problem.objects.push_back(TypedObject{Name("robot"), Name("robot")});

  std::vector<Atom> init;
  for (const auto& tower : towers) {
    init.push_back(Atom{Name("ontable"), {Name(block_label(tower.front()))}});
    init.push_back(Atom{Name("clear"), {Name(block_label(tower.back()))}});
    for (std::size_t level = 1; level < tower.size(); ++level) {
      init.push_back(Atom{Name("on"),
                          {Name(block_label(tower[level])), Name(block_label(tower[level - 1]))}});
    }
  }
  init.push_back(Atom{Name("handempty"), {Name("robot")}});
  std::sort(init.begin(), init.end());
  problem.init = std::move(init);

  std::vector<OnPair> goal_pairs(goal_stacking.begin(), goal_stacking.end());
  std::sort(goal_pairs.begin(), goal_pairs.end(), [](const OnPair& a, const OnPair& b) {
    return block_label(a.first) < block_label(b.first) ||
           (block_label(a.first) == block_label(b.first) &&
            block_label(a.second) < block_label(b.second));
  });
  for (const auto& [above, below] : goal_pairs) {
    problem.goal.add(Literal{Atom{Name("on"), {Name(block_label(above)), Name(block_label(below))}}});
  }

  std::string instruction = "stack ";
  for (std::size_t i = 0; i < goal_pairs.size(); ++i) {
    if (i > 0) instruction += " and ";
    instruction += "the " + std::string(kBlockColors[goal_pairs[i].first]) + " block on the " +
                   std::string(kBlockColors[goal_pairs[i].second]) + " block";
  }
  out.instruction = instruction;

  // Scene: one tower every 170 px, blocks 90x60 growing upward from y 600.
  // Towers are placed in bottom-block name order so that the layout does not
  // leak the sampler's internal ordering.
  auto placed = towers;
  std::sort(placed.begin(), placed.end(), [](const auto& a, const auto& b) {
    return block_label(a.front()) < block_label(b.front());
  });
  out.scene.image_ref = out.id + ".png";
  out.scene.width = 1280;
  out.scene.height = 720;
  for (std::size_t t = 0; t < placed.size(); ++t) {
    const auto& tower = placed[t];
    for (std::size_t level = 0; level < tower.size(); ++level) {
      const std::size_t block = tower[level];
      Detection detection;
      detection.label = block_label(block);
      detection.box = BoundingBox{100.0 + 170.0 * static_cast<double>(t),
                                  600.0 - 60.0 * static_cast<double>(level), 90, 60};
      detection.score = 1.0;
      const std::size_t index = out.scene.detections.size();
      out.scene.detections.push_back(detection);

      const std::string color = kBlockColors[block];
      std::string caption;
      if (level == 0 && tower.size() == 1) {
        caption = "a " + color + " block sitting on the table";
      } else if (level == 0) {
        caption = "a " + color + " block on the table under the " +
                  kBlockColors[tower[level + 1]] + " block";
      } else if (level + 1 == tower.size()) {
        caption = "a " + color + " block on top of the " + kBlockColors[tower[level - 1]] +
                  " block";
      } else {
        caption = "a " + color + " block stacked on the " + kBlockColors[tower[level - 1]] +
                  " block";
      }
      out.scene.captions[index] = caption;
    }
  }

  out.problem = std::move(problem);
  out.problem_text = print_problem(out.problem);
  return out;
}

ProblemCase generate_hanoi_case(std::size_t disks, std::uint64_t seed) {
  if (disks < 1) throw Error("hanoi cases need at least one disk");

  // peg_of[d] = peg index of disk d (0-based, disk 0 is the smallest).
  std::vector<std::size_t> peg_of(disks, 0);
  std::size_t target = 2;
  if (seed == 0) {
    // The canonical tower move: everything on the left peg, goal the right.
  } else {
    std::mt19937_64 rng(seed);
    for (auto& peg : peg_of) peg = uniform_below(rng, 3);
    do {
      target = uniform_below(rng, 3);
    } while (std::all_of(peg_of.begin(), peg_of.end(),
                         [&](std::size_t p) { return p == target; }));
  }

  const auto disk_name = [](std::size_t d) { return "disk" + std::to_string(d + 1); };
  const auto peg_name = [](std::size_t p) { return "peg" + std::to_string(p + 1); };

  // stacks[p]: disk indices on peg p, bottom (largest) to top (smallest).
  std::vector<std::vector<std::size_t>> stacks(3);
  for (std::size_t d = disks; d-- > 0;) {
    stacks[peg_of[d]].push_back(d);
  }

  ProblemCase out;
  out.id = "hanoi-n" + std::to_string(disks) + "-s" + std::to_string(seed);

  Problem problem;
  problem.name = Name(out.id);
  problem.domain_name = Name("hanoi");
  for (std::size_t d = 0; d < disks; ++d) {
    problem.objects.push_back(TypedObject{Name(disk_name(d)), Name("disk")});
  }
  for (std::size_t p = 0; p < 3; ++p) {
    problem.objects.push_back(TypedObject{Name(peg_name(p)), Name("peg")});
  }

  std::vector<Atom> init;
  for (std::size_t p = 0; p < 3; ++p) {
    if (stacks[p].empty()) {
      init.push_back(Atom{Name("clear"), {Name(peg_name(p))}});
      continue;
    }
    init.push_back(Atom{Name("on"), {Name(disk_name(stacks[p].front())), Name(peg_name(p))}});
    for (std::size_t level = 1; level < stacks[p].size(); ++level) {
      init.push_back(Atom{Name("on"), {Name(disk_name(stacks[p][level])),
                                       Name(disk_name(stacks[p][level - 1]))}});
    }
    init.push_back(Atom{Name("clear"), {Name(disk_name(stacks[p].back()))}});
  }
  // Size facts, fully enumerated: every disk fits every peg, and every disk
  // fits every larger disk.
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t d = 0; d < disks; ++d) {
      init.push_back(Atom{Name("smaller"), {Name(peg_name(p)), Name(disk_name(d))}});
    }
  }
  for (std::size_t small = 0; small < disks; ++small) {
    for (std::size_t big = small + 1; big < disks; ++big) {
      init.push_back(Atom{Name("smaller"), {Name(disk_name(big)), Name(disk_name(small))}});
    }
  }
  std::sort(init.begin(), init.end());
  problem.init = std::move(init);

  // Goal: the full tower on the target peg.
  problem.goal.add(
      Literal{Atom{Name("on"), {Name(disk_name(disks - 1)), Name(peg_name(target))}}});
  for (std::size_t d = disks - 1; d > 0; --d) {
    problem.goal.add(Literal{Atom{Name("on"), {Name(disk_name(d - 1)), Name(disk_name(d))}}});
  }

  out.instruction = "move all the disks to the " + std::string(kPegSides[target]) + " peg";

  // Scene: three pegs with disks stacked upward from y 580; disk width grows
  // with size so that width-based numbering recovers the disk order.
  out.scene.image_ref = out.id + ".png";
  out.scene.width = 1280;
  out.scene.height = 720;
  for (std::size_t p = 0; p < 3; ++p) {
    Detection peg;
    peg.label = "peg";
    peg.box = BoundingBox{kPegCenters[p] - 10, 200, 20, 380};
    peg.score = 1.0;
    out.scene.captions[out.scene.detections.size()] =
        "the " + std::string(kPegSides[p]) + " peg";
    out.scene.detections.push_back(peg);
  }
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t level = 0; level < stacks[p].size(); ++level) {
      const std::size_t d = stacks[p][level];
      const double width = 30.0 + 14.0 * static_cast<double>(d + 1);
      Detection disk;
      disk.label = "disk";
      disk.box = BoundingBox{kPegCenters[p] - width / 2, 580.0 - 26.0 * static_cast<double>(level),
                             width, 26};
      disk.score = 1.0;
      const std::string color = kDiskColors[d % kDiskColorCount];
      std::string caption;
      if (level == 0) {
        caption = "a " + color + " disk at the bottom of the " + kPegSides[p] + " peg";
      } else {
        caption = "a " + color + " disk lying on a larger " +
                  kDiskColors[stacks[p][level - 1] % kDiskColorCount] + " disk";
      }
      out.scene.captions[out.scene.detections.size()] = caption;
      out.scene.detections.push_back(disk);
    }
  }

  out.problem = std::move(problem);
  out.problem_text = print_problem(out.problem);
  return out;
}

ScaffoldKind scaffold_kind_from_string(const std::string& text) {
  if (text == "blocksworld") return ScaffoldKind::Blocksworld;
  if (text == "hanoi") return ScaffoldKind::Hanoi;
  throw Error("unknown scaffold domain '" + text + "' (expected blocksworld or hanoi)");
}

DomainBundle scaffold_bundle(ScaffoldKind kind, std::size_t size, std::size_t cases,
                             std::uint64_t seed) {
  if (cases == 0) throw Error("a bundle needs at least one case");

  DomainBundle bundle;
  if (kind == ScaffoldKind::Blocksworld) {
    bundle.domain_text = blocksworld_domain_text();
    bundle.knowledge = blocksworld_knowledge(size);
  } else {
    bundle.domain_text = hanoi_domain_text();
    bundle.knowledge = hanoi_knowledge();
  }
  bundle.domain = parse_domain(bundle.domain_text);

  std::size_t width = 2;
  for (std::size_t rest = cases; rest >= 100; rest /= 10) ++width;

  for (std::size_t i = 0; i < cases; ++i) {
    ProblemCase pc = kind == ScaffoldKind::Blocksworld
                         ? generate_blocksworld_case(size, seed + i)
                         : generate_hanoi_case(size, seed + i);
    std::string number = std::to_string(i + 1);
    while (number.size() < width) number.insert(number.begin(), '0');
    pc.id = "case" + number;
    pc.problem.name = Name(pc.id);
    pc.problem_text = print_problem(pc.problem);
    pc.scene.image_ref = pc.id + ".png";
    bundle.cases.push_back(std::move(pc));
  }

  for (const auto& pc : bundle.cases) {
    bundle.knowledge.example_pool_ids.push_back(pc.id);
    WorkedExample example;
    example.id = pc.id;
    example.instruction = pc.instruction;
    example.annotation = pc.scene;
    example.problem = pc.problem;
    example.problem_text = print_problem(pc.problem);
    bundle.knowledge.example_pool.push_back(std::move(example));
  }
  return bundle;
}

namespace {

ProblemCase load_case(const std::filesystem::path& dir, const std::string& id) {
  for (const char* file : {"instruction.txt", "scene.json", "problem.pddl"}) {
    if (!std::filesystem::is_regular_file(dir / file)) {
      throw Error("case '" + id + "' is missing " + file);
    }
  }
  ProblemCase pc;
  pc.id = id;
  pc.instruction = read_file(dir / "instruction.txt");
  if (!pc.instruction.empty() && pc.instruction.back() == '\n') pc.instruction.pop_back();
  try {
    pc.scene = load_scene(dir / "scene.json");
  } catch (const Error& e) {
    throw Error("case '" + id + "': " + e.what());
  }
  pc.problem_text = read_file(dir / "problem.pddl");
  try {
    pc.problem = parse_problem(pc.problem_text);
  } catch (const Error& e) {
    throw Error("case '" + id + "' problem.pddl: " + e.what());
  }
  return pc;
}

}  // namespace

DomainBundle load_bundle(const std::filesystem::path& root) {
  if (!std::filesystem::is_regular_file(root / "domain.pddl")) {
    throw Error("not a domain bundle (missing domain.pddl): " + root.string());
  }
  if (!std::filesystem::is_regular_file(root / "knowledge.json")) {
    throw Error("not a domain bundle (missing knowledge.json): " + root.string());
  }

  DomainBundle bundle;
  bundle.root = root;
  bundle.domain_text = read_file(root / "domain.pddl");
  try {
    bundle.domain = parse_domain(bundle.domain_text);
  } catch (const Error& e) {
    throw Error((root / "domain.pddl").string() + ": " + e.what());
  }
  try {
    bundle.knowledge = knowledge_from_json(read_file(root / "knowledge.json"));
  } catch (const Error& e) {
    throw Error((root / "knowledge.json").string() + ": " + e.what());
  }

  const auto problems = root / "problems";
  if (std::filesystem::is_directory(problems)) {
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(problems)) {
      if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      bundle.cases.push_back(load_case(dir, dir.filename().string()));
    }
  }

  bundle.knowledge.example_pool.clear();
  for (const auto& id : bundle.knowledge.example_pool_ids) {
    const auto dedicated = root / "examples" / id;
    WorkedExample example;
    if (std::filesystem::is_directory(dedicated)) {
      ProblemCase pc = load_case(dedicated, id);
      example.instruction = std::move(pc.instruction);
      example.annotation = std::move(pc.scene);
      example.problem = std::move(pc.problem);
    } else {
      auto it = std::find_if(bundle.cases.begin(), bundle.cases.end(),
                             [&](const ProblemCase& pc) { return pc.id == id; });
      if (it == bundle.cases.end()) {
        throw Error("example pool references unknown case '" + id + "'");
      }
      example.instruction = it->instruction;
      example.annotation = it->scene;
      example.problem = it->problem;
    }
    example.id = id;
    example.problem_text = print_problem(example.problem);
    bundle.knowledge.example_pool.push_back(std::move(example));
  }
  return bundle;
}

void write_bundle(const std::filesystem::path& root, const DomainBundle& bundle) {
  std::filesystem::create_directories(root / "problems");
  write_file(root / "domain.pddl", bundle.domain_text);
  write_file(root / "knowledge.json", knowledge_to_json(bundle.knowledge));
  for (const auto& pc : bundle.cases) {
    const auto dir = root / "problems" / pc.id;
    std::filesystem::create_directories(dir);
    write_file(dir / "instruction.txt", pc.instruction + "\n");
    save_scene(dir / "scene.json", pc.scene);
    write_file(dir / "problem.pddl", pc.problem_text);
  }
}

BundleReport verify_bundle(const DomainBundle& bundle, const SearchConfig& search) {
  BundleReport report;
  const auto add = [&](const std::string& id, std::string message) {
    report.issues.push_back(BundleIssue{id, std::move(message)});
  };

  for (const auto& pc : bundle.cases) {
    // The reference description must itself survive the full toolchain.
    if (auto validation = validate(bundle.domain, pc.problem); !validation.ok()) {
      add(pc.id, "problem fails validation: " + render_error(validation));
    } else {
      PlannerResult result = solve(bundle.domain, pc.problem, search);
      if (result.outcome != PlanOutcome::Solved) {
        add(pc.id, render_planner_error(result));
      } else if (auto check = validate_plan(bundle.domain, pc.problem, result.plan);
                 !check.valid) {
        add(pc.id, "plan fails simulation: " + check.message);
      }
    }

    // The scene must name exactly the problem's objects.
    try {
      auto assignments = detections_to_objects(pc.scene.detections, bundle.knowledge);
      std::map<Name, Name> from_scene, declared;
      for (const auto& assignment : assignments) {
        from_scene.emplace(assignment.object.name, assignment.object.type);
      }
      for (const auto& object : pc.problem.objects) {
        declared.emplace(object.name, object.type);
      }
      if (from_scene != declared) {
        const auto names_of = [](const std::map<Name, Name>& objects) {
          std::string out = "(";
          for (const auto& [name, type] : objects) {
            if (out.size() > 1) out += " ";
            out += name.str() + " - " + type.str();
          }
          return out + ")";
        };
        add(pc.id, "scene objects " + names_of(from_scene) + " do not match problem objects " +
                       names_of(declared));
      }
    } catch (const Error& e) {
      add(pc.id, std::string("scene does not name its objects: ") + e.what());
    }

    for (std::size_t i = 0; i < pc.scene.detections.size(); ++i) {
      if (!pc.scene.captions.count(i)) {
        add(pc.id, "detection " + std::to_string(i) + " ('" + pc.scene.detections[i].label +
                       "') has no caption");
      }
    }
  }
  return report;
}

}  // namespace pdgen
