#pragma once

// Shared helpers for the test suites. The naive breadth-first planner here is
// an intentionally simple reference implementation over explicit atom sets:
// it never touches the grounder, bitsets or heuristics, so it can serve as an
// independent oracle for plan lengths.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <pdgen/pddl.hpp>

namespace testsupport {

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

class TempDir {
 public:
  TempDir() {
    std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("pdgen-test-" + std::to_string(rng() & 0xffffffff));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

using AtomSet = std::set<pdgen::Atom>;

inline pdgen::Atom bind_atom(const pdgen::Atom& atom,
                             const std::map<pdgen::Name, pdgen::Name>& binding) {
  pdgen::Atom out;
  out.predicate = atom.predicate;
  for (const auto& arg : atom.args) {
    auto it = binding.find(arg);
    out.args.push_back(it != binding.end() ? it->second : arg);
  }
  return out;
}

/// Optimal plan via breadth-first search over explicit states. Returns
/// nullopt when the whole reachable space contains no goal state. Throws when
/// the state limit is hit, so a silently wrong oracle is impossible.
inline std::optional<std::vector<pdgen::GroundAction>> naive_bfs_plan(
    const pdgen::Domain& d, const pdgen::Problem& p, std::size_t state_limit = 200'000) {
  using pdgen::Atom;
  using pdgen::GroundAction;
  using pdgen::Name;

  std::vector<pdgen::TypedObject> objects;
  {
    std::set<Name> seen;
    for (const auto& obj : p.objects) {
      if (seen.insert(obj.name).second) objects.push_back(obj);
    }
  }

  auto satisfied = [](const AtomSet& state, const pdgen::Condition& cond,
                      const std::map<Name, Name>& binding) {
    for (const auto& lit : cond.literals()) {
      const bool holds = state.count(bind_atom(lit.atom, binding)) > 0;
      if (holds == lit.negated) return false;
    }
    return true;
  };
  auto goal_holds = [&](const AtomSet& state) {
    return satisfied(state, p.goal, {});
  };

  AtomSet init(p.init.begin(), p.init.end());
  if (goal_holds(init)) return std::vector<GroundAction>{};

  std::map<AtomSet, std::pair<AtomSet, GroundAction>> parent;
  std::set<AtomSet> visited{init};
  std::queue<AtomSet> open;
  open.push(init);

  while (!open.empty()) {
    AtomSet state = open.front();
    open.pop();
    for (const auto& schema : d.actions) {
      std::vector<Name> tuple(schema.params.size());
      std::map<Name, Name> binding;
      auto try_tuples = [&](auto&& self, std::size_t i) -> std::optional<AtomSet> {
        if (i == schema.params.size()) {
          if (!satisfied(state, schema.precondition, binding)) return std::nullopt;
          AtomSet next = state;
          for (const auto& atom : schema.del) next.erase(bind_atom(atom, binding));
          for (const auto& atom : schema.add) next.insert(bind_atom(atom, binding));
          if (visited.insert(next).second) {
            parent.emplace(next, std::make_pair(state, GroundAction{schema.name, tuple}));
            if (goal_holds(next)) return next;
            if (visited.size() > state_limit) {
              throw std::runtime_error("naive_bfs_plan: state limit exceeded");
            }
            open.push(next);
          }
          return std::nullopt;
        }
        for (const auto& obj : objects) {
          if (!pdgen::is_subtype(d, obj.type, schema.params[i].type)) continue;
          bool used = false;
          for (std::size_t j = 0; j < i; ++j) used = used || tuple[j] == obj.name;
          if (used) continue;
          tuple[i] = obj.name;
          binding[schema.params[i].name] = obj.name;
          if (auto hit = self(self, i + 1)) return hit;
        }
        binding.erase(schema.params[i].name);
        return std::nullopt;
      };
      if (auto goal_state = try_tuples(try_tuples, 0)) {
        std::vector<GroundAction> plan;
        AtomSet cursor = *goal_state;
        while (cursor != init) {
          auto& [prev, action] = parent.at(cursor);
          plan.push_back(action);
          cursor = prev;
        }
        std::reverse(plan.begin(), plan.end());
        return plan;
      }
    }
  }
  return std::nullopt;
}

inline std::optional<std::size_t> naive_optimal_length(const pdgen::Domain& d,
                                                       const pdgen::Problem& p,
                                                       std::size_t state_limit = 200'000) {
  auto plan = naive_bfs_plan(d, p, state_limit);
  if (!plan) return std::nullopt;
  return plan->size();
}

}  // namespace testsupport
