#include "pdgen/planner.hpp"

#include <algorithm>
#include <climits>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "pdgen/validate.hpp"

namespace pdgen {

Algorithm algorithm_from_string(const std::string& text) {
  if (text == "bfs") return Algorithm::Bfs;
  if (text == "astar") return Algorithm::AStar;
  if (text == "gbfs") return Algorithm::Gbfs;
  throw Error("unknown search algorithm '" + text + "' (expected bfs, astar, or gbfs)");
}

Heuristic heuristic_from_string(const std::string& text) {
  if (text == "hmax") return Heuristic::HMax;
  if (text == "hadd") return Heuristic::HAdd;
  throw Error("unknown heuristic '" + text + "' (expected hmax or hadd)");
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Bfs: return "bfs";
    case Algorithm::AStar: return "astar";
    case Algorithm::Gbfs: return "gbfs";
  }
  return "gbfs";
}

std::string_view to_string(Heuristic heuristic) {
  switch (heuristic) {
    case Heuristic::HMax: return "hmax";
    case Heuristic::HAdd: return "hadd";
  }
  return "hadd";
}

namespace {

using Clock = std::chrono::steady_clock;
using State = std::vector<std::uint64_t>;

constexpr std::uint32_t kNoNode = UINT32_MAX;
constexpr int kInf = INT_MAX / 4;

bool bit(const State& s, std::uint32_t f) { return (s[f >> 6] >> (f & 63)) & 1; }
void set_bit(State& s, std::uint32_t f) { s[f >> 6] |= std::uint64_t(1) << (f & 63); }
void clear_bit(State& s, std::uint32_t f) { s[f >> 6] &= ~(std::uint64_t(1) << (f & 63)); }

struct StateHash {
  std::size_t operator()(const State& s) const noexcept {
    std::size_t h = 14695981039346656037ull;
    for (std::uint64_t w : s) {
      h ^= w;
      h *= 1099511628211ull;
    }
    return h;
  }
};

Atom substitute(const Atom& atom, const std::map<Name, Name>& binding) {
  Atom out;
  out.predicate = atom.predicate;
  out.args.reserve(atom.args.size());
  for (const auto& arg : atom.args) {
    auto it = binding.find(arg);
    out.args.push_back(it != binding.end() ? it->second : arg);
  }
  return out;
}

struct PendingInstance {
  GroundAction source;
  std::vector<Atom> pre;
  std::vector<Atom> pre_neg;
  std::vector<Atom> add;
  std::vector<Atom> del;
};

class FactRegistry {
 public:
  std::uint32_t intern(const Atom& atom) {
    auto [it, fresh] = index_.emplace(atom, static_cast<std::uint32_t>(atoms_.size()));
    if (fresh) atoms_.push_back(atom);
    return it->second;
  }

  const std::uint32_t* find(const Atom& atom) const {
    auto it = index_.find(atom);
    return it == index_.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return atoms_.size(); }
  std::vector<Atom> take_atoms() { return std::move(atoms_); }

 private:
  std::map<Atom, std::uint32_t> index_;
  std::vector<Atom> atoms_;
};

// Relaxed-reachability cost evaluator (Dijkstra over facts, unit costs).
class HeuristicEval {
 public:
  HeuristicEval(const GroundTask& task, Heuristic mode) : task_(task), mode_(mode) {
    consumers_.resize(task.facts.size());
    for (std::size_t ai = 0; ai < task.actions.size(); ++ai) {
      for (std::uint32_t f : task.actions[ai].pre) {
        consumers_[f].push_back(static_cast<std::uint32_t>(ai));
      }
    }
  }

  std::optional<int> operator()(const State& state) {
    const std::size_t nfacts = task_.facts.size();
    cost_.assign(nfacts, kInf);
    remaining_.resize(task_.actions.size());
    accum_.assign(task_.actions.size(), 0);

    std::priority_queue<std::pair<int, std::uint32_t>, std::vector<std::pair<int, std::uint32_t>>,
                        std::greater<>>
        queue;
    auto relax = [&](std::uint32_t f, int c) {
      if (c < cost_[f]) {
        cost_[f] = c;
        queue.emplace(c, f);
      }
    };
    for (std::size_t ai = 0; ai < task_.actions.size(); ++ai) {
      remaining_[ai] = static_cast<std::uint32_t>(task_.actions[ai].pre.size());
      if (remaining_[ai] == 0) {
        for (std::uint32_t f : task_.actions[ai].add) relax(f, 1);
      }
    }
    for (std::uint32_t f = 0; f < nfacts; ++f) {
      if (bit(state, f)) relax(f, 0);
    }
    while (!queue.empty()) {
      auto [c, f] = queue.top();
      queue.pop();
      if (c > cost_[f]) continue;
      for (std::uint32_t ai : consumers_[f]) {
        if (mode_ == Heuristic::HAdd) {
          accum_[ai] += c;
        } else {
          accum_[ai] = std::max(accum_[ai], c);
        }
        if (--remaining_[ai] == 0) {
          const int acost = 1 + accum_[ai];
          for (std::uint32_t g : task_.actions[ai].add) relax(g, acost);
        }
      }
    }

    int total = 0;
    for (std::uint32_t f : task_.goal_pos) {
      if (cost_[f] >= kInf) return std::nullopt;
      if (mode_ == Heuristic::HAdd) {
        total += cost_[f];
      } else {
        total = std::max(total, cost_[f]);
      }
    }
    return total;
  }

 private:
  const GroundTask& task_;
  Heuristic mode_;
  std::vector<std::vector<std::uint32_t>> consumers_;
  std::vector<int> cost_;
  std::vector<std::uint32_t> remaining_;
  std::vector<int> accum_;
};

bool applicable(const State& s, const GroundedAction& a) {
  for (std::uint32_t f : a.pre) {
    if (!bit(s, f)) return false;
  }
  for (std::uint32_t f : a.pre_neg) {
    if (bit(s, f)) return false;
  }
  return true;
}

State apply(const State& s, const GroundedAction& a) {
  State next = s;
  for (std::uint32_t f : a.del) clear_bit(next, f);
  for (std::uint32_t f : a.add) set_bit(next, f);
  return next;
}

std::string goal_text_of(const GroundTask& task) {
  std::vector<std::string> parts;
  for (std::uint32_t f : task.goal_pos) parts.push_back(task.facts[f].str());
  for (std::uint32_t f : task.goal_neg) parts.push_back("(not " + task.facts[f].str() + ")");
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ' ';
    out += parts[i];
  }
  return out;
}

// Node store shared by all search algorithms. States live as map keys;
// element addresses in unordered_map are stable, so nodes hold pointers.
struct NodeStore {
  std::unordered_map<State, std::uint32_t, StateHash> index;
  std::vector<const State*> state_of;
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> via;

  std::pair<std::uint32_t, bool> intern(State s, std::uint32_t from, std::uint32_t action) {
    auto [it, fresh] = index.try_emplace(std::move(s), static_cast<std::uint32_t>(state_of.size()));
    if (fresh) {
      state_of.push_back(&it->first);
      parent.push_back(from);
      via.push_back(action);
    }
    return {it->second, fresh};
  }
};

Plan extract_plan(const GroundTask& task, const NodeStore& nodes, std::uint32_t node) {
  Plan plan;
  while (nodes.parent[node] != kNoNode) {
    plan.steps.push_back(task.actions[nodes.via[node]].source);
    node = nodes.parent[node];
  }
  std::reverse(plan.steps.begin(), plan.steps.end());
  return plan;
}

}  // namespace

GroundTask ground(const Domain& d, const Problem& p) {
  ValidationReport report = validate(d, p);
  if (!report.ok()) {
    throw ValidationRequired("problem fails validation:\n" + render_error(report));
  }

  std::set<Name> dynamic_preds;
  for (const auto& action : d.actions) {
    for (const auto& atom : action.add) dynamic_preds.insert(atom.predicate);
    for (const auto& atom : action.del) dynamic_preds.insert(atom.predicate);
  }
  auto is_static = [&](const Name& pred) { return !dynamic_preds.count(pred); };

  const std::set<Atom> init_set(p.init.begin(), p.init.end());

  std::vector<TypedObject> objects;
  {
    std::set<Name> seen;
    for (const auto& obj : p.objects) {
      if (seen.insert(obj.name).second) objects.push_back(obj);
    }
  }

  // Enumerate type-consistent instances over pairwise-distinct objects,
  // discharging static preconditions against the initial state.
  std::vector<PendingInstance> pending;
  for (const auto& schema : d.actions) {
    std::vector<std::vector<Name>> candidates(schema.params.size());
    for (std::size_t i = 0; i < schema.params.size(); ++i) {
      for (const auto& obj : objects) {
        if (is_subtype(d, obj.type, schema.params[i].type)) candidates[i].push_back(obj.name);
      }
    }
    std::vector<Name> tuple(schema.params.size());
    std::map<Name, Name> binding;

    auto emit = [&]() {
      PendingInstance inst;
      inst.source = GroundAction{schema.name, tuple};
      for (const auto& lit : schema.precondition.literals()) {
        Atom atom = substitute(lit.atom, binding);
        if (is_static(atom.predicate)) {
          const bool holds = init_set.count(atom) > 0;
          if (holds == lit.negated) return;  // static precondition fails: drop
        } else {
          (lit.negated ? inst.pre_neg : inst.pre).push_back(std::move(atom));
        }
      }
      for (const auto& atom : schema.add) inst.add.push_back(substitute(atom, binding));
      for (const auto& atom : schema.del) inst.del.push_back(substitute(atom, binding));
      pending.push_back(std::move(inst));
    };

    auto enumerate = [&](auto&& self, std::size_t i) -> void {
      if (i == schema.params.size()) {
        emit();
        return;
      }
      for (const auto& obj : candidates[i]) {
        if (std::find(tuple.begin(), tuple.begin() + i, obj) != tuple.begin() + i) continue;
        tuple[i] = obj;
        binding[schema.params[i].name] = obj;
        self(self, i + 1);
      }
      binding.erase(schema.params[i].name);
    };
    enumerate(enumerate, 0);
  }

  // Fact ids: dynamic init atoms first (already sorted), then facts in
  // relaxed-exploration order, then goal atoms nothing reaches.
  FactRegistry registry;
  for (const auto& atom : p.init) {
    if (!is_static(atom.predicate)) registry.intern(atom);
  }
  std::vector<bool> reached(registry.size(), true);
  std::vector<bool> kept(pending.size(), false);

  auto atom_reached = [&](const Atom& atom) {
    const std::uint32_t* id = registry.find(atom);
    return id && reached[*id];
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (kept[i]) continue;
      if (!std::all_of(pending[i].pre.begin(), pending[i].pre.end(), atom_reached)) continue;
      kept[i] = true;
      changed = true;
      for (const auto& atom : pending[i].add) {
        std::uint32_t id = registry.intern(atom);
        if (id >= reached.size()) reached.resize(id + 1, false);
        reached[id] = true;
      }
    }
  }

  GroundTask task;
  const std::vector<Literal> goal = flatten_goal(p);
  for (const auto& lit : goal) {
    std::uint32_t id = registry.intern(lit.atom);
    if (id >= reached.size()) reached.resize(id + 1, false);
    (lit.negated ? task.goal_neg : task.goal_pos).push_back(id);
  }

  task.facts = registry.take_atoms();
  for (std::uint32_t id = 0; id < task.facts.size(); ++id) {
    if (init_set.count(task.facts[id])) task.init.push_back(id);
  }

  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (!kept[i]) continue;
    GroundedAction ga;
    ga.source = std::move(pending[i].source);
    for (const auto& atom : pending[i].pre) ga.pre.push_back(*registry.find(atom));
    for (const auto& atom : pending[i].pre_neg) {
      // A fact the relaxation never reaches can never be true, so a negative
      // precondition on it always holds.
      const std::uint32_t* id = registry.find(atom);
      if (id && reached[*id]) ga.pre_neg.push_back(*id);
    }
    for (const auto& atom : pending[i].add) ga.add.push_back(*registry.find(atom));
    for (const auto& atom : pending[i].del) {
      const std::uint32_t* id = registry.find(atom);
      if (id && reached[*id]) ga.del.push_back(*id);
    }
    // Distinct schema atoms can substitute to the same fact; keep ids unique
    // so the heuristic's precondition counters stay correct.
    for (auto* ids : {&ga.pre, &ga.pre_neg, &ga.add, &ga.del}) {
      std::sort(ids->begin(), ids->end());
      ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
    }
    task.actions.push_back(std::move(ga));
  }
  return task;
}

PlannerResult solve(const GroundTask& task, const SearchConfig& config) {
  PlannerResult result;
  result.timeout_budget = config.timeout;
  result.expansion_budget = config.max_expansions;
  result.goal_text = goal_text_of(task);

  const auto start = Clock::now();
  auto finish = [&](PlanOutcome outcome) {
    result.outcome = outcome;
    result.statistics.elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
    return result;
  };

  const std::size_t words = (task.facts.size() + 63) / 64;
  State init(std::max<std::size_t>(words, 1), 0);
  for (std::uint32_t f : task.init) set_bit(init, f);

  auto is_goal = [&](const State& s) {
    for (std::uint32_t f : task.goal_pos) {
      if (!bit(s, f)) return false;
    }
    for (std::uint32_t f : task.goal_neg) {
      if (bit(s, f)) return false;
    }
    return true;
  };

  NodeStore nodes;
  nodes.intern(init, kNoNode, kNoNode);
  if (is_goal(*nodes.state_of[0])) return finish(PlanOutcome::Solved);

  auto out_of_budget = [&]() {
    if (result.statistics.expansions >= config.max_expansions) {
      result.expansion_capped = true;
      return true;
    }
    return Clock::now() - start >= config.timeout;
  };

  if (config.algorithm == Algorithm::Bfs) {
    std::deque<std::uint32_t> open{0};
    while (!open.empty()) {
      if (out_of_budget()) return finish(PlanOutcome::Timeout);
      const std::uint32_t cur = open.front();
      open.pop_front();
      ++result.statistics.expansions;
      for (std::size_t ai = 0; ai < task.actions.size(); ++ai) {
        const GroundedAction& action = task.actions[ai];
        if (!applicable(*nodes.state_of[cur], action)) continue;
        auto [node, fresh] =
            nodes.intern(apply(*nodes.state_of[cur], action), cur, static_cast<std::uint32_t>(ai));
        if (!fresh) continue;
        if (is_goal(*nodes.state_of[node])) {
          result.plan = extract_plan(task, nodes, node);
          return finish(PlanOutcome::Solved);
        }
        open.push_back(node);
      }
    }
    return finish(PlanOutcome::Unsolvable);
  }

  HeuristicEval heuristic(task, config.heuristic);
  using Entry = std::tuple<std::int64_t, std::uint64_t, std::uint32_t>;  // (priority, seq, node)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t seq = 0;

  if (config.algorithm == Algorithm::AStar) {
    std::vector<std::int64_t> g{0};
    std::vector<int> h_of;
    std::vector<bool> expanded;
    {
      std::optional<int> h0 = heuristic(*nodes.state_of[0]);
      if (!h0) return finish(PlanOutcome::Unsolvable);
      h_of.push_back(*h0);
      expanded.push_back(false);
      open.emplace(*h0, seq++, 0);
    }
    while (!open.empty()) {
      const std::uint32_t cur = std::get<2>(open.top());
      open.pop();
      if (expanded[cur]) continue;
      if (is_goal(*nodes.state_of[cur])) {
        result.plan = extract_plan(task, nodes, cur);
        return finish(PlanOutcome::Solved);
      }
      if (out_of_budget()) return finish(PlanOutcome::Timeout);
      expanded[cur] = true;
      ++result.statistics.expansions;
      for (std::size_t ai = 0; ai < task.actions.size(); ++ai) {
        const GroundedAction& action = task.actions[ai];
        if (!applicable(*nodes.state_of[cur], action)) continue;
        auto [node, fresh] =
            nodes.intern(apply(*nodes.state_of[cur], action), cur, static_cast<std::uint32_t>(ai));
        const std::int64_t tentative = g[cur] + 1;
        if (fresh) {
          g.push_back(tentative);
          std::optional<int> h = heuristic(*nodes.state_of[node]);
          h_of.push_back(h.value_or(kInf));
          expanded.push_back(false);
          if (h) open.emplace(tentative + *h, seq++, node);
        } else if (tentative < g[node]) {
          g[node] = tentative;
          nodes.parent[node] = cur;
          nodes.via[node] = static_cast<std::uint32_t>(ai);
          expanded[node] = false;
          if (h_of[node] < kInf) open.emplace(tentative + h_of[node], seq++, node);
        }
      }
    }
    return finish(PlanOutcome::Unsolvable);
  }

  // Greedy best-first: priority is the heuristic alone, goal test at
  // generation, every state visited at most once.
  {
    std::optional<int> h0 = heuristic(*nodes.state_of[0]);
    if (!h0) return finish(PlanOutcome::Unsolvable);
    open.emplace(*h0, seq++, 0);
  }
  while (!open.empty()) {
    const std::uint32_t cur = std::get<2>(open.top());
    open.pop();
    if (out_of_budget()) return finish(PlanOutcome::Timeout);
    ++result.statistics.expansions;
    for (std::size_t ai = 0; ai < task.actions.size(); ++ai) {
      const GroundedAction& action = task.actions[ai];
      if (!applicable(*nodes.state_of[cur], action)) continue;
      auto [node, fresh] =
          nodes.intern(apply(*nodes.state_of[cur], action), cur, static_cast<std::uint32_t>(ai));
      if (!fresh) continue;
      if (is_goal(*nodes.state_of[node])) {
        result.plan = extract_plan(task, nodes, node);
        return finish(PlanOutcome::Solved);
      }
      std::optional<int> hn = heuristic(*nodes.state_of[node]);
      if (hn) open.emplace(*hn, seq++, node);
    }
  }
  return finish(PlanOutcome::Unsolvable);
}

PlannerResult solve(const Domain& d, const Problem& p, const SearchConfig& config) {
  return solve(ground(d, p), config);
}

PlanValidation validate_plan(const Domain& d, const Problem& p, const Plan& plan) {
  std::map<Name, Name> object_types;
  for (const auto& obj : p.objects) object_types.emplace(obj.name, obj.type);

  std::set<Atom> state(p.init.begin(), p.init.end());

  auto fail = [&](std::size_t step, std::string unmet, std::string message) {
    return PlanValidation{false, step, std::move(unmet), std::move(message)};
  };

  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const GroundAction& step = plan.steps[i];
    const std::string where = "step " + std::to_string(i + 1) + " " + step.str();
    const ActionSchema* schema = d.find_action(step.schema);
    if (!schema) {
      throw UnknownAction(where + " uses an action the domain does not define");
    }
    if (schema->params.size() != step.args.size()) {
      std::ostringstream os;
      os << where << ": '" << step.schema.str() << "' takes " << schema->params.size()
         << " arguments, got " << step.args.size();
      return fail(i, "wrong number of arguments", os.str());
    }
    std::map<Name, Name> binding;
    for (std::size_t j = 0; j < step.args.size(); ++j) {
      const Name& arg = step.args[j];
      auto it = object_types.find(arg);
      if (it == object_types.end()) {
        return fail(i, "unknown object '" + arg.str() + "'",
                    where + ": object '" + arg.str() + "' is not declared");
      }
      if (d.has_type(it->second) && d.has_type(schema->params[j].type) &&
          !is_subtype(d, it->second, schema->params[j].type)) {
        return fail(i, "argument '" + arg.str() + "' has type '" + it->second.str() + "'",
                    where + ": argument '" + arg.str() + "' has type '" + it->second.str() +
                        "' where '" + schema->params[j].type.str() + "' is required");
      }
      binding[schema->params[j].name] = arg;
    }
    for (const auto& lit : schema->precondition.literals()) {
      const Atom atom = substitute(lit.atom, binding);
      const bool holds = state.count(atom) > 0;
      if (holds == lit.negated) {
        const std::string text = lit.negated ? "(not " + atom.str() + ")" : atom.str();
        return fail(i, text, where + ": unmet precondition " + text);
      }
    }
    for (const auto& atom : schema->del) state.erase(substitute(atom, binding));
    for (const auto& atom : schema->add) state.insert(substitute(atom, binding));
  }

  for (const auto& lit : p.goal.literals()) {
    const bool holds = state.count(lit.atom) > 0;
    if (holds == lit.negated) {
      return fail(plan.steps.size(), lit.str(), "goal not satisfied: unmet " + lit.str());
    }
  }
  return {true, 0, "",
          "plan of " + std::to_string(plan.steps.size()) + " step" +
              (plan.steps.size() == 1 ? "" : "s") + " is valid"};
}

std::string render_planner_error(const PlannerResult& result) {
  switch (result.outcome) {
    case PlanOutcome::Solved:
      throw NotAnError("planner result is a success, not an error");
    case PlanOutcome::Unsolvable:
      return "unsolvable: goal " + result.goal_text + " unreachable from initial state";
    case PlanOutcome::Timeout:
      if (result.expansion_capped) {
        return "timeout after " + std::to_string(result.statistics.expansions) + " expansions";
      }
      if (result.timeout_budget.count() % 1000 == 0) {
        return "timeout after " + std::to_string(result.timeout_budget.count() / 1000) + "s";
      }
      return "timeout after " + std::to_string(result.timeout_budget.count()) + "ms";
  }
  throw NotAnError("planner result has no outcome");
}

std::optional<int> relaxed_goal_cost(const GroundTask& task, Heuristic heuristic) {
  const std::size_t words = (task.facts.size() + 63) / 64;
  State init(std::max<std::size_t>(words, 1), 0);
  for (std::uint32_t f : task.init) set_bit(init, f);
  HeuristicEval eval(task, heuristic);
  return eval(init);
}

}  // namespace pdgen
