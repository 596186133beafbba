#pragma once

// Layered attack graph: delete-relaxed alternation of fact and action
// layers, with the select-once interaction kept as mutexes.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cloudlens/actions.hpp"
#include "cloudlens/search.hpp"

namespace cloudlens {

struct ActionNode {
  GroundAction action;
  std::vector<Fact> preconditions;
  std::vector<Fact> effects;  // facts new in the next layer
};

struct ActionLayer {
  std::vector<ActionNode> actions;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> mutexes;  // indices into actions
};

struct AttackGraph {
  std::vector<IamState> fact_layers;   // fact_layers[k] precedes action_layers[k]
  std::vector<ActionLayer> action_layers;
  std::vector<std::vector<std::pair<EntityIx, EntityIx>>> fact_mutexes;  // compromised(a) x compromised(b)
  bool fixpoint = false;
};

struct GraphOptions {
  FlowMode mode = FlowMode::Bulk;
  AssumeConstraint constraint = AssumeConstraint::Unrestricted;
  bool prune = true;
  bool stop_at_goal = false;
};

inline AttackGraph build_attack_graph(const World& w, const IamState& initial, Goal goal,
                                      const GraphOptions& opts, std::size_t max_levels) {
  if (max_levels == 0) throw ContractError("max_levels must be at least 1");
  GenOptions gen;
  gen.mode = opts.mode;
  gen.constraint = opts.constraint;
  gen.goal = goal;
  gen.prune = opts.prune;
  gen.relaxed = true;

  AttackGraph g;
  g.fact_layers.push_back(initial);
  g.fact_mutexes.emplace_back();
  for (std::size_t level = 0; level < max_levels; ++level) {
    const IamState& cur = g.fact_layers.back();
    if (opts.stop_at_goal && goal_satisfied(cur, goal)) break;
    ActionLayer layer;
    IamState next = cur;
    std::vector<std::uint32_t> selects;
    for (const auto& a : applicable_actions(w, cur, gen)) {
      IamState single = cur;
      apply_effects(w, single, a, gen);
      if (a.schema == Schema::SelectCompromisedUser)
        selects.push_back(static_cast<std::uint32_t>(layer.actions.size()));
      layer.actions.push_back({a, precondition_facts(w, cur, a), added_facts(cur, single)});
      next.merge(single);
    }
    // Only one compromised user is ever selected.
    for (std::size_t i = 0; i < selects.size(); ++i)
      for (std::size_t j = i + 1; j < selects.size(); ++j) layer.mutexes.emplace_back(selects[i], selects[j]);
    std::vector<std::pair<EntityIx, EntityIx>> fm = g.fact_mutexes.back();
    if (!selects.empty()) {
      for (std::size_t i = 0; i < selects.size(); ++i)
        for (std::size_t j = i + 1; j < selects.size(); ++j)
          fm.emplace_back(layer.actions[selects[i]].action.args[0], layer.actions[selects[j]].action.args[0]);
    }
    bool same = next == cur;
    g.action_layers.push_back(std::move(layer));
    if (same) {
      g.fixpoint = true;
      g.action_layers.pop_back();
      break;
    }
    g.fact_layers.push_back(std::move(next));
    g.fact_mutexes.push_back(std::move(fm));
  }
  return g;
}

/// Index of the first fact layer containing the goal; a lower bound on the
/// optimal plan cost. Empty when the goal never appears.
inline std::optional<std::size_t> graph_lower_bound(const AttackGraph& g, Goal goal) {
  for (std::size_t k = 0; k < g.fact_layers.size(); ++k)
    if (goal_satisfied(g.fact_layers[k], goal)) return k;
  return std::nullopt;
}

}  // namespace cloudlens
