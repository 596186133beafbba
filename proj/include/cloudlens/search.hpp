#pragma once

// Optimal forward search (breadth-first over unit-cost actions), plan
// validation, and per-user enumeration across worker threads.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "cloudlens/actions.hpp"
#include "cloudlens/model.hpp"

namespace cloudlens {

struct AttackPlan {
  std::vector<GroundAction> actions;

  std::size_t cost() const noexcept { return actions.size(); }
  friend bool operator==(const AttackPlan&, const AttackPlan&) = default;
};

inline std::string format_plan(const World& w, const AttackPlan& p) {
  std::string out;
  for (const auto& a : p.actions) {
    out += format_action(w, a);
    out += '\n';
  }
  return out;
}

struct SearchLimits {
  std::size_t max_states = 2'000'000;
  double max_seconds = 60.0;
};

struct SearchOptions {
  FlowMode mode = FlowMode::Bulk;
  AssumeConstraint constraint = AssumeConstraint::Unrestricted;
  bool prune = true;
  std::vector<EntityIx> select_only;
  SearchLimits limits;
};

enum class SearchStatus : std::uint8_t { Found, NoPlan, ResourceExhausted };

inline std::string_view to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::Found: return "found";
    case SearchStatus::NoPlan: return "no_plan";
    case SearchStatus::ResourceExhausted: return "resource_exhausted";
  }
  return "?";
}

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t generated = 0;
  std::size_t duplicates = 0;
  std::size_t peak_frontier = 0;
  double wall_seconds = 0;
  double ground_seconds = 0;  // time spent generating successors

  SearchStats& operator+=(const SearchStats& o) {
    expanded += o.expanded;
    generated += o.generated;
    duplicates += o.duplicates;
    peak_frontier = std::max(peak_frontier, o.peak_frontier);
    wall_seconds += o.wall_seconds;
    ground_seconds += o.ground_seconds;
    return *this;
  }
};

struct SearchResult {
  SearchStatus status = SearchStatus::NoPlan;
  AttackPlan plan;
  SearchStats stats;

  bool found() const { return status == SearchStatus::Found; }
};

inline GenOptions gen_options(const SearchOptions& o, Goal goal) {
  GenOptions g;
  g.mode = o.mode;
  g.constraint = o.constraint;
  g.goal = goal;
  g.prune = o.prune;
  g.select_only = o.select_only;
  return g;
}

/// Minimum-cost plan reaching `goal`. Breadth-first with duplicate
/// detection on the full state; ties resolve to the lexicographically
/// smallest action sequence because successors are generated in order.
inline SearchResult find_min_plan(const World& w, const IamState& initial, Goal goal,
                                  const SearchOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto gen = gen_options(opts, goal);
  SearchResult result;
  auto finish = [&](SearchStatus st) {
    result.status = st;
    result.stats.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    return result;
  };
  if (goal_satisfied(initial, goal)) return finish(SearchStatus::Found);

  struct Node {
    IamState state;
    std::uint32_t parent;
    GroundAction action;
    std::size_t hash;
  };
  std::vector<Node> nodes;
  nodes.push_back({initial, 0, {}, initial.hash()});
  struct Hash {
    const std::vector<Node>* n;
    std::size_t operator()(std::uint32_t i) const { return (*n)[i].hash; }
  };
  struct Eq {
    const std::vector<Node>* n;
    bool operator()(std::uint32_t a, std::uint32_t b) const { return (*n)[a].state == (*n)[b].state; }
  };
  std::unordered_set<std::uint32_t, Hash, Eq> seen(1024, Hash{&nodes}, Eq{&nodes});
  seen.insert(0);

  auto plan_to = [&](std::uint32_t ix) {
    std::vector<GroundAction> acts;
    while (ix != 0) {
      acts.push_back(nodes[ix].action);
      ix = nodes[ix].parent;
    }
    std::reverse(acts.begin(), acts.end());
    return AttackPlan{std::move(acts)};
  };

  // Layer-ordered expansion: nodes are appended in generation order, so the
  // arena itself is the FIFO queue.
  std::size_t head = 0;
  while (head < nodes.size()) {
    result.stats.peak_frontier = std::max(result.stats.peak_frontier, nodes.size() - head);
    if ((result.stats.expanded & 63u) == 0 &&
        std::chrono::duration<double>(clock::now() - start).count() > opts.limits.max_seconds)
      return finish(SearchStatus::ResourceExhausted);
    auto cur = static_cast<std::uint32_t>(head++);
    ++result.stats.expanded;
    auto g0 = clock::now();
    auto succ = applicable_actions(w, nodes[cur].state, gen);
    result.stats.ground_seconds += std::chrono::duration<double>(clock::now() - g0).count();
    for (const auto& a : succ) {
      ++result.stats.generated;
      IamState next = nodes[cur].state;
      apply_effects(w, next, a, gen);
      auto h = next.hash();
      nodes.push_back({std::move(next), cur, a, h});
      auto ix = static_cast<std::uint32_t>(nodes.size() - 1);
      if (!seen.insert(ix).second) {
        ++result.stats.duplicates;
        nodes.pop_back();
        continue;
      }
      if (goal_satisfied(nodes[ix].state, goal)) {
        result.plan = plan_to(ix);
        return finish(SearchStatus::Found);
      }
      if (nodes.size() > opts.limits.max_states) return finish(SearchStatus::ResourceExhausted);
    }
  }
  return finish(SearchStatus::NoPlan);
}

struct ValidationResult {
  bool ok = false;
  std::optional<std::size_t> failed_step;  // 0-based; unset when all actions applied
  std::string message;
};

/// Simulates `plan` from `initial`; every attack schema is allowed and flow
/// schemas of either granularity are accepted.
inline ValidationResult validate_plan(const World& w, const IamState& initial, const AttackPlan& plan,
                                      Goal goal, AssumeConstraint constraint = AssumeConstraint::Unrestricted) {
  IamState s = initial;
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const auto& a = plan.actions[i];
    GenOptions o;
    o.constraint = constraint;
    o.goal = goal;
    o.prune = false;
    o.mode = (a.schema >= Schema::PermFlowId3 && a.schema <= Schema::PermFlowDs4) ? FlowMode::PerTuple
                                                                                 : FlowMode::Bulk;
    if (!is_applicable(w, s, a, o))
      return {false, i, "step " + std::to_string(i + 1) + ": " + format_action(w, a) + " is not applicable"};
    apply_effects(w, s, a, o);
  }
  if (!goal_satisfied(s, goal)) return {false, std::nullopt, "goal " + to_string(goal) + " not reached"};
  return {true, std::nullopt, "ok"};
}

struct UserOutcome {
  EntityIx user = kNoEntity;
  SearchResult result;
};

struct Enumeration {
  std::vector<UserOutcome> found;      // sorted by user name
  std::vector<EntityIx> exhausted;     // sorted by user name
  SearchStats stats;
};

/// Runs one search per candidate user with that user pre-compromised.
/// Candidates default to every non-dummy user; `jobs` worker threads share
/// the queue and results are merged in name order.
inline Enumeration enumerate_compromisable_users(const World& w, const IamState& initial, Goal goal,
                                                 const SearchOptions& opts = {}, unsigned jobs = 1,
                                                 std::vector<EntityIx> candidates = {}) {
  if (candidates.empty()) candidates = w.users();
  std::sort(candidates.begin(), candidates.end());
  std::vector<SearchResult> results(candidates.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < candidates.size();) {
      IamState s = initial;
      s.add_compromised(candidates[i]);
      results[i] = find_min_plan(w, s, goal, opts);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(candidates.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  Enumeration out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.stats += results[i].stats;
    if (results[i].found()) {
      out.found.push_back({candidates[i], std::move(results[i])});
    } else if (results[i].status == SearchStatus::ResourceExhausted) {
      out.exhausted.push_back(candidates[i]);
    }
  }
  return out;
}

}  // namespace cloudlens
