#pragma once

// Test-side helpers and oracles. The oracles here deliberately avoid the
// library's search code: they enumerate plans depth-first, solve set cover
// by branching on elements, and recompute flow results from first
// principles.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cloudlens/cloudlens.hpp"

namespace testsupport {

using namespace cloudlens;

inline std::string fixture_path(const std::string& name) { return std::string(CLOUDLENS_FIXTURES) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : e_(seed) {}
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(e_() % n); }
  bool coin(double p = 0.5) { return static_cast<double>(e_() >> 11) * 0x1.0p-53 < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 e_;
};

struct Compiled {
  CompiledProblem cp;
  const World& w() const { return cp.world; }
  const IamState& s() const { return cp.initial; }
};

inline Compiled compile_scenario(ScenarioName n) { return {compile(scenario(n).snapshot)}; }

inline SearchOptions search_opts(FlowMode m, bool prune = true) {
  SearchOptions o;
  o.mode = m;
  o.prune = prune;
  return o;
}

// ---------------------------------------------------------------------------
// Plan-length oracle: iterative deepening over applicable actions with a
// per-depth visited table. Returns the length of the shortest plan up to
// `max_depth`, or nullopt if none exists within it.

inline std::optional<std::size_t> iddfs_min_plan(const World& w, const IamState& init, Goal goal, const GenOptions& o,
                                                 std::size_t max_depth) {
  if (goal_satisfied(init, goal)) return 0;
  for (std::size_t limit = 1; limit <= max_depth; ++limit) {
    // best remaining budget seen for a state; revisiting with less is useless
    std::unordered_map<std::size_t, std::vector<std::pair<IamState, std::size_t>>> seen;
    std::function<bool(const IamState&, std::size_t)> dfs = [&](const IamState& s, std::size_t left) -> bool {
      auto& bucket = seen[s.hash()];
      auto it = std::find_if(bucket.begin(), bucket.end(), [&](const auto& e) { return e.first == s; });
      if (it == bucket.end()) {
        bucket.emplace_back(s, left);
      } else if (it->second >= left) {
        return false;
      } else {
        it->second = left;
      }
      for (const auto& a : applicable_actions(w, s, o)) {
        IamState n = s;
        apply_effects(w, n, a, o);
        if (goal_satisfied(n, goal)) return true;
        if (left > 1 && dfs(n, left - 1)) return true;
      }
      return false;
    };
    if (dfs(init, limit)) return limit;
  }
  return std::nullopt;
}

inline GenOptions gen_opts(FlowMode m, Goal g, bool prune = true) {
  GenOptions o;
  o.mode = m;
  o.goal = g;
  o.prune = prune;
  return o;
}

// ---------------------------------------------------------------------------
// Set cover by branching on the first uncovered element.

inline std::optional<std::size_t> cover_by_branching(const SetCoverInstance& inst) {
  std::vector<std::set<std::string>> sets;
  for (const auto& [_, m] : inst.subsets) sets.emplace_back(m.begin(), m.end());
  std::optional<std::size_t> best;
  std::function<void(std::set<std::string>, std::size_t)> go = [&](std::set<std::string> left, std::size_t used) {
    if (best && used >= *best) return;
    if (left.empty()) {
      best = used;
      return;
    }
    const auto& e = *left.begin();
    for (const auto& s : sets) {
      if (!s.contains(e)) continue;
      std::set<std::string> rest;
      for (const auto& x : left)
        if (!s.contains(x)) rest.insert(x);
      go(rest, used + 1);
    }
  };
  go({inst.universe.begin(), inst.universe.end()}, 0);
  return best;
}

inline SetCoverInstance random_cover(Gen& g, std::size_t max_n, std::size_t max_m) {
  SetCoverInstance inst;
  std::size_t n = 1 + g.below(max_n), m = 1 + g.below(max_m);
  for (std::size_t i = 0; i < n; ++i) inst.universe.push_back("v" + std::to_string(i));
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::string> members;
    for (const auto& v : inst.universe)
      if (g.coin(0.4)) members.push_back(v);
    inst.subsets.emplace_back("S" + std::to_string(j), members);
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Flow oracle: the tuples a bulk flow src -> dst must add.

inline std::set<RelTuple> expected_bulk_additions(const IamState& s, EntityIx src, EntityIx dst) {
  std::set<RelTuple> out;
  for (const auto& t : s.tuples())
    if (t.holder == src) {
      RelTuple moved = t;
      moved.holder = dst;
      if (!s.contains(moved)) out.insert(moved);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Random small snapshots for soundness/optimality properties.

inline GenParams small_params(std::uint64_t seed, Gen& g) {
  GenParams p;
  p.seed = seed;
  p.users = 1 + g.below(3);
  p.groups = g.below(2);
  p.roles = g.below(3);
  p.datastores = 1 + g.below(2);
  p.policies = 1 + g.below(2);
  // at most 10 declared entities
  while (p.users + p.groups + p.roles + p.datastores + p.policies > 10) --p.roles;
  p.membership_density = 0.5;
  p.attachment_density = 0.5;
  p.trust_density = 0.4;
  p.grant_density = 0.25;
  p.sensitive_fraction = 0.6;
  p.public_fraction = 0.4;
  return p;
}

}  // namespace testsupport
