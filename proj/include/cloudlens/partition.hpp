#pragma once

// Splits large snapshots into independently analyzable pieces: per account
// first, then into user groups whose reachability closures fit a budget.
// Admin users are dropped.

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cloudlens/compile.hpp"
#include "cloudlens/snapshot.hpp"

namespace cloudlens {

struct Partition {
  Snapshot snapshot;
  std::vector<std::string> source_users;  // sorted
};

/// Directed reference graph over entity names, from compiled tuples.
class ReferenceGraph {
 public:
  explicit ReferenceGraph(const CompiledProblem& cp) {
    const World& w = cp.world;
    auto expand = [&](EntityIx e) -> std::vector<EntityIx> {
      if (e == w.any_user()) return w.identities();
      if (e == w.any_datastore()) return w.datastores();
      if (w.is_dummy(e) || e == kNoEntity) return {};
      return {e};
    };
    auto link = [&](EntityIx from, EntityIx to) {
      for (auto a : expand(from))
        for (auto b : expand(to))
          if (a != b) edges_[w.name(a)].insert(w.name(b));
    };
    for (const auto& t : cp.initial.tuples()) {
      link(t.holder, t.target);
      if (is_four(t.kind)) link(t.holder, t.subject);
    }
  }

  /// Names reachable from `sources` (inclusive) by breadth-first search.
  std::set<std::string> closure(const std::vector<std::string>& sources) const {
    std::set<std::string> seen(sources.begin(), sources.end());
    std::deque<std::string> queue(sources.begin(), sources.end());
    while (!queue.empty()) {
      auto cur = std::move(queue.front());
      queue.pop_front();
      auto it = edges_.find(cur);
      if (it == edges_.end()) continue;
      for (const auto& n : it->second)
        if (seen.insert(n).second) queue.push_back(n);
    }
    return seen;
  }

  const std::map<std::string, std::set<std::string>>& edges() const { return edges_; }

 private:
  std::map<std::string, std::set<std::string>> edges_;
};

/// Sub-snapshot restricted to `names` (entities, and relations among them).
inline Snapshot restrict_snapshot(const Snapshot& s, const std::set<std::string>& names) {
  Snapshot out;
  out.notes = s.notes;
  auto in = [&](const std::string& n) { return names.contains(n); };
  for (const auto& i : s.identities)
    if (in(i.id.name)) out.identities.push_back(i);
  for (const auto& d : s.datastores)
    if (in(d.id.name)) out.datastores.push_back(d);
  for (const auto& p : s.policies)
    if (in(p.id.name)) out.policies.push_back(p);
  for (const auto& a : s.attachments)
    if (in(a.identity) && in(a.policy)) out.attachments.push_back(a);
  for (const auto& m : s.memberships)
    if (in(m.user) && in(m.group)) out.memberships.push_back(m);
  for (const auto& t : s.trust)
    if (in(t.role) && (t.principal == "*" || has_glob(t.principal) || in(t.principal)))
      out.trust.push_back(t);
  return out;
}

/// Snapshot without the given users and every relation naming them.
inline Snapshot remove_users(const Snapshot& s, const std::set<std::string>& users) {
  std::set<std::string> keep;
  for (const auto& i : s.identities)
    if (!users.contains(i.id.name)) keep.insert(i.id.name);
  for (const auto& p : s.policies) keep.insert(p.id.name);
  for (const auto& d : s.datastores) keep.insert(d.id.name);
  return restrict_snapshot(s, keep);
}

inline std::vector<Partition> partition(const Snapshot& snap, std::size_t max_entities,
                                        const CompileOptions& opts = {}) {
  if (max_entities == 0) throw ContractError("partition budget must be at least 1");
  auto full = compile(snap, opts);
  std::set<std::string> admins;
  for (auto u : admin_users(full.world, full.initial)) admins.insert(full.world.name(u));
  Snapshot base = admins.empty() ? snap : remove_users(snap, admins);
  auto compiled = compile(base, opts);
  ReferenceGraph graph(compiled);

  std::map<std::string, std::vector<std::string>> users_by_account;
  std::map<std::string, std::set<std::string>> entities_by_account;
  for (const auto& i : base.identities) {
    entities_by_account[i.id.account].insert(i.id.name);
    if (i.kind == IdentityKind::User) users_by_account[i.id.account].push_back(i.id.name);
  }
  for (const auto& p : base.policies) entities_by_account[p.id.account].insert(p.id.name);
  for (const auto& d : base.datastores) entities_by_account[d.id.account].insert(d.id.name);

  std::vector<Partition> out;
  for (auto& [account, users] : users_by_account) {
    std::sort(users.begin(), users.end());
    auto whole = graph.closure(users);
    whole.insert(entities_by_account[account].begin(), entities_by_account[account].end());
    if (whole.size() <= max_entities) {
      out.push_back({restrict_snapshot(base, whole), users});
      continue;
    }
    // Greedy packing in name order while the union of closures fits.
    std::vector<std::string> group;
    std::set<std::string> names;
    for (const auto& u : users) {
      auto c = graph.closure({u});
      std::set<std::string> merged = names;
      merged.insert(c.begin(), c.end());
      if (!group.empty() && merged.size() > max_entities) {
        out.push_back({restrict_snapshot(base, names), group});
        group.clear();
        merged = c;
      }
      group.push_back(u);
      names = std::move(merged);
    }
    if (!group.empty()) out.push_back({restrict_snapshot(base, names), group});
  }
  return out;
}

}  // namespace cloudlens
