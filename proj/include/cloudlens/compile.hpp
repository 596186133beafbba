#pragma once

// Policy compilation: snapshot -> World + initial IamState. Expands action
// and resource patterns, applies the API-to-tuple rules, subtracts
// unconditional denies and derives CopyObject grants.

#include <fnmatch.h>

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "cloudlens/actions.hpp"
#include "cloudlens/model.hpp"
#include "cloudlens/snapshot.hpp"

namespace cloudlens {

struct SkippedStatement {
  std::string locator;  // "policy:<name>#<index>"
  std::string reason;
  friend bool operator==(const SkippedStatement&, const SkippedStatement&) = default;
};

struct CompilationReport {
  std::size_t tuples_emitted = 0;
  std::vector<SkippedStatement> statements_skipped;
  std::size_t deny_subtractions = 0;
};

struct CompileOptions {
  // Require both an sts:AssumeRole grant and a matching trust entry.
  bool strict_trust = false;
};

struct CompiledProblem {
  World world;
  IamState initial;
  CompilationReport report;
};

inline bool has_glob(std::string_view s) { return s.find_first_of("*?[") != std::string_view::npos; }

inline bool glob_match(const std::string& pattern, const std::string& text) {
  return ::fnmatch(pattern.c_str(), text.c_str(), FNM_CASEFOLD) == 0;
}

/// Expands an action pattern to vocabulary tokens. A lone `*` yields only
/// full_control. Unknown actions yield an empty set.
inline std::vector<PermIx> expand_action_pattern(std::string_view pattern, const Vocabulary& v) {
  if (pattern == "*") return {v.full_control()};
  std::vector<PermIx> out;
  if (!has_glob(pattern)) {
    if (auto p = v.find_aws(pattern)) out.push_back(*p);
    return out;
  }
  std::string pat(pattern);
  for (PermIx p = 0; p < v.size(); ++p) {
    const auto& aws = v.info(p).aws_action;
    if (!aws.empty() && glob_match(pat, aws)) out.push_back(p);
  }
  return out;
}

/// Entity name addressed by an ARN-like resource string.
inline std::string resource_name(std::string_view resource) {
  auto colon = resource.rfind(':');
  bool s3 = resource.starts_with("arn:aws:s3:") || resource.starts_with("s3:");
  std::string_view tail = colon == std::string_view::npos ? resource : resource.substr(colon + 1);
  if (tail.empty()) return std::string(resource);
  if (auto slash = tail.find('/'); slash != std::string_view::npos) {
    if (s3) return std::string(tail.substr(0, slash));
    return std::string(tail.substr(tail.rfind('/') + 1));
  }
  return std::string(tail);
}

/// Resolves a resource pattern for a permission family. `*` maps to the
/// family's sentinel; globs match declared names of that family.
inline std::vector<EntityIx> expand_resource_pattern(std::string_view pattern, PermFamily family,
                                                     const World& w) {
  std::vector<EntityIx> out;
  auto name = resource_name(pattern);
  auto fits = [&](EntityIx e) {
    if (w.is_sentinel(e) || e == w.dummy_user()) return false;
    switch (family) {
      case PermFamily::Identity: return w.is_identity(e);
      case PermFamily::Datastore: return w.is_datastore(e);
      case PermFamily::Any: return w.is_identity(e) || w.is_datastore(e);
    }
    return false;
  };
  if (name == "*") {
    if (family != PermFamily::Datastore) out.push_back(w.any_user());
    if (family != PermFamily::Identity) out.push_back(w.any_datastore());
  } else if (has_glob(name)) {
    for (EntityIx e = 0; e < w.size(); ++e)
      if (fits(e) && glob_match(name, w.name(e))) out.push_back(e);
  } else if (auto e = w.find(name); e && fits(*e)) {
    out.push_back(*e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// A deny pattern: any tuple of the same kind matching holder (when set),
/// subject, perm and target, where full_control and the sentinels match
/// anything in their slot.
struct DenyRule {
  std::optional<EntityIx> holder;
  RelTuple pattern;
};

inline bool deny_matches(const World& w, const DenyRule& r, const RelTuple& t) {
  const auto& p = r.pattern;
  if (p.kind != t.kind) return false;
  if (r.holder && *r.holder != t.holder) return false;
  if (is_four(t.kind) && p.subject != t.subject && p.subject != w.any_user()) return false;
  if (p.perm != t.perm && p.perm != w.vocab().full_control()) return false;
  if (p.target != t.target && p.target != w.any_user() && p.target != w.any_datastore()) return false;
  return true;
}

/// Removes every tuple matched by a rule; returns the number removed.
inline std::size_t apply_deny(const World& w, IamState::TupleSet& tuples, const std::vector<DenyRule>& rules) {
  if (rules.empty()) return 0;
  std::size_t before = tuples.size();
  IamState::TupleSet kept;
  for (const auto& t : tuples) {
    bool denied = std::any_of(rules.begin(), rules.end(), [&](const auto& r) { return deny_matches(w, r, t); });
    if (!denied) kept.insert(kept.end(), t);
  }
  tuples.swap(kept);
  return before - tuples.size();
}

namespace detail {

/// Policy id named by a `StringEquals aws:RequestTag/policy-id` condition.
inline std::optional<std::string> tagged_policy(const std::optional<nlohmann::json>& cond) {
  if (!cond || !cond->is_object()) return std::nullopt;
  for (const auto& [op, body] : cond->items()) {
    if (op != "StringEquals" || !body.is_object()) continue;
    for (const auto& [key, val] : body.items())
      if (Vocabulary::lower(key) == "aws:requesttag/policy-id" && val.is_string())
        return val.get<std::string>();
  }
  return std::nullopt;
}

inline bool is_tag_condition(const std::optional<nlohmann::json>& cond) {
  if (!cond || !cond->is_object() || cond->size() != 1) return false;
  auto it = cond->find("StringEquals");
  return it != cond->end() && it->is_object() && it->size() == 1 && tagged_policy(cond).has_value();
}

struct StatementTuples {
  std::vector<RelTuple> tuples;
  std::vector<std::string> unknown_actions;
};

/// Tuples one statement grants to `holder`.
inline StatementTuples expand_statement(const World& w, const Snapshot& snap, EntityIx holder,
                                        const PolicyStatement& st) {
  const auto& v = w.vocab();
  StatementTuples out;
  std::optional<EntityIx> tagged;
  if (auto pid = tagged_policy(st.condition))
    if (auto e = w.find(*pid); e && w.kind(*e) == EntityKind::Policy) tagged = *e;

  auto of_kind = [&](const std::vector<EntityIx>& es, EntityKind k) {
    std::vector<EntityIx> r;
    for (auto e : es) {
      if (w.kind(e) == k) r.push_back(e);
      if (e == w.any_user())
        for (EntityIx x = 0; x < w.size(); ++x)
          if (w.kind(x) == k && !w.is_dummy(x)) r.push_back(x);
    }
    return r;
  };

  for (const auto& pattern : st.actions) {
    auto perms = expand_action_pattern(pattern, v);
    if (perms.empty()) {
      out.unknown_actions.push_back(pattern);
      continue;
    }
    for (PermIx p : perms) {
      const auto& info = v.info(p);
      std::vector<EntityIx> targets;
      for (const auto& res : st.resources) {
        auto r = info.resource_agnostic ? expand_resource_pattern("*", info.family, w)
                                        : expand_resource_pattern(res, info.family, w);
        targets.insert(targets.end(), r.begin(), r.end());
      }
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

      switch (info.rule) {
        case CompileRule::Direct:
          for (auto t : targets) {
            bool ds = w.is_datastore(t) || t == w.any_datastore();
            out.tuples.push_back(ds ? RelTuple::ds3(holder, p, t) : RelTuple::id3(holder, p, t));
          }
          break;
        case CompileRule::AttachPolicy: {
          EntityIx policy = tagged.value_or(w.admin_policy());
          for (auto t : targets)
            if (t == w.any_user() || detail::bindable_subject(w, t))
              out.tuples.push_back(RelTuple::id4(holder, t, v.has_policy(), policy));
          break;
        }
        case CompileRule::AddToGroup:
          for (auto g : of_kind(targets, EntityKind::Group))
            out.tuples.push_back(RelTuple::id4(holder, w.any_user(), v.belongs_to(), g));
          break;
        case CompileRule::TrustUpdate:
          for (auto r : of_kind(targets, EntityKind::Role))
            out.tuples.push_back(RelTuple::id4(holder, w.any_user(), v.assume_role(), r));
          break;
        case CompileRule::AccessKey:
          for (auto u : of_kind(targets, EntityKind::User))
            out.tuples.push_back(RelTuple::id4(holder, w.any_user(), v.assume_role(), u));
          break;
        case CompileRule::PolicyVersion:
          for (auto pol : of_kind(targets, EntityKind::Policy))
            for (const auto& a : snap.attachments)
              if (a.policy == w.name(pol))
                out.tuples.push_back(
                    RelTuple::id4(holder, w.require(a.identity), v.has_policy(), w.admin_policy()));
          break;
      }
    }
  }
  return out;
}

inline bool trust_allows(const Snapshot& snap, std::string_view principal, std::string_view role) {
  for (const auto& t : snap.trust)
    if (t.role == role && (t.principal == "*" || glob_match(t.principal, std::string(principal))))
      return true;
  return false;
}

}  // namespace detail

inline World make_world(const Snapshot& snap, Vocabulary vocab = Vocabulary::standard()) {
  return World(snap.entity_infos(), std::move(vocab));
}

/// Compiles a validated snapshot into the planner's initial state.
inline CompiledProblem compile(const Snapshot& snap, const CompileOptions& opts = {},
                               Vocabulary vocab = Vocabulary::standard()) {
  validate_snapshot(snap);
  CompiledProblem out{make_world(snap, std::move(vocab)), IamState{}, CompilationReport{}};
  const World& w = out.world;
  const auto& v = w.vocab();
  IamState::TupleSet tuples;
  std::vector<DenyRule> denies;

  for (const auto& m : snap.memberships)
    tuples.insert(RelTuple::id3(w.require(m.user), v.belongs_to(), w.require(m.group)));
  for (const auto& a : snap.attachments)
    tuples.insert(RelTuple::id3(w.require(a.identity), v.has_policy(), w.require(a.policy)));
  if (!opts.strict_trust) {
    for (const auto& t : snap.trust) {
      EntityIx role = w.require(t.role);
      if (t.principal == "*") {
        tuples.insert(RelTuple::id3(w.any_user(), v.assume_role(), role));
        continue;
      }
      for (EntityIx e = 0; e < w.size(); ++e)
        if (detail::bindable_subject(w, e) && e != role && glob_match(t.principal, w.name(e)))
          tuples.insert(RelTuple::id3(e, v.assume_role(), role));
    }
  }

  for (const auto& a : snap.attachments) {
    const auto* doc = snap.policy(a.policy);
    if (!doc) continue;
    EntityIx holder = w.require(a.identity);
    for (std::size_t k = 0; k < doc->statements.size(); ++k) {
      const auto& st = doc->statements[k];
      std::string locator = "policy:" + doc->id.name + "#" + std::to_string(k);
      auto expanded = detail::expand_statement(w, snap, holder, st);
      for (const auto& u : expanded.unknown_actions)
        out.report.statements_skipped.push_back({locator, "unmodeled action '" + u + "'"});
      if (st.effect == Effect::Deny) {
        if (st.condition) {
          out.report.statements_skipped.push_back({locator, "conditional Deny not evaluated"});
          continue;
        }
        for (const auto& t : expanded.tuples) denies.push_back({holder, t});
        continue;
      }
      if (st.condition && !detail::is_tag_condition(st.condition))
        out.report.statements_skipped.push_back(
            {locator, "condition not evaluated; statement treated as unconditional"});
      for (const auto& t : expanded.tuples) {
        if (opts.strict_trust && t.kind == TupleKind::Id3 && t.perm == v.assume_role() &&
            !w.is_sentinel(t.target) && !detail::trust_allows(snap, w.name(holder), w.name(t.target)))
          continue;
        tuples.insert(t);
      }
    }
  }

  // Duplicate reports for a policy attached to several identities.
  auto& skipped = out.report.statements_skipped;
  std::stable_sort(skipped.begin(), skipped.end(), [](const auto& a, const auto& b) {
    return std::tie(a.locator, a.reason) < std::tie(b.locator, b.reason);
  });
  skipped.erase(std::unique(skipped.begin(), skipped.end()), skipped.end());

  out.report.deny_subtractions = apply_deny(w, tuples, denies);

  // CopyObject is granted wherever both halves of a copy are.
  std::vector<RelTuple> copies;
  for (const auto& t : tuples)
    if (t.kind == TupleKind::Ds3 && t.perm == v.get_object() &&
        tuples.contains(RelTuple::ds3(t.holder, v.put_object(), t.target)))
      copies.push_back(RelTuple::ds3(t.holder, v.copy_object(), t.target));
  tuples.insert(copies.begin(), copies.end());

  out.initial.add_tuples(tuples.begin(), tuples.end());
  for (const auto& d : snap.datastores)
    if (d.has_sensitive_data) out.initial.add_sensitive(w.require(d.id.name));
  out.report.tuples_emitted = tuples.size();
  return out;
}

/// Identities holding full control over every identity or every datastore.
inline bool is_admin(const World& w, const IamState& s, EntityIx id) {
  const auto fc = w.vocab().full_control();
  return s.contains(RelTuple::id3(id, fc, w.any_user())) ||
         s.contains(RelTuple::ds3(id, fc, w.any_datastore()));
}

inline std::vector<EntityIx> admin_users(const World& w, const IamState& s) {
  std::vector<EntityIx> out;
  for (auto u : w.users())
    if (is_admin(w, s, u)) out.push_back(u);
  return out;
}

}  // namespace cloudlens
