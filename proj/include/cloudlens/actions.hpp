#pragma once

// Ground action schemas and the state-transition semantics: applicability,
// successor generation and application, in bulk and per-tuple granularity.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cloudlens/error.hpp"
#include "cloudlens/model.hpp"

namespace cloudlens {

enum class Schema : std::uint8_t {
  SelectCompromisedUser,
  PermFlowBulk,
  PermFlowId3,
  PermFlowDs3,
  PermFlowId4,
  PermFlowDs4,
  AddId3,
  AddDs3,
  ActivateId3,
  ActivateDs3,
  CopyObject,
  MoveObject,
  DeleteBucket,
  DeleteIdentity,
  CreatePublicBucket,
  EncryptSensitiveData,
  GainPersistence,
  ChangeUserLogin,
  ReachAdminPolicy,
  EnableAttack,
};

inline constexpr std::size_t kSchemaCount = 20;

enum class Slot : std::uint8_t { Entity, Perm };

struct SchemaInfo {
  Schema schema;
  std::string_view pddl_name;
  std::uint8_t arity;
  std::array<Slot, 5> slots;
  std::array<std::string_view, 5> params;  // PDDL variable names
};

namespace detail {
inline constexpr Slot E = Slot::Entity;
inline constexpr Slot P = Slot::Perm;
}  // namespace detail

// Parameter orders follow the PDDL action definitions.
inline constexpr std::array<SchemaInfo, kSchemaCount> kSchemas = {{
    {Schema::SelectCompromisedUser, "selectCompromisedUser", 1, {detail::E}, {"?id"}},
    {Schema::PermFlowBulk, "permissionFlow", 2, {detail::E, detail::E}, {"?id2", "?id1"}},
    {Schema::PermFlowId3, "permissionFlow_id_3tpl", 4, {detail::E, detail::P, detail::E, detail::E},
     {"?id2", "?perm", "?id", "?id1"}},
    {Schema::PermFlowDs3, "permissionFlow_ds_3tpl", 4, {detail::E, detail::P, detail::E, detail::E},
     {"?id2", "?perm", "?ds", "?id1"}},
    {Schema::PermFlowId4, "permissionFlow_id_4tpl", 5,
     {detail::E, detail::E, detail::E, detail::P, detail::E}, {"?id1", "?id2", "?id3", "?perm", "?id4"}},
    {Schema::PermFlowDs4, "permissionFlow_ds_4tpl", 5,
     {detail::E, detail::E, detail::E, detail::P, detail::E}, {"?id1", "?id2", "?id3", "?perm", "?ds"}},
    {Schema::AddId3, "add_id_3tpl", 4, {detail::E, detail::E, detail::P, detail::E},
     {"?id1", "?id2", "?perm", "?id3"}},
    {Schema::AddDs3, "add_ds_3tpl", 4, {detail::E, detail::E, detail::P, detail::E},
     {"?id1", "?id2", "?perm", "?ds"}},
    {Schema::ActivateId3, "activate_id_3tpl", 3, {detail::E, detail::P, detail::E}, {"?id1", "?perm", "?id2"}},
    {Schema::ActivateDs3, "activate_ds_3tpl", 3, {detail::E, detail::P, detail::E}, {"?id1", "?perm", "?ds"}},
    {Schema::CopyObject, "copyObject", 3, {detail::E, detail::E, detail::E}, {"?id", "?ds1", "?ds2"}},
    {Schema::MoveObject, "moveObject", 3, {detail::E, detail::E, detail::E}, {"?id", "?ds1", "?ds2"}},
    {Schema::DeleteBucket, "deleteBucket", 2, {detail::E, detail::E}, {"?id", "?ds"}},
    {Schema::DeleteIdentity, "deleteIdentity", 3, {detail::E, detail::P, detail::E}, {"?id", "?perm", "?target"}},
    {Schema::CreatePublicBucket, "createPublicBucket", 2, {detail::E, detail::E}, {"?id", "?ds"}},
    {Schema::EncryptSensitiveData, "encryptSensitiveData", 3, {detail::E, detail::E, detail::E},
     {"?id", "?ds", "?kt"}},
    {Schema::GainPersistence, "gainPersistence", 3, {detail::E, detail::P, detail::E}, {"?id", "?perm", "?x"}},
    {Schema::ChangeUserLogin, "changeUserLogin", 3, {detail::E, detail::P, detail::E}, {"?id", "?perm", "?user"}},
    {Schema::ReachAdminPolicy, "reachAdminPolicy", 1, {detail::E}, {"?id"}},
    {Schema::EnableAttack, "enableAttack", 1, {detail::E}, {"?id"}},
}};

inline const SchemaInfo& schema_info(Schema s) { return kSchemas[static_cast<std::size_t>(s)]; }

/// One grounded action; cost is always 1. Unused argument slots are zero so
/// that the defaulted ordering is (schema, params) lexicographic.
struct GroundAction {
  Schema schema = Schema::SelectCompromisedUser;
  std::array<std::uint32_t, 5> args{};

  std::uint8_t arity() const { return schema_info(schema).arity; }
  std::uint32_t arg(std::size_t i) const { return args[i]; }
  static constexpr int cost() { return 1; }

  friend bool operator==(const GroundAction&, const GroundAction&) = default;
  friend auto operator<=>(const GroundAction&, const GroundAction&) = default;
};

inline GroundAction make_action(Schema s, std::initializer_list<std::uint32_t> args) {
  GroundAction a{s, {}};
  if (args.size() != schema_info(s).arity)
    throw ContractError("arity mismatch for " + std::string(schema_info(s).pddl_name));
  std::copy(args.begin(), args.end(), a.args.begin());
  return a;
}

inline std::string format_action(const World& w, const GroundAction& a) {
  const auto& info = schema_info(a.schema);
  std::string out = "(";
  out += info.pddl_name;
  for (std::size_t i = 0; i < info.arity; ++i) {
    out += ' ';
    out += info.slots[i] == Slot::Perm ? w.vocab().token(a.args[i]) : w.name(a.args[i]);
  }
  out += ')';
  return out;
}

enum class FlowMode : std::uint8_t { Bulk, PerTuple };
enum class AssumeConstraint : std::uint8_t { Unrestricted, SingleSource };

inline std::string_view to_string(FlowMode m) { return m == FlowMode::Bulk ? "bulk" : "per-tuple"; }
inline std::string_view to_string(AssumeConstraint c) {
  return c == AssumeConstraint::Unrestricted ? "unrestricted" : "single";
}

struct GenOptions {
  FlowMode mode = FlowMode::Bulk;
  AssumeConstraint constraint = AssumeConstraint::Unrestricted;
  Goal goal = AttackType::PrivilegeEscalation;
  bool prune = true;    // drop attack schemas irrelevant to `goal`
  bool relaxed = false; // ignore negative preconditions (planning graph)
  std::vector<EntityIx> select_only;  // non-empty: restrict SelectCompromisedUser
};

// ---------------------------------------------------------------------------
// Flow activation

/// Permissions can flow src -> dst when dst assumes, belongs to or holds src.
inline bool is_flow_active(const World& w, const IamState& s, EntityIx src, EntityIx dst) {
  if (src == dst) return false;
  for (const auto& t : s.held(TupleKind::Id3, dst))
    if (t.target == src && w.vocab().is_flow_activating(t.perm)) return true;
  return false;
}

/// True when the only edge justifying src -> dst is assumeRole, the case the
/// single-source constraint governs.
inline bool assume_only_flow(const World& w, const IamState& s, EntityIx src, EntityIx dst) {
  bool assume = false;
  for (const auto& t : s.held(TupleKind::Id3, dst)) {
    if (t.target != src || !w.vocab().is_flow_activating(t.perm)) continue;
    if (t.perm == w.vocab().assume_role()) {
      assume = true;
    } else {
      return false;
    }
  }
  return assume;
}

namespace detail {

inline bool flow_allowed(const World& w, const IamState& s, EntityIx src, EntityIx dst,
                         const GenOptions& o) {
  if (!w.is_identity(src) || !w.is_identity(dst) || w.is_dummy(src) || w.is_dummy(dst)) return false;
  if (!is_flow_active(w, s, src, dst)) return false;
  if (o.constraint == AssumeConstraint::SingleSource && !o.relaxed && assume_only_flow(w, s, src, dst)) {
    auto bound = s.bound_source(dst);
    if (bound && *bound != src) return false;
  }
  return true;
}

inline void bind_flow(const World& w, IamState& s, EntityIx src, EntityIx dst, const GenOptions& o) {
  if (o.relaxed) return;
  if (o.constraint == AssumeConstraint::SingleSource && assume_only_flow(w, s, src, dst))
    s.set_flow_bound(dst, src);
}

inline bool activatable(const World& w, PermIx p, bool datastore) {
  const auto& info = w.vocab().info(p);
  // Resource-agnostic permissions only ever target the sentinels.
  if (p == w.vocab().full_control() || info.rule != CompileRule::Direct || info.resource_agnostic) return false;
  return info.family == (datastore ? PermFamily::Datastore : PermFamily::Identity);
}

/// Whether `target` may be the concrete target of an activated identity tuple.
inline bool activation_target(const World& w, PermIx p, EntityIx target) {
  if (!w.is_identity(target) || w.is_dummy(target)) return false;
  auto k = w.kind(target);
  if (p == w.vocab().has_policy()) return k == EntityKind::Policy;
  if (p == w.vocab().belongs_to()) return k == EntityKind::Group;
  return k != EntityKind::Policy;
}

/// Concrete identities that an any_user subject of a 4-tuple may bind to.
inline bool bindable_subject(const World& w, EntityIx e) {
  return w.is_identity(e) && !w.is_dummy(e) && w.kind(e) != EntityKind::Policy;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Attack schemas and goals

/// Attack schemas that can contribute to `goal`.
inline bool schema_relevant(Schema s, Goal goal) {
  if (goal.is_conjunctive()) return s == Schema::EnableAttack;
  switch (goal.attack()) {
    case AttackType::SensitiveDataExfiltration:
      return s == Schema::CopyObject || s == Schema::MoveObject || s == Schema::CreatePublicBucket;
    case AttackType::Impact:
      return s == Schema::DeleteBucket || s == Schema::DeleteIdentity || s == Schema::MoveObject ||
             s == Schema::CreatePublicBucket;
    case AttackType::Ransomware:
      return s == Schema::EncryptSensitiveData || s == Schema::MoveObject ||
             s == Schema::CreatePublicBucket;
    case AttackType::Persistence: return s == Schema::GainPersistence;
    case AttackType::LateralMovement: return s == Schema::ChangeUserLogin;
    case AttackType::PrivilegeEscalation: return s == Schema::ReachAdminPolicy;
  }
  return false;
}

inline bool is_attack_schema(Schema s) { return s >= Schema::CopyObject; }

inline bool schema_enabled(const World& w, Schema s, const GenOptions& o) {
  if (s == Schema::PermFlowBulk) return o.mode == FlowMode::Bulk;
  if (s >= Schema::PermFlowId3 && s <= Schema::PermFlowDs4) return o.mode == FlowMode::PerTuple;
  if (s == Schema::EnableAttack && !w.conjunctive_attack()) return false;
  if (!is_attack_schema(s)) return true;
  return !o.prune || schema_relevant(s, o.goal);
}

inline bool goal_satisfied(const IamState& s, Goal g) { return s.has_flag(g); }

namespace detail {

inline bool has_ds3(const World& w, const IamState& s, EntityIx id, PermIx p, EntityIx ds) {
  (void)w;
  return s.contains(RelTuple::ds3(id, p, ds));
}

inline bool can_create_public_bucket(const World& w, const IamState& s, EntityIx id) {
  const auto& v = w.vocab();
  auto any = w.any_datastore();
  return s.contains(RelTuple::ds3(id, v.create_bucket(), any)) ||
         s.contains(RelTuple::ds3(id, v.put_bucket_acl(), any)) ||
         s.contains(RelTuple::ds3(id, v.full_control(), any));
}

inline bool conjunctive_holds(const World& w, const IamState& s, EntityIx id) {
  if (!w.conjunctive_attack() || !s.is_compromised(id)) return false;
  for (const auto& t : w.conjunctive_attack()->required)
    if (!s.contains(t)) return false;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Applicability

/// Precondition test for one ground action. `o.mode`, `o.prune` and
/// `o.goal` decide which schemas exist at all.
inline bool is_applicable(const World& w, const IamState& s, const GroundAction& a,
                          const GenOptions& o) {
  if (!schema_enabled(w, a.schema, o)) return false;
  const auto& info = schema_info(a.schema);
  for (std::size_t i = 0; i < info.arity; ++i) {
    if (info.slots[i] == Slot::Entity && a.args[i] >= w.size()) return false;
    if (info.slots[i] == Slot::Perm && a.args[i] >= w.vocab().size()) return false;
  }
  if (a.schema == Schema::SelectCompromisedUser) {
    EntityIx id = a.args[0];
    if (!w.is_user(id)) return false;
    if (!o.select_only.empty() &&
        std::find(o.select_only.begin(), o.select_only.end(), id) == o.select_only.end())
      return false;
    return o.relaxed ? !s.is_compromised(id) : s.compromised().empty();
  }
  // Nothing else may run before a compromised identity exists.
  if (s.compromised().empty()) return false;

  const auto& v = w.vocab();
  auto absent = [&](const RelTuple& t) { return o.relaxed || !s.contains(t); };
  switch (a.schema) {
    case Schema::SelectCompromisedUser: return false;
    case Schema::PermFlowBulk:
      return detail::flow_allowed(w, s, a.args[0], a.args[1], o);
    case Schema::PermFlowId3:
    case Schema::PermFlowDs3: {
      auto kind = a.schema == Schema::PermFlowId3 ? TupleKind::Id3 : TupleKind::Ds3;
      EntityIx id2 = a.args[0], id1 = a.args[3];
      RelTuple src{kind, id2, kNoEntity, a.args[1], a.args[2]};
      return detail::flow_allowed(w, s, id2, id1, o) && s.contains(src) && absent(src.held_by(id1));
    }
    case Schema::PermFlowId4:
    case Schema::PermFlowDs4: {
      auto kind = a.schema == Schema::PermFlowId4 ? TupleKind::Id4 : TupleKind::Ds4;
      EntityIx id1 = a.args[0], id2 = a.args[1];
      RelTuple src{kind, id2, a.args[2], a.args[3], a.args[4]};
      return detail::flow_allowed(w, s, id2, id1, o) && s.contains(src) && absent(src.held_by(id1));
    }
    case Schema::AddId3:
    case Schema::AddDs3: {
      bool ds = a.schema == Schema::AddDs3;
      EntityIx id1 = a.args[0], id2 = a.args[1], id3 = a.args[3];
      PermIx p = a.args[2];
      if (!s.is_compromised(id1)) return false;
      auto four = ds ? RelTuple::ds4(id1, id2, p, id3) : RelTuple::id4(id1, id2, p, id3);
      bool held = s.contains(four);
      if (!held && detail::bindable_subject(w, id2)) {
        auto wild = ds ? RelTuple::ds4(id1, w.any_user(), p, id3)
                       : RelTuple::id4(id1, w.any_user(), p, id3);
        held = s.contains(wild);
      }
      return held && absent(four.granted());
    }
    case Schema::ActivateId3: {
      EntityIx id1 = a.args[0], id2 = a.args[2];
      PermIx p = a.args[1];
      if (!w.is_identity(id1) || w.is_dummy(id1) || !detail::activatable(w, p, false) ||
          !detail::activation_target(w, p, id2))
        return false;
      if (!absent(RelTuple::id3(id1, p, id2))) return false;
      return s.contains(RelTuple::id3(id1, v.full_control(), id2)) ||
             s.contains(RelTuple::id3(id1, v.full_control(), w.any_user())) ||
             s.contains(RelTuple::id3(id1, p, w.any_user()));
    }
    case Schema::ActivateDs3: {
      EntityIx id1 = a.args[0], ds = a.args[2];
      PermIx p = a.args[1];
      if (!w.is_identity(id1) || w.is_dummy(id1) || !detail::activatable(w, p, true) ||
          !datastore_exists(w, s, ds))
        return false;
      if (!absent(RelTuple::ds3(id1, p, ds))) return false;
      return s.contains(RelTuple::ds3(id1, v.full_control(), ds)) ||
             s.contains(RelTuple::ds3(id1, v.full_control(), w.any_datastore())) ||
             s.contains(RelTuple::ds3(id1, p, w.any_datastore()));
    }
    case Schema::CopyObject:
    case Schema::MoveObject: {
      EntityIx id = a.args[0], ds1 = a.args[1], ds2 = a.args[2];
      if (!s.is_compromised(id) || ds1 == ds2) return false;
      if (!datastore_exists(w, s, ds1) || !datastore_exists(w, s, ds2)) return false;
      if (!s.is_sensitive(ds1)) return false;
      if (!detail::has_ds3(w, s, id, v.get_object(), ds1) ||
          !detail::has_ds3(w, s, id, v.put_object(), ds2))
        return false;
      if (a.schema == Schema::CopyObject) return datastore_public(w, s, ds2);
      return detail::has_ds3(w, s, id, v.delete_object(), ds1);
    }
    case Schema::DeleteBucket: {
      EntityIx id = a.args[0], ds = a.args[1];
      return s.is_compromised(id) && datastore_exists(w, s, ds) && s.is_sensitive(ds) &&
             detail::has_ds3(w, s, id, v.delete_bucket(), ds);
    }
    case Schema::DeleteIdentity: {
      EntityIx id = a.args[0], target = a.args[2];
      PermIx p = a.args[1];
      return s.is_compromised(id) && v.info(p).role == PermRole::IdentityDelete &&
             w.is_identity(target) && !w.is_dummy(target) && s.contains(RelTuple::id3(id, p, target));
    }
    case Schema::CreatePublicBucket: {
      EntityIx id = a.args[0], ds = a.args[1];
      return s.is_compromised(id) && ds == w.dummy_datastore() && (o.relaxed || !s.is_created(ds)) &&
             detail::can_create_public_bucket(w, s, id);
    }
    case Schema::EncryptSensitiveData: {
      EntityIx id = a.args[0], ds = a.args[1], kt = a.args[2];
      if (!s.is_compromised(id) || !datastore_exists(w, s, ds) || !s.is_sensitive(ds)) return false;
      const auto& e = w.entity(ds);
      if (e.versioning_enabled || e.mfa_delete_enabled) return false;
      return detail::has_ds3(w, s, id, v.put_object(), ds) &&
             s.contains(RelTuple::ds3(id, v.create_key(), kt));
    }
    case Schema::GainPersistence: {
      EntityIx id = a.args[0], x = a.args[2];
      PermIx p = a.args[1];
      return s.is_compromised(id) && v.info(p).role == PermRole::Persistence &&
             (o.relaxed || !s.is_created(w.dummy_user())) && s.contains(RelTuple::id3(id, p, x));
    }
    case Schema::ChangeUserLogin: {
      EntityIx id = a.args[0], user = a.args[2];
      PermIx p = a.args[1];
      return s.is_compromised(id) && v.info(p).role == PermRole::Login && w.is_user(user) &&
             user != id && s.contains(RelTuple::id3(id, p, user));
    }
    case Schema::ReachAdminPolicy: {
      EntityIx id = a.args[0];
      return s.is_compromised(id) && s.contains(RelTuple::id3(id, v.has_policy(), w.admin_policy()));
    }
    case Schema::EnableAttack: return detail::conjunctive_holds(w, s, a.args[0]);
  }
  return false;
}

/// Any compromised identity satisfies the precondition of an attack schema
/// for `attack` in `s` (ignoring pruning).
inline bool attack_precondition(const World& w, const IamState& s, EntityIx id, Goal attack);

// ---------------------------------------------------------------------------
// Successor generation

/// Every applicable ground action, sorted by (schema, params).
inline std::vector<GroundAction> applicable_actions(const World& w, const IamState& s,
                                                    const GenOptions& o) {
  std::vector<GroundAction> out;
  const auto& v = w.vocab();
  auto push = [&](GroundAction a) {
    if (is_applicable(w, s, a, o)) out.push_back(a);
  };

  for (EntityIx u : w.users()) push(make_action(Schema::SelectCompromisedUser, {u}));
  if (s.compromised().empty()) {
    std::sort(out.begin(), out.end());
    return out;
  }

  // Flow edges src -> dst from flow-activating tuples <dst, r, src>.
  std::vector<std::pair<EntityIx, EntityIx>> edges;
  for (const auto& t : s.of_kind(TupleKind::Id3))
    if (v.is_flow_activating(t.perm) && t.holder != t.target && !w.is_sentinel(t.target) &&
        !w.is_sentinel(t.holder))
      edges.emplace_back(t.target, t.holder);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  if (o.mode == FlowMode::Bulk) {
    for (auto [src, dst] : edges) push(make_action(Schema::PermFlowBulk, {src, dst}));
  } else {
    for (auto [src, dst] : edges) {
      if (!detail::flow_allowed(w, s, src, dst, o)) continue;
      for (const auto& t : s.held(TupleKind::Id3, src))
        push(make_action(Schema::PermFlowId3, {src, t.perm, t.target, dst}));
      for (const auto& t : s.held(TupleKind::Ds3, src))
        push(make_action(Schema::PermFlowDs3, {src, t.perm, t.target, dst}));
      for (const auto& t : s.held(TupleKind::Id4, src))
        push(make_action(Schema::PermFlowId4, {dst, src, t.subject, t.perm, t.target}));
      for (const auto& t : s.held(TupleKind::Ds4, src))
        push(make_action(Schema::PermFlowDs4, {dst, src, t.subject, t.perm, t.target}));
    }
  }

  // Tuple addition from 4-tuples held by compromised identities.
  for (EntityIx id1 : s.compromised()) {
    for (auto kind : {TupleKind::Id4, TupleKind::Ds4}) {
      auto schema = kind == TupleKind::Id4 ? Schema::AddId3 : Schema::AddDs3;
      for (const auto& t : s.held(kind, id1)) {
        if (t.subject == w.any_user()) {
          push(make_action(schema, {id1, t.subject, t.perm, t.target}));
          for (EntityIx e = 0; e < w.size(); ++e)
            if (detail::bindable_subject(w, e)) push(make_action(schema, {id1, e, t.perm, t.target}));
        } else {
          push(make_action(schema, {id1, t.subject, t.perm, t.target}));
        }
      }
    }
  }

  // Wildcard activation.
  std::vector<PermIx> id_perms, ds_perms;
  for (PermIx p = 0; p < v.size(); ++p) {
    if (detail::activatable(w, p, false)) id_perms.push_back(p);
    if (detail::activatable(w, p, true)) ds_perms.push_back(p);
  }
  for (const auto& t : s.of_kind(TupleKind::Id3)) {
    if (w.is_sentinel(t.holder)) continue;
    bool fc = t.perm == v.full_control();
    bool any = t.target == w.any_user();
    if (!fc && !any) continue;
    for (PermIx p : id_perms) {
      if (!fc && p != t.perm) continue;
      if (any) {
        for (EntityIx e = 0; e < w.size(); ++e)
          if (detail::activation_target(w, p, e)) push(make_action(Schema::ActivateId3, {t.holder, p, e}));
      } else {
        push(make_action(Schema::ActivateId3, {t.holder, p, t.target}));
      }
    }
  }
  for (const auto& t : s.of_kind(TupleKind::Ds3)) {
    if (w.is_sentinel(t.holder)) continue;
    bool fc = t.perm == v.full_control();
    bool any = t.target == w.any_datastore();
    if (!fc && !any) continue;
    for (PermIx p : ds_perms) {
      if (!fc && p != t.perm) continue;
      if (any) {
        for (EntityIx e = 0; e < w.size(); ++e)
          if (datastore_exists(w, s, e)) push(make_action(Schema::ActivateDs3, {t.holder, p, e}));
      } else {
        push(make_action(Schema::ActivateDs3, {t.holder, p, t.target}));
      }
    }
  }

  // Attack schemas.
  auto enabled = [&](Schema sc) { return schema_enabled(w, sc, o); };
  for (EntityIx id : s.compromised()) {
    if (enabled(Schema::CopyObject) || enabled(Schema::MoveObject)) {
      for (const auto& g : s.held(TupleKind::Ds3, id)) {
        if (g.perm != v.get_object()) continue;
        for (const auto& p : s.held(TupleKind::Ds3, id)) {
          if (p.perm != v.put_object()) continue;
          push(make_action(Schema::CopyObject, {id, g.target, p.target}));
          push(make_action(Schema::MoveObject, {id, g.target, p.target}));
        }
      }
    }
    for (const auto& t : s.held(TupleKind::Ds3, id)) {
      if (t.perm == v.delete_bucket()) push(make_action(Schema::DeleteBucket, {id, t.target}));
      if (t.perm == v.put_object())
        for (const auto& k : s.held(TupleKind::Ds3, id))
          if (k.perm == v.create_key())
            push(make_action(Schema::EncryptSensitiveData, {id, t.target, k.target}));
    }
    for (const auto& t : s.held(TupleKind::Id3, id)) {
      auto role = v.info(t.perm).role;
      if (role == PermRole::IdentityDelete)
        push(make_action(Schema::DeleteIdentity, {id, t.perm, t.target}));
      if (role == PermRole::Persistence)
        push(make_action(Schema::GainPersistence, {id, t.perm, t.target}));
      if (role == PermRole::Login) push(make_action(Schema::ChangeUserLogin, {id, t.perm, t.target}));
    }
    if (w.dummy_datastore() != kNoEntity)
      push(make_action(Schema::CreatePublicBucket, {id, w.dummy_datastore()}));
    push(make_action(Schema::ReachAdminPolicy, {id}));
    push(make_action(Schema::EnableAttack, {id}));
  }

  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Application

/// Applies the effects of `a` to `s` in place without checking
/// preconditions. With `o.relaxed`, delete effects are skipped.
inline void apply_effects(const World& w, IamState& s, const GroundAction& a, const GenOptions& o) {
  const auto& v = w.vocab();
  switch (a.schema) {
    case Schema::SelectCompromisedUser: s.add_compromised(a.args[0]); break;
    case Schema::PermFlowBulk: {
      EntityIx src = a.args[0], dst = a.args[1];
      std::vector<RelTuple> added;
      for (auto kind : {TupleKind::Id3, TupleKind::Ds3, TupleKind::Id4, TupleKind::Ds4})
        for (const auto& t : s.held(kind, src)) added.push_back(t.held_by(dst));
      s.add_tuples(added.begin(), added.end());
      detail::bind_flow(w, s, src, dst, o);
      break;
    }
    case Schema::PermFlowId3:
    case Schema::PermFlowDs3: {
      auto kind = a.schema == Schema::PermFlowId3 ? TupleKind::Id3 : TupleKind::Ds3;
      detail::bind_flow(w, s, a.args[0], a.args[3], o);
      s.add_tuple(RelTuple{kind, a.args[3], kNoEntity, a.args[1], a.args[2]});
      break;
    }
    case Schema::PermFlowId4:
    case Schema::PermFlowDs4: {
      auto kind = a.schema == Schema::PermFlowId4 ? TupleKind::Id4 : TupleKind::Ds4;
      detail::bind_flow(w, s, a.args[1], a.args[0], o);
      s.add_tuple(RelTuple{kind, a.args[0], a.args[2], a.args[3], a.args[4]});
      break;
    }
    case Schema::AddId3: s.add_tuple(RelTuple::id3(a.args[1], a.args[2], a.args[3])); break;
    case Schema::AddDs3: s.add_tuple(RelTuple::ds3(a.args[1], a.args[2], a.args[3])); break;
    case Schema::ActivateId3: s.add_tuple(RelTuple::id3(a.args[0], a.args[1], a.args[2])); break;
    case Schema::ActivateDs3: s.add_tuple(RelTuple::ds3(a.args[0], a.args[1], a.args[2])); break;
    case Schema::CopyObject: s.add_flag(AttackType::SensitiveDataExfiltration); break;
    case Schema::MoveObject: {
      EntityIx ds1 = a.args[1], ds2 = a.args[2];
      s.add_sensitive(ds2);
      if (!o.relaxed) s.remove_sensitive(ds1);
      if (datastore_public(w, s, ds2)) s.add_flag(AttackType::SensitiveDataExfiltration);
      break;
    }
    case Schema::DeleteBucket:
    case Schema::DeleteIdentity: s.add_flag(AttackType::Impact); break;
    case Schema::CreatePublicBucket:
      s.add_created(a.args[1]);
      s.add_tuple(RelTuple::ds3(a.args[0], v.put_object(), a.args[1]));
      break;
    case Schema::EncryptSensitiveData: s.add_flag(AttackType::Ransomware); break;
    case Schema::GainPersistence:
      s.add_created(w.dummy_user());
      s.add_flag(AttackType::Persistence);
      break;
    case Schema::ChangeUserLogin: s.add_flag(AttackType::LateralMovement); break;
    case Schema::ReachAdminPolicy: s.add_flag(AttackType::PrivilegeEscalation); break;
    case Schema::EnableAttack: s.add_flag(Goal::conjunctive()); break;
  }
}

/// Successor state. Throws ContractError when `a` is not applicable.
inline IamState apply(const World& w, const IamState& s, const GroundAction& a, const GenOptions& o) {
  if (!is_applicable(w, s, a, o))
    throw ContractError("action not applicable: " + format_action(w, a));
  IamState next = s;
  apply_effects(w, next, a, o);
  return next;
}

inline bool attack_precondition(const World& w, const IamState& s, EntityIx id, Goal attack) {
  if (!s.is_compromised(id)) return false;
  GenOptions o;
  o.goal = attack;
  o.prune = true;
  for (const auto& a : applicable_actions(w, s, o)) {
    if (!is_attack_schema(a.schema) || a.args[0] != id) continue;
    // Schemas that only enable later attacks do not count.
    if (a.schema == Schema::CreatePublicBucket) continue;
    IamState next = s;
    apply_effects(w, next, a, o);
    if (next.has_flag(attack)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Facts, for planning-graph edges and diagnostics

struct Fact {
  enum class Kind : std::uint8_t { Tuple, Compromised, Created, Sensitive, Flag };
  Kind kind = Kind::Tuple;
  RelTuple tuple{};
  EntityIx entity = kNoEntity;
  std::uint8_t flag = 0;

  static Fact of(const RelTuple& t) { return {Kind::Tuple, t, kNoEntity, 0}; }
  static Fact compromised(EntityIx e) { return {Kind::Compromised, {}, e, 0}; }
  static Fact created(EntityIx e) { return {Kind::Created, {}, e, 0}; }
  static Fact sensitive(EntityIx e) { return {Kind::Sensitive, {}, e, 0}; }
  static Fact goal(Goal g) { return {Kind::Flag, {}, kNoEntity, g.bit()}; }

  friend bool operator==(const Fact&, const Fact&) = default;
  friend auto operator<=>(const Fact&, const Fact&) = default;
};

inline bool fact_holds(const IamState& s, const Fact& f) {
  switch (f.kind) {
    case Fact::Kind::Tuple: return s.contains(f.tuple);
    case Fact::Kind::Compromised: return s.is_compromised(f.entity);
    case Fact::Kind::Created: return s.is_created(f.entity);
    case Fact::Kind::Sensitive: return s.is_sensitive(f.entity);
    case Fact::Kind::Flag: return (s.attack_flags() >> f.flag) & 1u;
  }
  return false;
}

/// Positive facts of `s` that the (applicable) action `a` relies on. For
/// disjunctive conditions, every satisfied disjunct is listed.
inline std::vector<Fact> precondition_facts(const World& w, const IamState& s, const GroundAction& a) {
  const auto& v = w.vocab();
  std::vector<Fact> f;
  auto tuple = [&](const RelTuple& t) {
    if (s.contains(t)) f.push_back(Fact::of(t));
  };
  auto flow = [&](EntityIx src, EntityIx dst) {
    for (const auto& t : s.held(TupleKind::Id3, dst))
      if (t.target == src && v.is_flow_activating(t.perm)) f.push_back(Fact::of(t));
  };
  auto comp = [&](EntityIx id) { f.push_back(Fact::compromised(id)); };
  switch (a.schema) {
    case Schema::SelectCompromisedUser: break;
    case Schema::PermFlowBulk: flow(a.args[0], a.args[1]); break;
    case Schema::PermFlowId3:
      flow(a.args[0], a.args[3]);
      tuple(RelTuple::id3(a.args[0], a.args[1], a.args[2]));
      break;
    case Schema::PermFlowDs3:
      flow(a.args[0], a.args[3]);
      tuple(RelTuple::ds3(a.args[0], a.args[1], a.args[2]));
      break;
    case Schema::PermFlowId4:
      flow(a.args[1], a.args[0]);
      tuple(RelTuple::id4(a.args[1], a.args[2], a.args[3], a.args[4]));
      break;
    case Schema::PermFlowDs4:
      flow(a.args[1], a.args[0]);
      tuple(RelTuple::ds4(a.args[1], a.args[2], a.args[3], a.args[4]));
      break;
    case Schema::AddId3:
    case Schema::AddDs3: {
      bool ds = a.schema == Schema::AddDs3;
      comp(a.args[0]);
      auto mk = [&](EntityIx subj) {
        return ds ? RelTuple::ds4(a.args[0], subj, a.args[2], a.args[3])
                  : RelTuple::id4(a.args[0], subj, a.args[2], a.args[3]);
      };
      tuple(mk(a.args[1]));
      tuple(mk(w.any_user()));
      break;
    }
    case Schema::ActivateId3:
      tuple(RelTuple::id3(a.args[0], v.full_control(), a.args[2]));
      tuple(RelTuple::id3(a.args[0], v.full_control(), w.any_user()));
      tuple(RelTuple::id3(a.args[0], a.args[1], w.any_user()));
      break;
    case Schema::ActivateDs3:
      tuple(RelTuple::ds3(a.args[0], v.full_control(), a.args[2]));
      tuple(RelTuple::ds3(a.args[0], v.full_control(), w.any_datastore()));
      tuple(RelTuple::ds3(a.args[0], a.args[1], w.any_datastore()));
      break;
    case Schema::CopyObject:
    case Schema::MoveObject:
      comp(a.args[0]);
      f.push_back(Fact::sensitive(a.args[1]));
      tuple(RelTuple::ds3(a.args[0], v.get_object(), a.args[1]));
      tuple(RelTuple::ds3(a.args[0], v.put_object(), a.args[2]));
      if (a.schema == Schema::MoveObject) tuple(RelTuple::ds3(a.args[0], v.delete_object(), a.args[1]));
      break;
    case Schema::DeleteBucket:
      comp(a.args[0]);
      f.push_back(Fact::sensitive(a.args[1]));
      tuple(RelTuple::ds3(a.args[0], v.delete_bucket(), a.args[1]));
      break;
    case Schema::DeleteIdentity:
    case Schema::GainPersistence:
    case Schema::ChangeUserLogin:
      comp(a.args[0]);
      tuple(RelTuple::id3(a.args[0], a.args[1], a.args[2]));
      break;
    case Schema::CreatePublicBucket:
      comp(a.args[0]);
      tuple(RelTuple::ds3(a.args[0], v.create_bucket(), w.any_datastore()));
      tuple(RelTuple::ds3(a.args[0], v.put_bucket_acl(), w.any_datastore()));
      tuple(RelTuple::ds3(a.args[0], v.full_control(), w.any_datastore()));
      break;
    case Schema::EncryptSensitiveData:
      comp(a.args[0]);
      f.push_back(Fact::sensitive(a.args[1]));
      tuple(RelTuple::ds3(a.args[0], v.put_object(), a.args[1]));
      tuple(RelTuple::ds3(a.args[0], v.create_key(), a.args[2]));
      break;
    case Schema::ReachAdminPolicy:
      comp(a.args[0]);
      tuple(RelTuple::id3(a.args[0], v.has_policy(), w.admin_policy()));
      break;
    case Schema::EnableAttack:
      comp(a.args[0]);
      if (w.conjunctive_attack())
        for (const auto& t : w.conjunctive_attack()->required) tuple(t);
      break;
  }
  return f;
}

/// Facts present in `after` but not in `before`.
inline std::vector<Fact> added_facts(const IamState& before, const IamState& after) {
  std::vector<Fact> f;
  for (const auto& t : after.tuples())
    if (!before.contains(t)) f.push_back(Fact::of(t));
  for (auto e : after.compromised())
    if (!before.is_compromised(e)) f.push_back(Fact::compromised(e));
  for (auto e : after.created())
    if (!before.is_created(e)) f.push_back(Fact::created(e));
  for (auto e : after.sensitive())
    if (!before.is_sensitive(e)) f.push_back(Fact::sensitive(e));
  auto flags = static_cast<std::uint8_t>(after.attack_flags() & ~before.attack_flags());
  for (std::uint8_t b = 0; b < 8; ++b)
    if ((flags >> b) & 1u) f.push_back(Fact{Fact::Kind::Flag, {}, kNoEntity, b});
  return f;
}

}  // namespace cloudlens
