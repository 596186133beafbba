#pragma once

// Relation-tuple state model: entities, the interned World they live in,
// 3-/4-ary permission tuples and the immutable IAM state value.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/container/flat_map.hpp>
#include <boost/container/flat_set.hpp>
#include <boost/container_hash/hash.hpp>

#include "cloudlens/error.hpp"
#include "cloudlens/vocabulary.hpp"

namespace cloudlens {

using EntityIx = std::uint32_t;
inline constexpr EntityIx kNoEntity = std::numeric_limits<EntityIx>::max();

inline constexpr std::string_view kAnyUser = "any_user";
inline constexpr std::string_view kAnyDatastore = "any_datastore";
inline constexpr std::string_view kDummyUser = "dummy_user";
inline constexpr std::string_view kDummyDatastore = "dummy_datastore";
inline constexpr std::string_view kAdminPolicy = "adminPolicy";

struct EntityId {
  std::string name;
  std::string account;

  friend bool operator==(const EntityId&, const EntityId&) = default;
  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

enum class IdentityKind : std::uint8_t { User, Group, Role, Policy };

struct Identity {
  EntityId id;
  IdentityKind kind = IdentityKind::User;

  friend bool operator==(const Identity&, const Identity&) = default;
};

struct Datastore {
  EntityId id;
  bool is_public = false;
  bool has_sensitive_data = false;
  bool versioning_enabled = false;
  bool mfa_delete_enabled = false;
  bool is_dummy = false;

  friend bool operator==(const Datastore&, const Datastore&) = default;
};

enum class EntityKind : std::uint8_t { User, Group, Role, Policy, Datastore, AnyUser, AnyDatastore };

inline EntityKind to_entity_kind(IdentityKind k) {
  switch (k) {
    case IdentityKind::User: return EntityKind::User;
    case IdentityKind::Group: return EntityKind::Group;
    case IdentityKind::Role: return EntityKind::Role;
    case IdentityKind::Policy: return EntityKind::Policy;
  }
  return EntityKind::User;
}

inline std::string_view to_string(IdentityKind k) {
  switch (k) {
    case IdentityKind::User: return "User";
    case IdentityKind::Group: return "Group";
    case IdentityKind::Role: return "Role";
    case IdentityKind::Policy: return "Policy";
  }
  return "?";
}

inline std::optional<IdentityKind> identity_kind_from_string(std::string_view s) {
  if (s == "User") return IdentityKind::User;
  if (s == "Group") return IdentityKind::Group;
  if (s == "Role") return IdentityKind::Role;
  if (s == "Policy") return IdentityKind::Policy;
  return std::nullopt;
}

enum class AttackType : std::uint8_t {
  SensitiveDataExfiltration,
  Impact,
  Persistence,
  LateralMovement,
  PrivilegeEscalation,
  Ransomware,
};

inline constexpr std::array<AttackType, 6> kAllAttackTypes = {
    AttackType::SensitiveDataExfiltration, AttackType::Impact,
    AttackType::Persistence,               AttackType::LateralMovement,
    AttackType::PrivilegeEscalation,       AttackType::Ransomware,
};

/// Snake-case name; doubles as the PDDL goal predicate.
inline std::string_view to_string(AttackType a) {
  switch (a) {
    case AttackType::SensitiveDataExfiltration: return "sensitive_data_exfiltration";
    case AttackType::Impact: return "impact";
    case AttackType::Persistence: return "persistence";
    case AttackType::LateralMovement: return "lateral_movement";
    case AttackType::PrivilegeEscalation: return "privilege_escalation";
    case AttackType::Ransomware: return "ransomware";
  }
  return "?";
}

inline std::optional<AttackType> attack_type_from_string(std::string_view s) {
  for (auto a : kAllAttackTypes)
    if (to_string(a) == s) return a;
  if (s == "exfiltration") return AttackType::SensitiveDataExfiltration;
  return std::nullopt;
}

/// Planner goal: one of the six attack types, or the conjunctive attack a
/// World may register for reduction instances.
class Goal {
 public:
  constexpr Goal(AttackType a) : bit_(static_cast<std::uint8_t>(a)) {}  // NOLINT
  static constexpr Goal conjunctive() { return Goal(kConjunctiveBit); }

  constexpr std::uint8_t bit() const noexcept { return bit_; }
  constexpr std::uint8_t mask() const noexcept { return static_cast<std::uint8_t>(1u << bit_); }
  constexpr bool is_conjunctive() const noexcept { return bit_ == kConjunctiveBit; }
  constexpr AttackType attack() const { return static_cast<AttackType>(bit_); }

  friend constexpr bool operator==(Goal, Goal) = default;

 private:
  static constexpr std::uint8_t kConjunctiveBit = 6;
  explicit constexpr Goal(std::uint8_t bit) : bit_(bit) {}
  std::uint8_t bit_;
};

inline std::string to_string(Goal g) {
  return g.is_conjunctive() ? std::string("setcover") : std::string(to_string(g.attack()));
}

enum class TupleKind : std::uint8_t { Id3, Ds3, Id4, Ds4 };

inline std::string_view to_string(TupleKind k) {
  switch (k) {
    case TupleKind::Id3: return "id3";
    case TupleKind::Ds3: return "ds3";
    case TupleKind::Id4: return "id4";
    case TupleKind::Ds4: return "ds4";
  }
  return "?";
}

inline bool is_four(TupleKind k) { return k == TupleKind::Id4 || k == TupleKind::Ds4; }
inline bool targets_datastore(TupleKind k) { return k == TupleKind::Ds3 || k == TupleKind::Ds4; }

/// One permission relation. 3-tuples leave `subject` as kNoEntity.
/// Ordering is (kind, holder, subject, perm, target) so all tuples of one
/// holder and kind form a contiguous range in a sorted state.
struct RelTuple {
  TupleKind kind = TupleKind::Id3;
  EntityIx holder = kNoEntity;
  EntityIx subject = kNoEntity;
  PermIx perm = 0;
  EntityIx target = kNoEntity;

  static constexpr RelTuple id3(EntityIx src, PermIx p, EntityIx dst) {
    return {TupleKind::Id3, src, kNoEntity, p, dst};
  }
  static constexpr RelTuple ds3(EntityIx src, PermIx p, EntityIx ds) {
    return {TupleKind::Ds3, src, kNoEntity, p, ds};
  }
  static constexpr RelTuple id4(EntityIx actor, EntityIx subj, PermIx p, EntityIx dst) {
    return {TupleKind::Id4, actor, subj, p, dst};
  }
  static constexpr RelTuple ds4(EntityIx actor, EntityIx subj, PermIx p, EntityIx ds) {
    return {TupleKind::Ds4, actor, subj, p, ds};
  }
  /// 3-tuple a 4-tuple grants (the subject takes the holder slot).
  constexpr RelTuple granted() const {
    return {kind == TupleKind::Id4 ? TupleKind::Id3 : TupleKind::Ds3, subject, kNoEntity, perm,
            target};
  }
  /// Same relation re-held by another identity (permission flow).
  constexpr RelTuple held_by(EntityIx h) const { return {kind, h, subject, perm, target}; }

  friend constexpr bool operator==(const RelTuple&, const RelTuple&) = default;
  friend constexpr auto operator<=>(const RelTuple&, const RelTuple&) = default;
};

inline std::size_t hash_value(const RelTuple& t) {
  std::size_t seed = static_cast<std::size_t>(t.kind);
  boost::hash_combine(seed, t.holder);
  boost::hash_combine(seed, t.subject);
  boost::hash_combine(seed, t.perm);
  boost::hash_combine(seed, t.target);
  return seed;
}

struct EntityInfo {
  std::string name;
  std::string account;
  EntityKind kind = EntityKind::User;
  bool is_public = false;
  bool versioning_enabled = false;
  bool mfa_delete_enabled = false;
  bool is_dummy = false;
};

/// Attack registered by reduction instances: `compromised(id)` plus every
/// listed tuple.
struct ConjunctiveAttack {
  std::vector<RelTuple> required;
};

/// Interned universe of one planning problem. Entity and permission
/// indices follow name order, so comparing indices compares names.
class World {
 public:
  World() : World(std::vector<EntityInfo>{}, Vocabulary::standard()) {}

  /// Adds the reserved entities (sentinels, adminPolicy, one dummy user and
  /// one dummy datastore) unless already declared where allowed.
  World(std::vector<EntityInfo> declared, Vocabulary vocab) : vocab_(std::move(vocab)) {
    bool has_admin = false;
    bool has_dummy_ds = false;
    for (const auto& e : declared) {
      if (e.name.empty()) throw SchemaError("entity with empty name");
      if (e.name == kAnyUser || e.name == kAnyDatastore || e.name == kDummyUser)
        throw SchemaError("reserved entity name '" + e.name + "' may not be declared");
      if (e.name == kAdminPolicy) {
        if (e.kind != EntityKind::Policy)
          throw SchemaError("'adminPolicy' is reserved for a Policy-kind identity");
        has_admin = true;
      }
      if (e.kind == EntityKind::Datastore && e.is_dummy) {
        if (has_dummy_ds) throw SchemaError("at most one dummy datastore may be declared");
        has_dummy_ds = true;
      }
    }
    declared.push_back({std::string(kAnyUser), "", EntityKind::AnyUser});
    declared.push_back({std::string(kAnyDatastore), "", EntityKind::AnyDatastore});
    EntityInfo dummy_user{std::string(kDummyUser), "", EntityKind::User};
    dummy_user.is_dummy = true;
    declared.push_back(dummy_user);
    if (!has_admin) declared.push_back({std::string(kAdminPolicy), "", EntityKind::Policy});
    if (!has_dummy_ds) {
      EntityInfo d{std::string(kDummyDatastore), "", EntityKind::Datastore};
      d.is_dummy = true;
      declared.push_back(d);
    }
    std::sort(declared.begin(), declared.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    entities_ = std::move(declared);
    for (EntityIx i = 0; i < entities_.size(); ++i) {
      if (!by_name_.emplace(entities_[i].name, i).second)
        throw SchemaError("duplicate entity name '" + entities_[i].name + "'");
      const auto& e = entities_[i];
      if (e.kind == EntityKind::AnyUser) any_user_ = i;
      if (e.kind == EntityKind::AnyDatastore) any_datastore_ = i;
      if (e.name == kAdminPolicy) admin_policy_ = i;
      if (e.name == kDummyUser) dummy_user_ = i;
      if (e.kind == EntityKind::Datastore && e.is_dummy) dummy_datastore_ = i;
      if (e.kind == EntityKind::User && !e.is_dummy) users_.push_back(i);
      if (is_identity(i) && !e.is_dummy) identities_.push_back(i);
      if (e.kind == EntityKind::Datastore && !e.is_dummy) datastores_.push_back(i);
    }
  }

  const Vocabulary& vocab() const noexcept { return vocab_; }
  std::size_t size() const noexcept { return entities_.size(); }
  const EntityInfo& entity(EntityIx ix) const { return entities_.at(ix); }
  const std::string& name(EntityIx ix) const { return entities_.at(ix).name; }
  EntityKind kind(EntityIx ix) const { return entities_[ix].kind; }

  std::optional<EntityIx> find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }
  EntityIx require(std::string_view name) const {
    if (auto ix = find(name)) return *ix;
    throw Error("unknown entity '" + std::string(name) + "'");
  }

  bool is_identity(EntityIx ix) const {
    auto k = entities_[ix].kind;
    return k == EntityKind::User || k == EntityKind::Group || k == EntityKind::Role ||
           k == EntityKind::Policy;
  }
  bool is_datastore(EntityIx ix) const { return entities_[ix].kind == EntityKind::Datastore; }
  bool is_sentinel(EntityIx ix) const { return ix == any_user_ || ix == any_datastore_; }
  bool is_dummy(EntityIx ix) const { return entities_[ix].is_dummy; }
  bool is_user(EntityIx ix) const {
    return entities_[ix].kind == EntityKind::User && !entities_[ix].is_dummy;
  }

  EntityIx any_user() const noexcept { return any_user_; }
  EntityIx any_datastore() const noexcept { return any_datastore_; }
  EntityIx admin_policy() const noexcept { return admin_policy_; }
  EntityIx dummy_user() const noexcept { return dummy_user_; }
  EntityIx dummy_datastore() const noexcept { return dummy_datastore_; }

  /// Non-dummy User-kind identities, name order.
  const std::vector<EntityIx>& users() const noexcept { return users_; }
  /// Non-dummy identities of every kind, name order.
  const std::vector<EntityIx>& identities() const noexcept { return identities_; }
  /// Declared (non-dummy) datastores, name order.
  const std::vector<EntityIx>& datastores() const noexcept { return datastores_; }

  const std::optional<ConjunctiveAttack>& conjunctive_attack() const noexcept {
    return conjunctive_;
  }
  void set_conjunctive_attack(ConjunctiveAttack a) { conjunctive_ = std::move(a); }

 private:
  Vocabulary vocab_;
  std::vector<EntityInfo> entities_;
  std::unordered_map<std::string, EntityIx> by_name_;
  std::vector<EntityIx> users_, identities_, datastores_;
  EntityIx any_user_ = kNoEntity, any_datastore_ = kNoEntity, admin_policy_ = kNoEntity,
           dummy_user_ = kNoEntity, dummy_datastore_ = kNoEntity;
  std::optional<ConjunctiveAttack> conjunctive_;
};

/// IAM state: tuples plus status predicates. A value type; operations that
/// "modify" a state work on a copy.
class IamState {
 public:
  using TupleSet = boost::container::flat_set<RelTuple>;
  using EntitySet = boost::container::flat_set<EntityIx>;
  using FlowMap = boost::container::flat_map<EntityIx, EntityIx>;

  const TupleSet& tuples() const noexcept { return tuples_; }
  const EntitySet& compromised() const noexcept { return compromised_; }
  const FlowMap& flow_bound() const noexcept { return flow_bound_; }
  std::uint8_t attack_flags() const noexcept { return flags_; }
  const EntitySet& created() const noexcept { return created_; }
  /// Datastores currently holding sensitive data (moves relocate it).
  const EntitySet& sensitive() const noexcept { return sensitive_; }

  bool contains(const RelTuple& t) const { return tuples_.contains(t); }
  bool is_compromised(EntityIx e) const { return compromised_.contains(e); }
  bool is_created(EntityIx e) const { return created_.contains(e); }
  bool is_sensitive(EntityIx ds) const { return sensitive_.contains(ds); }
  bool has_flag(Goal g) const { return (flags_ & g.mask()) != 0; }
  std::optional<EntityIx> bound_source(EntityIx target) const {
    auto it = flow_bound_.find(target);
    if (it == flow_bound_.end()) return std::nullopt;
    return it->second;
  }

  /// Tuples of one kind held by `holder`, in order.
  std::span<const RelTuple> held(TupleKind kind, EntityIx holder) const {
    auto lo = tuples_.lower_bound(RelTuple{kind, holder, 0, 0, 0});
    auto hi = tuples_.upper_bound(RelTuple{kind, holder, kNoEntity, std::numeric_limits<PermIx>::max(), kNoEntity});
    return slice(lo, hi);
  }
  /// Every tuple of one kind, in order.
  std::span<const RelTuple> of_kind(TupleKind kind) const {
    auto lo = tuples_.lower_bound(RelTuple{kind, 0, 0, 0, 0});
    auto hi = tuples_.upper_bound(RelTuple{kind, kNoEntity, kNoEntity, std::numeric_limits<PermIx>::max(), kNoEntity});
    return slice(lo, hi);
  }

  // Mutators. Callers treat shared states as immutable and mutate only
  // private copies.
  bool add_tuple(const RelTuple& t) { return tuples_.insert(t).second; }
  template <class It>
  void add_tuples(It first, It last) { tuples_.insert(first, last); }
  void add_compromised(EntityIx e) { compromised_.insert(e); }
  void set_flow_bound(EntityIx target, EntityIx source) { flow_bound_[target] = source; }
  void add_flag(Goal g) { flags_ = static_cast<std::uint8_t>(flags_ | g.mask()); }
  void add_created(EntityIx e) { created_.insert(e); }
  void add_sensitive(EntityIx ds) { sensitive_.insert(ds); }
  void remove_sensitive(EntityIx ds) { sensitive_.erase(ds); }

  /// Set union of every field; flow bindings of `other` win on conflict.
  void merge(const IamState& other) {
    tuples_.insert(other.tuples_.begin(), other.tuples_.end());
    compromised_.insert(other.compromised_.begin(), other.compromised_.end());
    for (auto [k, v] : other.flow_bound_) flow_bound_[k] = v;
    flags_ = static_cast<std::uint8_t>(flags_ | other.flags_);
    created_.insert(other.created_.begin(), other.created_.end());
    sensitive_.insert(other.sensitive_.begin(), other.sensitive_.end());
  }

  friend bool operator==(const IamState&, const IamState&) = default;

  std::size_t hash() const {
    std::size_t seed = flags_;
    boost::hash_combine(seed, boost::hash_range(tuples_.begin(), tuples_.end()));
    boost::hash_combine(seed, boost::hash_range(compromised_.begin(), compromised_.end()));
    for (auto [k, v] : flow_bound_) {
      boost::hash_combine(seed, k);
      boost::hash_combine(seed, v);
    }
    boost::hash_combine(seed, boost::hash_range(created_.begin(), created_.end()));
    boost::hash_combine(seed, boost::hash_range(sensitive_.begin(), sensitive_.end()));
    return seed;
  }

 private:
  std::span<const RelTuple> slice(TupleSet::const_iterator lo, TupleSet::const_iterator hi) const {
    if (lo == hi) return {};
    return {&*lo, static_cast<std::size_t>(hi - lo)};
  }

  TupleSet tuples_;
  EntitySet compromised_;
  FlowMap flow_bound_;
  std::uint8_t flags_ = 0;
  EntitySet created_;
  EntitySet sensitive_;
};

struct IamStateHash {
  std::size_t operator()(const IamState& s) const { return s.hash(); }
};

/// Returns a copy of `state` that also contains `t`.
inline IamState state_insert(const IamState& state, const RelTuple& t) {
  IamState next = state;
  next.add_tuple(t);
  return next;
}

inline bool state_contains(const IamState& state, const RelTuple& t) { return state.contains(t); }

/// A datastore that exists now: declared, or a placeholder already created.
inline bool datastore_exists(const World& w, const IamState& s, EntityIx ds) {
  return w.is_datastore(ds) && (!w.is_dummy(ds) || s.is_created(ds));
}

/// Public datastores: declared public, or a created placeholder.
inline bool datastore_public(const World& w, const IamState& s, EntityIx ds) {
  if (!w.is_datastore(ds)) return false;
  if (w.is_dummy(ds)) return s.is_created(ds);
  return w.entity(ds).is_public;
}

}  // namespace cloudlens
