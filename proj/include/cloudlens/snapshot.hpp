#pragma once

// Cloud inventory snapshot: identities, datastores, policy documents and the
// relations between them, read from and written to `cloudlens-snapshot/1`
// JSON documents.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "cloudlens/error.hpp"
#include "cloudlens/model.hpp"

namespace cloudlens {

inline constexpr std::string_view kSnapshotSchema = "cloudlens-snapshot/1";

enum class Effect : std::uint8_t { Allow, Deny };

struct PolicyStatement {
  Effect effect = Effect::Allow;
  std::vector<std::string> actions;
  std::vector<std::string> resources;
  std::optional<nlohmann::json> condition;  // kept verbatim

  friend bool operator==(const PolicyStatement&, const PolicyStatement&) = default;
};

struct PolicyDocument {
  EntityId id;
  std::vector<PolicyStatement> statements;

  friend bool operator==(const PolicyDocument&, const PolicyDocument&) = default;
};

struct Attachment {
  std::string identity;
  std::string policy;
  friend bool operator==(const Attachment&, const Attachment&) = default;
};

struct Membership {
  std::string user;
  std::string group;
  friend bool operator==(const Membership&, const Membership&) = default;
};

struct TrustEntry {
  std::string principal;  // name or glob; "*" means any user
  std::string role;
  friend bool operator==(const TrustEntry&, const TrustEntry&) = default;
};

struct Snapshot {
  std::vector<Identity> identities;
  std::vector<Datastore> datastores;
  std::vector<PolicyDocument> policies;
  std::vector<Attachment> attachments;
  std::vector<Membership> memberships;
  std::vector<TrustEntry> trust;
  std::vector<std::string> notes;  // provenance annotations, not semantics

  friend bool operator==(const Snapshot&, const Snapshot&) = default;

  /// Kind of a declared name; policy documents count as Policy identities.
  std::optional<EntityKind> kind_of(std::string_view name) const {
    for (const auto& i : identities)
      if (i.id.name == name) return to_entity_kind(i.kind);
    for (const auto& p : policies)
      if (p.id.name == name) return EntityKind::Policy;
    for (const auto& d : datastores)
      if (d.id.name == name) return EntityKind::Datastore;
    return std::nullopt;
  }

  const PolicyDocument* policy(std::string_view name) const {
    for (const auto& p : policies)
      if (p.id.name == name) return &p;
    return nullptr;
  }

  /// Every declared entity with its interned attributes.
  std::vector<EntityInfo> entity_infos() const {
    std::vector<EntityInfo> out;
    for (const auto& i : identities)
      out.push_back({i.id.name, i.id.account, to_entity_kind(i.kind)});
    for (const auto& p : policies) out.push_back({p.id.name, p.id.account, EntityKind::Policy});
    for (const auto& d : datastores) {
      EntityInfo e{d.id.name, d.id.account, EntityKind::Datastore};
      e.is_public = d.is_public;
      e.versioning_enabled = d.versioning_enabled;
      e.mfa_delete_enabled = d.mfa_delete_enabled;
      e.is_dummy = d.is_dummy;
      out.push_back(std::move(e));
    }
    return out;
  }
};

/// Throws SchemaError on duplicate names, reserved names, or dangling
/// references.
inline void validate_snapshot(const Snapshot& s) {
  std::set<std::string> seen;
  auto declare = [&](const EntityId& id) {
    if (id.name.empty()) throw SchemaError("entity with empty name");
    if (id.name == kAnyUser || id.name == kAnyDatastore || id.name == kDummyUser)
      throw SchemaError("reserved entity name '" + id.name + "' may not be declared");
    if (!seen.insert(id.name).second) throw SchemaError("duplicate entity name '" + id.name + "'");
  };
  for (const auto& i : s.identities) {
    declare(i.id);
    if (i.id.name == kAdminPolicy && i.kind != IdentityKind::Policy)
      throw SchemaError("'adminPolicy' is reserved for a Policy-kind identity");
  }
  for (const auto& p : s.policies) declare(p.id);
  std::size_t dummies = 0;
  for (const auto& d : s.datastores) {
    declare(d.id);
    if (d.is_dummy) {
      if (++dummies > 1) throw SchemaError("at most one dummy datastore may be declared");
      if (d.is_public || d.has_sensitive_data)
        throw SchemaError("dummy datastore '" + d.id.name + "' must start private and empty");
    }
  }
  for (const auto& p : s.policies) {
    for (std::size_t k = 0; k < p.statements.size(); ++k) {
      const auto& st = p.statements[k];
      if (st.actions.empty() || st.resources.empty())
        throw SchemaError("policy '" + p.id.name + "' statement " + std::to_string(k) +
                          ": actions and resources must be non-empty");
    }
  }

  auto expect = [&](const std::string& name, std::initializer_list<EntityKind> kinds,
                    std::string_view where) {
    auto k = s.kind_of(name);
    if (!k) throw SchemaError(std::string(where) + " references undeclared entity '" + name + "'");
    if (std::find(kinds.begin(), kinds.end(), *k) == kinds.end())
      throw SchemaError(std::string(where) + " references '" + name + "' of the wrong kind");
  };
  for (const auto& a : s.attachments) {
    expect(a.identity, {EntityKind::User, EntityKind::Group, EntityKind::Role}, "attachment");
    expect(a.policy, {EntityKind::Policy}, "attachment");
  }
  for (const auto& m : s.memberships) {
    expect(m.user, {EntityKind::User}, "membership");
    expect(m.group, {EntityKind::Group}, "membership");
  }
  for (const auto& t : s.trust) {
    if (t.principal.empty()) throw SchemaError("trust entry with empty principal");
    expect(t.role, {EntityKind::Role}, "trust entry");
  }
}

namespace detail {

inline EntityId entity_id_from_json(const nlohmann::json& j, std::string_view where) {
  if (j.is_string()) return {j.get<std::string>(), ""};
  if (j.is_object() && j.contains("name") && j["name"].is_string()) {
    EntityId id{j["name"].get<std::string>(), ""};
    if (j.contains("account")) {
      if (!j["account"].is_string())
        throw SchemaError(std::string(where) + ": account must be a string");
      id.account = j["account"].get<std::string>();
    }
    return id;
  }
  throw SchemaError(std::string(where) + ": id must be a string or {name, account}");
}

inline nlohmann::ordered_json entity_id_to_json(const EntityId& id) {
  if (id.account.empty()) return id.name;
  return nlohmann::ordered_json{{"name", id.name}, {"account", id.account}};
}

inline const nlohmann::json* field(const nlohmann::json& obj, std::string_view a,
                                   std::string_view b = {}) {
  if (auto it = obj.find(a); it != obj.end()) return &*it;
  if (!b.empty())
    if (auto it = obj.find(b); it != obj.end()) return &*it;
  return nullptr;
}

inline std::vector<std::string> string_list(const nlohmann::json& j, std::string_view where) {
  std::vector<std::string> out;
  if (j.is_string()) {
    out.push_back(j.get<std::string>());
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_string()) throw SchemaError(std::string(where) + ": expected strings");
      out.push_back(e.get<std::string>());
    }
  } else {
    throw SchemaError(std::string(where) + ": expected a string or list of strings");
  }
  return out;
}

inline std::string required_string(const nlohmann::json& obj, std::string_view key,
                                   std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw SchemaError(std::string(where) + ": missing string field '" + std::string(key) + "'");
  return it->get<std::string>();
}

inline bool optional_bool(const nlohmann::json& obj, std::string_view key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_boolean())
    throw SchemaError(std::string(where) + ": field '" + std::string(key) + "' must be boolean");
  return it->get<bool>();
}

inline const nlohmann::json& array_field(const nlohmann::json& doc, std::string_view key) {
  static const nlohmann::json kEmpty = nlohmann::json::array();
  auto it = doc.find(key);
  if (it == doc.end()) return kEmpty;
  if (!it->is_array()) throw SchemaError("'" + std::string(key) + "' must be an array");
  return *it;
}

}  // namespace detail

/// Parses and validates a snapshot document.
inline Snapshot parse_snapshot(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("snapshot must be a JSON object");
  static const std::set<std::string> known = {"schema",      "identities",  "datastores",
                                              "policies",    "attachments", "memberships",
                                              "trust",       "notes"};
  for (const auto& [key, _] : doc.items())
    if (!known.contains(key)) throw SchemaError("unknown top-level key '" + key + "'");
  if (auto it = doc.find("schema"); it != doc.end()) {
    if (!it->is_string() || it->get<std::string>() != kSnapshotSchema)
      throw SchemaError("unsupported schema (expected " + std::string(kSnapshotSchema) + ")");
  }

  Snapshot s;
  for (const auto& j : detail::array_field(doc, "identities")) {
    if (!j.is_object() || !j.contains("id")) throw SchemaError("identity entries need an 'id'");
    Identity i;
    i.id = detail::entity_id_from_json(j["id"], "identity");
    auto kind = identity_kind_from_string(detail::required_string(j, "kind", "identity " + i.id.name));
    if (!kind) throw SchemaError("identity " + i.id.name + ": unknown kind");
    i.kind = *kind;
    s.identities.push_back(std::move(i));
  }
  for (const auto& j : detail::array_field(doc, "datastores")) {
    if (!j.is_object() || !j.contains("id")) throw SchemaError("datastore entries need an 'id'");
    Datastore d;
    d.id = detail::entity_id_from_json(j["id"], "datastore");
    auto where = "datastore " + d.id.name;
    d.is_public = detail::optional_bool(j, "is_public", where);
    d.has_sensitive_data = detail::optional_bool(j, "has_sensitive_data", where);
    d.versioning_enabled = detail::optional_bool(j, "versioning_enabled", where);
    d.mfa_delete_enabled = detail::optional_bool(j, "mfa_delete_enabled", where);
    d.is_dummy = detail::optional_bool(j, "is_dummy", where);
    s.datastores.push_back(std::move(d));
  }
  for (const auto& j : detail::array_field(doc, "policies")) {
    if (!j.is_object() || !j.contains("id")) throw SchemaError("policy entries need an 'id'");
    PolicyDocument p;
    p.id = detail::entity_id_from_json(j["id"], "policy");
    auto where = "policy " + p.id.name;
    auto st_it = j.find("statements");
    if (st_it == j.end() || !st_it->is_array()) throw SchemaError(where + ": missing 'statements'");
    for (const auto& sj : *st_it) {
      if (!sj.is_object()) throw SchemaError(where + ": statements must be objects");
      PolicyStatement st;
      auto* effect = detail::field(sj, "effect", "Effect");
      if (!effect || !effect->is_string()) throw SchemaError(where + ": statement without effect");
      auto e = effect->get<std::string>();
      if (e == "Allow") {
        st.effect = Effect::Allow;
      } else if (e == "Deny") {
        st.effect = Effect::Deny;
      } else {
        throw SchemaError(where + ": effect must be Allow or Deny");
      }
      auto* actions = detail::field(sj, "actions", "Action");
      auto* resources = detail::field(sj, "resources", "Resource");
      if (!actions || !resources) throw SchemaError(where + ": statement needs actions and resources");
      st.actions = detail::string_list(*actions, where);
      st.resources = detail::string_list(*resources, where);
      if (auto* c = detail::field(sj, "condition", "Condition")) st.condition = *c;
      p.statements.push_back(std::move(st));
    }
    s.policies.push_back(std::move(p));
  }
  for (const auto& j : detail::array_field(doc, "attachments"))
    s.attachments.push_back({detail::required_string(j, "identity", "attachment"),
                             detail::required_string(j, "policy", "attachment")});
  for (const auto& j : detail::array_field(doc, "memberships"))
    s.memberships.push_back({detail::required_string(j, "user", "membership"),
                             detail::required_string(j, "group", "membership")});
  for (const auto& j : detail::array_field(doc, "trust"))
    s.trust.push_back({detail::required_string(j, "principal", "trust entry"),
                       detail::required_string(j, "role", "trust entry")});
  for (const auto& j : detail::array_field(doc, "notes")) {
    if (!j.is_string()) throw SchemaError("notes must be strings");
    s.notes.push_back(j.get<std::string>());
  }
  validate_snapshot(s);
  return s;
}

/// Canonical JSON form (stable key order, defaults omitted).
inline nlohmann::ordered_json snapshot_to_json(const Snapshot& s) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["schema"] = kSnapshotSchema;
  if (!s.notes.empty()) doc["notes"] = s.notes;
  doc["identities"] = ordered_json::array();
  for (const auto& i : s.identities)
    doc["identities"].push_back({{"id", detail::entity_id_to_json(i.id)}, {"kind", to_string(i.kind)}});
  doc["datastores"] = ordered_json::array();
  for (const auto& d : s.datastores) {
    ordered_json j{{"id", detail::entity_id_to_json(d.id)}};
    if (d.is_public) j["is_public"] = true;
    if (d.has_sensitive_data) j["has_sensitive_data"] = true;
    if (d.versioning_enabled) j["versioning_enabled"] = true;
    if (d.mfa_delete_enabled) j["mfa_delete_enabled"] = true;
    if (d.is_dummy) j["is_dummy"] = true;
    doc["datastores"].push_back(std::move(j));
  }
  doc["policies"] = ordered_json::array();
  for (const auto& p : s.policies) {
    ordered_json pj{{"id", detail::entity_id_to_json(p.id)}, {"statements", ordered_json::array()}};
    for (const auto& st : p.statements) {
      ordered_json sj{{"effect", st.effect == Effect::Allow ? "Allow" : "Deny"},
                      {"actions", st.actions},
                      {"resources", st.resources}};
      if (st.condition) sj["condition"] = ordered_json::parse(st.condition->dump());
      pj["statements"].push_back(std::move(sj));
    }
    doc["policies"].push_back(std::move(pj));
  }
  doc["attachments"] = ordered_json::array();
  for (const auto& a : s.attachments)
    doc["attachments"].push_back({{"identity", a.identity}, {"policy", a.policy}});
  doc["memberships"] = ordered_json::array();
  for (const auto& m : s.memberships)
    doc["memberships"].push_back({{"user", m.user}, {"group", m.group}});
  doc["trust"] = ordered_json::array();
  for (const auto& t : s.trust) doc["trust"].push_back({{"principal", t.principal}, {"role", t.role}});
  return doc;
}

inline std::string format_snapshot(const Snapshot& s) { return snapshot_to_json(s).dump(2) + "\n"; }

}  // namespace cloudlens
