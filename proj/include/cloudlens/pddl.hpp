#pragma once

// PDDL domain/problem emission for external planners, and parsing of their
// plan files back into ground actions.

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cloudlens/actions.hpp"
#include "cloudlens/error.hpp"
#include "cloudlens/model.hpp"
#include "cloudlens/search.hpp"

namespace cloudlens {

struct PddlDocument {
  enum class Kind { Domain, Problem } kind;
  std::string text;
};

inline constexpr std::string_view kDomainName = "cloudlens";

/// Entity name <-> PDDL identifier. Entities are lower-cased with other
/// characters mapped to `_`; collisions (including with permission tokens
/// and domain constants) get a numeric suffix. Sentinels and adminPolicy
/// keep their names since the domain uses them as constants.
class NameMap {
 public:
  NameMap() = default;

  /// With `strict`, a collision is an error naming both originals.
  explicit NameMap(const World& w, bool strict = false) : names_(w.size()) {
    std::unordered_map<std::string, std::string> taken;  // lower id -> original
    for (PermIx p = 0; p < w.vocab().size(); ++p) {
      taken.emplace(Vocabulary::lower(w.vocab().token(p)), w.vocab().token(p));
      perm_by_lower_.emplace(Vocabulary::lower(w.vocab().token(p)), p);
    }
    auto reserve = [&](EntityIx e) {
      names_[e] = w.name(e);
      taken.emplace(Vocabulary::lower(w.name(e)), w.name(e));
    };
    reserve(w.any_user());
    reserve(w.any_datastore());
    reserve(w.admin_policy());
    for (EntityIx e = 0; e < w.size(); ++e) {
      if (e == w.any_user() || e == w.any_datastore() || e == w.admin_policy()) continue;
      auto base = sanitize(w.name(e));
      auto id = base;
      for (int n = 2;; ++n) {
        auto it = taken.find(id);
        if (it == taken.end()) break;
        if (strict)
          throw Error("PDDL name collision: '" + w.name(e) + "' and '" + it->second + "' both map to '" +
                      base + "'");
        id = base + "_" + std::to_string(n);
      }
      taken.emplace(id, w.name(e));
      names_[e] = id;
    }
    for (EntityIx e = 0; e < w.size(); ++e) {
      entity_by_lower_.emplace(Vocabulary::lower(names_[e]), e);
      entity_by_lower_.emplace(Vocabulary::lower(w.name(e)), e);  // originals also resolve
    }
  }

  const std::string& id(EntityIx e) const { return names_.at(e); }

  std::optional<EntityIx> entity(std::string_view pddl_id) const {
    auto it = entity_by_lower_.find(Vocabulary::lower(pddl_id));
    if (it == entity_by_lower_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<PermIx> perm(std::string_view token) const {
    auto it = perm_by_lower_.find(Vocabulary::lower(token));
    if (it == perm_by_lower_.end()) return std::nullopt;
    return it->second;
  }

  static std::string sanitize(std::string_view name) {
    std::string out;
    for (unsigned char c : name) {
      if (std::isalnum(c) || c == '_' || c == '-') {
        out += static_cast<char>(std::tolower(c));
      } else {
        out += '_';
      }
    }
    if (out.empty() || !std::isalpha(static_cast<unsigned char>(out.front()))) out = "e_" + out;
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, EntityIx> entity_by_lower_;
  std::unordered_map<std::string, PermIx> perm_by_lower_;
};

namespace detail {

inline std::string flow_active(const Vocabulary& v, std::string_view src, std::string_view dst) {
  std::vector<std::string> terms;
  // Structural relations first, in the order the flow condition lists them.
  for (auto tok : {"assumeRole", "belongsTo", "hasPolicy"})
    terms.push_back("(id_tpl " + std::string(dst) + " " + tok + " " + std::string(src) + ")");
  for (PermIx p = 0; p < v.size(); ++p) {
    const auto& t = v.token(p);
    if (v.is_flow_activating(p) && t != "assumeRole" && t != "belongsTo" && t != "hasPolicy")
      terms.push_back("(id_tpl " + std::string(dst) + " " + t + " " + std::string(src) + ")");
  }
  std::string out = "(or";
  for (const auto& t : terms) out += "\n        " + t;
  out += ")";
  return out;
}

struct ActionText {
  std::string_view name;
  std::string params;
  std::vector<std::string> pre;
  std::vector<std::string> eff;
};

inline std::string render(const ActionText& a) {
  std::string out = "  (:action " + std::string(a.name) + "\n";
  out += "    :parameters (" + a.params + ")\n";
  out += "    :precondition (and";
  for (const auto& p : a.pre) out += "\n      " + p;
  out += ")\n    :effect (and";
  for (const auto& e : a.eff) out += "\n      " + e;
  out += "))\n";
  return out;
}

}  // namespace detail

/// Domain for `mode`. Only schemas reachable from the snapshot-level goals
/// are emitted; the reduction-only conjunctive attack has no PDDL form.
inline PddlDocument emit_domain(FlowMode mode, const Vocabulary& v = Vocabulary::standard()) {
  using detail::ActionText;
  std::ostringstream os;
  os << "(define (domain " << kDomainName << ")\n";
  os << "  (:requirements :strips :negative-preconditions :disjunctive-preconditions"
        " :conditional-effects :equality)\n";
  os << "  (:constants";
  for (const auto& e : v.entries()) os << ' ' << e.token;
  os << ' ' << kAnyUser << ' ' << kAnyDatastore << ' ' << kAdminPolicy << ")\n";
  os << "  (:predicates\n"
        "    (id_tpl ?a ?p ?b)\n"
        "    (ds_tpl ?a ?p ?d)\n"
        "    (id_4tpl ?a ?b ?p ?c)\n"
        "    (ds_4tpl ?a ?b ?p ?d)\n"
        "    (compromised_id ?x)\n"
        "    (compromise_pending)\n"
        "    (user_pred ?x)\n"
        "    (group_pred ?x)\n"
        "    (role_pred ?x)\n"
        "    (policy_pred ?x)\n"
        "    (identity_pred ?x)\n"
        "    (plain_identity ?x)\n"
        "    (datastore_pred ?x)\n"
        "    (is_dummy_user ?x)\n"
        "    (dummy_user_available)\n"
        "    (has_sensitive_data ?d)\n"
        "    (is_public_datastore ?d)\n"
        "    (is_dummy_datastore ?d)\n"
        "    (versioning_enabled ?d)\n"
        "    (mfa_enabled ?d)\n"
        "    (id_perm ?p)\n"
        "    (ds_perm ?p)\n"
        "    (persistence_perm ?p)\n"
        "    (login_perm ?p)\n"
        "    (delete_perm ?p)\n";
  for (auto a : kAllAttackTypes) os << "    (" << to_string(a) << ")\n";
  os << "  )\n";

  const std::string ready = "(not (compromise_pending))";
  auto exists = [](std::string_view d) {
    return "(datastore_pred " + std::string(d) + ")\n      (not (is_dummy_datastore " + std::string(d) + "))";
  };
  std::vector<ActionText> acts;
  acts.push_back({"selectCompromisedUser", "?id", {"(compromise_pending)", "(user_pred ?id)"},
                  {"(compromised_id ?id)", "(not (compromise_pending))"}});
  auto flow_guard = [&](std::string_view src, std::string_view dst) {
    return std::vector<std::string>{ready,
                                     "(identity_pred " + std::string(src) + ")",
                                     "(identity_pred " + std::string(dst) + ")",
                                     "(not (= " + std::string(src) + " " + std::string(dst) + "))",
                                     detail::flow_active(v, src, dst)};
  };
  if (mode == FlowMode::Bulk) {
    auto pre = flow_guard("?id2", "?id1");
    acts.push_back({"permissionFlow", "?id2 ?id1", pre,
                    {"(forall (?p ?x) (when (id_tpl ?id2 ?p ?x) (id_tpl ?id1 ?p ?x)))",
                     "(forall (?p ?x) (when (ds_tpl ?id2 ?p ?x) (ds_tpl ?id1 ?p ?x)))",
                     "(forall (?s ?p ?x) (when (id_4tpl ?id2 ?s ?p ?x) (id_4tpl ?id1 ?s ?p ?x)))",
                     "(forall (?s ?p ?x) (when (ds_4tpl ?id2 ?s ?p ?x) (ds_4tpl ?id1 ?s ?p ?x)))"}});
  } else {
    for (auto [name, pred, x] : {std::tuple{"permissionFlow_id_3tpl", "id_tpl", "?id"},
                                 std::tuple{"permissionFlow_ds_3tpl", "ds_tpl", "?ds"}}) {
      auto pre = flow_guard("?id2", "?id1");
      pre.push_back(std::string("(") + pred + " ?id2 ?perm " + x + ")");
      pre.push_back(std::string("(not (") + pred + " ?id1 ?perm " + x + "))");
      acts.push_back({name, std::string("?id2 ?perm ") + x + " ?id1", pre,
                      {std::string("(") + pred + " ?id1 ?perm " + x + ")"}});
    }
    for (auto [name, pred, x] : {std::tuple{"permissionFlow_id_4tpl", "id_4tpl", "?id4"},
                                 std::tuple{"permissionFlow_ds_4tpl", "ds_4tpl", "?ds"}}) {
      auto pre = flow_guard("?id2", "?id1");
      pre.push_back(std::string("(") + pred + " ?id2 ?id3 ?perm " + x + ")");
      pre.push_back(std::string("(not (") + pred + " ?id1 ?id3 ?perm " + x + "))");
      acts.push_back({name, std::string("?id1 ?id2 ?id3 ?perm ") + x, pre,
                      {std::string("(") + pred + " ?id1 ?id3 ?perm " + x + ")"}});
    }
  }
  for (auto [name, four, three, x] : {std::tuple{"add_id_3tpl", "id_4tpl", "id_tpl", "?id3"},
                                      std::tuple{"add_ds_3tpl", "ds_4tpl", "ds_tpl", "?ds"}}) {
    std::string f = four, t = three, xs = x;
    acts.push_back({name, "?id1 ?id2 ?perm " + xs,
                    {ready, "(compromised_id ?id1)", "(not (" + t + " ?id2 ?perm " + xs + "))",
                     "(or (" + f + " ?id1 ?id2 ?perm " + xs + ")\n        (and (" + f + " ?id1 any_user ?perm " +
                         xs + ") (plain_identity ?id2)))"},
                    {"(" + t + " ?id2 ?perm " + xs + ")"}});
  }
  acts.push_back({"activate_id_3tpl", "?id1 ?perm ?id2",
                  {ready, "(identity_pred ?id1)", "(id_perm ?perm)",
                   "(or (and (= ?perm hasPolicy) (policy_pred ?id2))\n"
                   "        (and (= ?perm belongsTo) (group_pred ?id2))\n"
                   "        (and (not (= ?perm hasPolicy)) (not (= ?perm belongsTo)) (plain_identity ?id2)))",
                   "(not (id_tpl ?id1 ?perm ?id2))",
                   "(or (id_tpl ?id1 full_control ?id2)\n        (id_tpl ?id1 full_control any_user)\n"
                   "        (id_tpl ?id1 ?perm any_user))"},
                  {"(id_tpl ?id1 ?perm ?id2)"}});
  acts.push_back({"activate_ds_3tpl", "?id1 ?perm ?ds",
                  {ready, "(identity_pred ?id1)", "(ds_perm ?perm)", exists("?ds"),
                   "(not (ds_tpl ?id1 ?perm ?ds))",
                   "(or (ds_tpl ?id1 full_control ?ds)\n        (ds_tpl ?id1 full_control any_datastore)\n"
                   "        (ds_tpl ?id1 ?perm any_datastore))"},
                  {"(ds_tpl ?id1 ?perm ?ds)"}});
  auto object_pre = [&](bool move) {
    std::vector<std::string> p = {ready,           "(compromised_id ?id)", "(not (= ?ds1 ?ds2))",
                                  exists("?ds1"),  exists("?ds2"),         "(has_sensitive_data ?ds1)",
                                  "(ds_tpl ?id s3_GetObject ?ds1)"};
    if (move) p.push_back("(ds_tpl ?id s3_DeleteObject ?ds1)");
    p.push_back("(ds_tpl ?id s3_PutObject ?ds2)");
    if (!move) p.push_back("(is_public_datastore ?ds2)");
    return p;
  };
  acts.push_back({"copyObject", "?id ?ds1 ?ds2", object_pre(false), {"(sensitive_data_exfiltration)"}});
  acts.push_back({"moveObject", "?id ?ds1 ?ds2", object_pre(true),
                  {"(has_sensitive_data ?ds2)", "(not (has_sensitive_data ?ds1))",
                   "(when (is_public_datastore ?ds2) (sensitive_data_exfiltration))"}});
  acts.push_back({"deleteBucket", "?id ?ds",
                  {ready, "(compromised_id ?id)", exists("?ds"), "(has_sensitive_data ?ds)",
                   "(ds_tpl ?id deleteBucket ?ds)"},
                  {"(impact)"}});
  acts.push_back({"deleteIdentity", "?id ?perm ?target",
                  {ready, "(compromised_id ?id)", "(delete_perm ?perm)", "(identity_pred ?target)",
                   "(id_tpl ?id ?perm ?target)"},
                  {"(impact)"}});
  acts.push_back({"createPublicBucket", "?id ?ds",
                  {ready, "(compromised_id ?id)", "(datastore_pred ?ds)", "(is_dummy_datastore ?ds)",
                   "(or (ds_tpl ?id s3_CreateBucket any_datastore)\n        (ds_tpl ?id s3_PutBucketAcl any_datastore)\n"
                   "        (ds_tpl ?id full_control any_datastore))"},
                  {"(not (is_dummy_datastore ?ds))", "(is_public_datastore ?ds)", "(ds_tpl ?id s3_PutObject ?ds)"}});
  acts.push_back({"encryptSensitiveData", "?id ?ds ?kt",
                  {ready, "(compromised_id ?id)", exists("?ds"), "(has_sensitive_data ?ds)",
                   "(not (versioning_enabled ?ds))", "(not (mfa_enabled ?ds))", "(ds_tpl ?id s3_PutObject ?ds)",
                   "(ds_tpl ?id kms_CreateKey ?kt)"},
                  {"(ransomware)"}});
  acts.push_back({"gainPersistence", "?id ?perm ?x",
                  {ready, "(compromised_id ?id)", "(persistence_perm ?perm)", "(dummy_user_available)",
                   "(id_tpl ?id ?perm ?x)"},
                  {"(not (dummy_user_available))", "(persistence)"}});
  acts.push_back({"changeUserLogin", "?id ?perm ?user",
                  {ready, "(compromised_id ?id)", "(login_perm ?perm)", "(user_pred ?user)", "(not (= ?id ?user))",
                   "(id_tpl ?id ?perm ?user)"},
                  {"(lateral_movement)"}});
  acts.push_back({"reachAdminPolicy", "?id",
                  {ready, "(compromised_id ?id)", "(id_tpl ?id hasPolicy adminPolicy)"},
                  {"(privilege_escalation)"}});
  for (const auto& a : acts) os << detail::render(a);
  os << ")\n";
  return {PddlDocument::Kind::Domain, os.str()};
}

/// Problem file for one compiled state and goal.
inline PddlDocument emit_problem(const World& w, const IamState& s, Goal goal, std::string_view name,
                                 const NameMap& names) {
  if (goal.is_conjunctive()) throw ContractError("the conjunctive attack has no PDDL encoding");
  const auto& v = w.vocab();
  std::ostringstream os;
  auto n = [&](EntityIx e) -> const std::string& { return names.id(e); };
  os << "(define (problem " << NameMap::sanitize(name) << ")\n";
  os << "  (:domain " << kDomainName << ")\n";
  os << "  (:objects";
  for (EntityIx e = 0; e < w.size(); ++e)
    if (e != w.any_user() && e != w.any_datastore() && e != w.admin_policy()) os << ' ' << n(e);
  os << ")\n  (:init\n";
  auto fact = [&](const std::string& f) { os << "    " << f << "\n"; };
  if (s.compromised().empty()) fact("(compromise_pending)");
  for (auto e : s.compromised()) fact("(compromised_id " + n(e) + ")");
  for (EntityIx e = 0; e < w.size(); ++e) {
    const auto& info = w.entity(e);
    if (w.is_identity(e) && !info.is_dummy) {
      fact("(identity_pred " + n(e) + ")");
      if (info.kind != EntityKind::Policy) fact("(plain_identity " + n(e) + ")");
    }
    switch (info.kind) {
      case EntityKind::User: fact(info.is_dummy ? "(is_dummy_user " + n(e) + ")" : "(user_pred " + n(e) + ")"); break;
      case EntityKind::Group: fact("(group_pred " + n(e) + ")"); break;
      case EntityKind::Role: fact("(role_pred " + n(e) + ")"); break;
      case EntityKind::Policy: fact("(policy_pred " + n(e) + ")"); break;
      case EntityKind::Datastore:
        fact("(datastore_pred " + n(e) + ")");
        if (datastore_public(w, s, e)) fact("(is_public_datastore " + n(e) + ")");
        if (info.is_dummy && !s.is_created(e)) fact("(is_dummy_datastore " + n(e) + ")");
        if (info.versioning_enabled) fact("(versioning_enabled " + n(e) + ")");
        if (info.mfa_delete_enabled) fact("(mfa_enabled " + n(e) + ")");
        break;
      default: break;
    }
  }
  for (auto e : s.sensitive()) fact("(has_sensitive_data " + n(e) + ")");
  if (!s.is_created(w.dummy_user())) fact("(dummy_user_available)");
  for (PermIx p = 0; p < v.size(); ++p) {
    const auto& info = v.info(p);
    if (detail::activatable(w, p, false)) fact("(id_perm " + info.token + ")");
    if (detail::activatable(w, p, true)) fact("(ds_perm " + info.token + ")");
    if (info.role == PermRole::Persistence) fact("(persistence_perm " + info.token + ")");
    if (info.role == PermRole::Login) fact("(login_perm " + info.token + ")");
    if (info.role == PermRole::IdentityDelete) fact("(delete_perm " + info.token + ")");
  }
  for (auto a : kAllAttackTypes)
    if (s.has_flag(a)) fact("(" + std::string(to_string(a)) + ")");
  for (const auto& t : s.tuples()) {
    const auto& tok = v.token(t.perm);
    switch (t.kind) {
      case TupleKind::Id3: fact("(id_tpl " + n(t.holder) + " " + tok + " " + n(t.target) + ")"); break;
      case TupleKind::Ds3: fact("(ds_tpl " + n(t.holder) + " " + tok + " " + n(t.target) + ")"); break;
      case TupleKind::Id4:
        fact("(id_4tpl " + n(t.holder) + " " + n(t.subject) + " " + tok + " " + n(t.target) + ")");
        break;
      case TupleKind::Ds4:
        fact("(ds_4tpl " + n(t.holder) + " " + n(t.subject) + " " + tok + " " + n(t.target) + ")");
        break;
    }
  }
  os << "  )\n  (:goal (" << to_string(goal) << "))\n)\n";
  return {PddlDocument::Kind::Problem, os.str()};
}

/// Reads a plan in either the one-action-per-line form `(name a b ...)` or
/// the listing form `(:action name :parameters (a, b, ...))`. Names and
/// arguments are case-insensitive; `;` starts a comment.
inline AttackPlan parse_plan_file(std::string_view text, const World& w, const NameMap& names) {
  struct Tok {
    std::string text;
    std::size_t line;
  };
  std::vector<Tok> toks;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size();) {
    char c = text[i];
    if (c == '\n') {
      ++line, ++i;
    } else if (c == ';') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
    } else if (c == '(' || c == ')') {
      toks.push_back({std::string(1, c), line});
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '(' &&
             text[j] != ')' && text[j] != ',' && text[j] != ';')
        ++j;
      toks.push_back({std::string(text.substr(i, j - i)), line});
      i = j;
    }
  }

  AttackPlan plan;
  std::size_t pos = 0;
  while (pos < toks.size()) {
    std::size_t at = toks[pos].line;
    if (toks[pos].text != "(") throw ParseError(at, "expected '(' before '" + toks[pos].text + "'");
    // Flatten the top-level list; nested lists only group parameters.
    std::vector<Tok> atoms;
    int depth = 0;
    do {
      if (pos >= toks.size()) throw ParseError(at, "unterminated parenthesis");
      const auto& t = toks[pos++];
      if (t.text == "(") {
        ++depth;
      } else if (t.text == ")") {
        --depth;
      } else {
        atoms.push_back(t);
      }
    } while (depth > 0);
    if (atoms.empty()) throw ParseError(at, "empty action");
    std::size_t k = 0;
    if (Vocabulary::lower(atoms[0].text) == ":action") k = 1;
    if (k >= atoms.size()) throw ParseError(at, "missing action name");
    std::string name = atoms[k].text;
    std::vector<Tok> args;
    for (std::size_t i = k + 1; i < atoms.size(); ++i)
      if (Vocabulary::lower(atoms[i].text) != ":parameters") args.push_back(atoms[i]);

    const SchemaInfo* info = nullptr;
    for (const auto& s : kSchemas)
      if (Vocabulary::lower(s.pddl_name) == Vocabulary::lower(name)) info = &s;
    if (!info) throw ParseError(at, "unknown action '" + name + "'");
    if (args.size() != info->arity)
      throw ParseError(at, std::string(info->pddl_name) + " expects " + std::to_string(info->arity) +
                               " arguments, got " + std::to_string(args.size()));
    GroundAction a{info->schema, {}};
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (info->slots[i] == Slot::Perm) {
        auto p = names.perm(args[i].text);
        if (!p) throw ParseError(args[i].line, "unknown permission '" + args[i].text + "'");
        a.args[i] = *p;
      } else {
        auto e = names.entity(args[i].text);
        if (!e) throw ParseError(args[i].line, "unknown object '" + args[i].text + "'");
        a.args[i] = *e;
      }
    }
    plan.actions.push_back(a);
  }
  (void)w;
  return plan;
}

}  // namespace cloudlens
