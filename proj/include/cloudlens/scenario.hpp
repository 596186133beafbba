#pragma once

// Worked scenarios, seeded random snapshots, and the set-cover reduction
// with its brute-force oracle.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cloudlens/actions.hpp"
#include "cloudlens/error.hpp"
#include "cloudlens/model.hpp"
#include "cloudlens/snapshot.hpp"

namespace cloudlens {

enum class ScenarioName : std::uint8_t {
  RansomwareListing,
  ImpactListing,
  ExfiltrationListing,
  AdminChainListing,
  FlowWalkthrough,
};

inline constexpr std::array<ScenarioName, 5> kAllScenarios = {
    ScenarioName::RansomwareListing, ScenarioName::ImpactListing, ScenarioName::ExfiltrationListing,
    ScenarioName::AdminChainListing, ScenarioName::FlowWalkthrough,
};

inline std::string_view to_string(ScenarioName n) {
  switch (n) {
    case ScenarioName::RansomwareListing: return "ransomware_listing";
    case ScenarioName::ImpactListing: return "impact_listing";
    case ScenarioName::ExfiltrationListing: return "exfiltration_listing";
    case ScenarioName::AdminChainListing: return "admin_chain_listing";
    case ScenarioName::FlowWalkthrough: return "flow_walkthrough";
  }
  return "?";
}

inline std::optional<ScenarioName> scenario_from_string(std::string_view s) {
  for (auto n : kAllScenarios)
    if (to_string(n) == s) return n;
  return std::nullopt;
}

struct ScenarioExpectation {
  AttackType goal;
  FlowMode mode;
  std::size_t optimal_cost;  // with selectCompromisedUser
  std::string user;          // the user the listing compromises
};

struct Scenario {
  ScenarioName name;
  Snapshot snapshot;
  ScenarioExpectation expected;
};

namespace detail {

inline PolicyStatement allow(std::vector<std::string> actions, std::vector<std::string> resources) {
  return {Effect::Allow, std::move(actions), std::move(resources), std::nullopt};
}

inline Identity ident(std::string name, IdentityKind k) { return {{std::move(name), ""}, k}; }

inline Datastore store(std::string name, bool sensitive, bool is_public = false) {
  Datastore d;
  d.id = {std::move(name), ""};
  d.has_sensitive_data = sensitive;
  d.is_public = is_public;
  return d;
}

}  // namespace detail

inline Scenario scenario(ScenarioName name) {
  using detail::allow;
  using detail::ident;
  using detail::store;
  Scenario sc{name, {}, {}};
  Snapshot& s = sc.snapshot;
  switch (name) {
    case ScenarioName::RansomwareListing:
      s.identities = {ident("compromised_user", IdentityKind::User),
                      ident("keyManagementRole", IdentityKind::Role)};
      s.datastores = {store("sensitiveDataBucket", true)};
      s.policies = {
          {{"ransomware_policy_a", ""},
           {allow({"s3:*Object"}, {"s3:sensitiveDataBucket"}),
            allow({"sts:AssumeRole"}, {"iam:keyManagementRole"})}},
          {{"ransomware_policy_b", ""}, {allow({"kms:*Key*"}, {"*"})}},
      };
      s.attachments = {{"compromised_user", "ransomware_policy_a"}, {"keyManagementRole", "ransomware_policy_b"}};
      s.notes = {"sensitiveDataBucket: 'the s3:sensitiveDataBucket that contains sensitive data'",
                 "compromised_user: 'a policy attached to a compromised user'"};
      sc.expected = {AttackType::Ransomware, FlowMode::Bulk, 3, "compromised_user"};
      break;
    case ScenarioName::ImpactListing:
      s.identities = {ident("user_181", IdentityKind::User)};
      s.datastores = {store("data_store_71", true)};
      s.policies = {{{"user_181_policy", ""}, {allow({"*"}, {"arn:aws:s3:::data_store_71"})}}};
      s.attachments = {{"user_181", "user_181_policy"}};
      s.notes = {
          "user_181 full_control on data_store_71: 'available to user_181 due to their comprehensive "
          "(full_control) access rights'",
          "data_store_71 sensitive: 'identified as containing sensitive data through a prior data scan'"};
      sc.expected = {AttackType::Impact, FlowMode::Bulk, 3, "user_181"};
      break;
    case ScenarioName::ExfiltrationListing:
      s.identities = {ident("user_0", IdentityKind::User)};
      s.datastores = {store("data_store_0", true), store("data_store_138", false, true)};
      s.policies = {{{"user_0_policy", ""},
                     {allow({"s3:GetObject"}, {"arn:aws:s3:::data_store_0/*"}),
                      allow({"s3:PutObject"}, {"arn:aws:s3:::data_store_138/*"})}}};
      s.attachments = {{"user_0", "user_0_policy"}};
      s.notes = {"user_0 access: 'permits user_0 access to data_store_0, a repository of sensitive data, "
                 "as well as to a public data_store_138'"};
      sc.expected = {AttackType::SensitiveDataExfiltration, FlowMode::Bulk, 2, "user_0"};
      break;
    case ScenarioName::AdminChainListing:
      s.identities = {ident("user_9", IdentityKind::User), ident("role_10", IdentityKind::Role),
                      ident("role_13", IdentityKind::Role)};
      s.policies = {
          {{"user_9_policy", ""}, {allow({"sts:AssumeRole"}, {"arn:aws:iam::000000000014:role/role_10"})}},
          {{"role_10_policy", ""}, {allow({"sts:AssumeRole"}, {"arn:aws:iam::000000000014:role/role_13"})}},
          {{"role_13_policy", ""}, {allow({"iam:AttachRolePolicy"}, {"arn:aws:iam::000000000014:role/role_10"})}},
      };
      s.attachments = {{"user_9", "user_9_policy"}, {"role_10", "role_10_policy"}, {"role_13", "role_13_policy"}};
      s.trust = {{"user_9", "role_10"}, {"role_10", "role_13"}};
      s.notes = {"user_9 -> role_10 -> role_13: 'user_9 who possesses permission to assume role role_10, "
                 "which, in turn, can be used to assume role_13'",
                 "role_13 AttachRolePolicy on role_10: 'role_13 is endowed with dangerous permission "
                 "iam:AttachRolePolicy'"};
      sc.expected = {AttackType::PrivilegeEscalation, FlowMode::PerTuple, 6, "user_9"};
      break;
    case ScenarioName::FlowWalkthrough:
      s.identities = {ident("u1", IdentityKind::User), ident("g1", IdentityKind::Group),
                      ident("r1", IdentityKind::Role)};
      s.datastores = {store("ds1", true)};
      s.policies = {{{"g1_policy", ""}, {allow({"iam:UpdateAssumeRolePolicy"}, {"r1"})}},
                    {{"r1_policy", ""}, {allow({"s3:DeleteBucket"}, {"ds1"})}}};
      s.attachments = {{"g1", "g1_policy"}, {"r1", "r1_policy"}};
      s.memberships = {{"u1", "g1"}};
      s.notes = {"ds1 sensitive: 'for the impact attack to succeed, u1 needs to delete ds1'"};
      sc.expected = {AttackType::Impact, FlowMode::Bulk, 5, "u1"};
      break;
  }
  validate_snapshot(s);
  return sc;
}

// ---------------------------------------------------------------------------
// Set cover

struct SetCoverInstance {
  std::vector<std::string> universe;
  std::vector<std::pair<std::string, std::vector<std::string>>> subsets;
};

inline constexpr std::size_t kMaxCoverUniverse = 20;
inline constexpr std::size_t kMaxCoverSubsets = 20;

inline void validate_cover(const SetCoverInstance& inst) {
  if (inst.universe.size() > kMaxCoverUniverse) throw ContractError("set cover universe larger than 20");
  if (inst.subsets.size() > kMaxCoverSubsets) throw ContractError("more than 20 subsets");
  for (const auto& [name, members] : inst.subsets)
    for (const auto& m : members)
      if (std::find(inst.universe.begin(), inst.universe.end(), m) == inst.universe.end())
        throw ContractError("subset " + name + " names unknown element " + m);
}

/// Exact minimum cover size by exhaustive enumeration; nullopt when some
/// element is in no subset.
inline std::optional<std::size_t> brute_force_min_cover(const SetCoverInstance& inst) {
  validate_cover(inst);
  const std::size_t n = inst.universe.size(), m = inst.subsets.size();
  const std::uint32_t full = n == 0 ? 0u : static_cast<std::uint32_t>((1ull << n) - 1);
  std::vector<std::uint32_t> masks;
  for (const auto& [_, members] : inst.subsets) {
    std::uint32_t mask = 0;
    for (const auto& e : members)
      mask |= 1u << (std::find(inst.universe.begin(), inst.universe.end(), e) - inst.universe.begin());
    masks.push_back(mask);
  }
  std::optional<std::size_t> best;
  for (std::uint32_t pick = 0; pick < (1u << m); ++pick) {
    std::uint32_t covered = 0;
    for (std::size_t j = 0; j < m; ++j)
      if (pick & (1u << j)) covered |= masks[j];
    auto k = static_cast<std::size_t>(std::popcount(pick));
    if (covered == full && (!best || k < *best)) best = k;
  }
  return best;
}

struct SetCoverProblem {
  World world;
  IamState initial;
};

/// Test-only permissions used by the reduction: `canAssume` activates
/// flow, `hasElement` marks membership.
inline Vocabulary set_cover_vocabulary() {
  return Vocabulary::with_extension({
      {"canAssume", "", PermFamily::Identity, PermRole::TestOnly, CompileRule::Direct, false, true},
      {"hasElement", "", PermFamily::Datastore, PermRole::TestOnly, CompileRule::Direct, false, false},
  });
}

/// S is a compromised user; each subset is a role S can assume; elements
/// are datastores. The conjunctive goal asks for S holding every element.
inline SetCoverProblem set_cover_problem(const SetCoverInstance& inst) {
  validate_cover(inst);
  std::vector<EntityInfo> infos;
  infos.push_back({"S", "", EntityKind::User});
  for (const auto& [name, _] : inst.subsets) infos.push_back({name, "", EntityKind::Role});
  for (const auto& v : inst.universe) infos.push_back({v, "", EntityKind::Datastore});
  World w(std::move(infos), set_cover_vocabulary());
  const auto& voc = w.vocab();
  PermIx can_assume = voc.require("canAssume"), has_element = voc.require("hasElement");
  EntityIx s = w.require("S");
  IamState st;
  st.add_compromised(s);
  for (const auto& [name, members] : inst.subsets) {
    EntityIx sj = w.require(name);
    st.add_tuple(RelTuple::id3(s, can_assume, sj));
    for (const auto& v : members) st.add_tuple(RelTuple::ds3(sj, has_element, w.require(v)));
  }
  ConjunctiveAttack goal;
  for (const auto& v : inst.universe) goal.required.push_back(RelTuple::ds3(s, has_element, w.require(v)));
  w.set_conjunctive_attack(std::move(goal));
  return {std::move(w), std::move(st)};
}

// ---------------------------------------------------------------------------
// Random snapshots

struct GenParams {
  std::uint64_t seed = 1;
  std::size_t users = 4, groups = 1, roles = 2, datastores = 2, policies = 3;
  std::size_t accounts = 1;
  double membership_density = 0.3;  // user x group
  double attachment_density = 0.3;  // (user|group|role) x policy
  double trust_density = 0.2;       // user x role
  double grant_density = 0.1;       // policy x action x matching resource
  double star_resource_fraction = 0.0;
  double sensitive_fraction = 0.5;
  double public_fraction = 0.3;
  std::vector<std::string> actions = {
      "sts:AssumeRole",  "s3:GetObject",         "s3:PutObject",       "s3:DeleteObject",
      "s3:DeleteBucket", "s3:CreateBucket",      "kms:CreateKey",      "iam:AttachRolePolicy",
      "iam:AddUserToGroup", "iam:CreateLoginProfile", "iam:CreateUser", "iam:DeleteRole"};
};

inline constexpr std::size_t kMaxGenEntities = 2000;

namespace detail {

/// Engine output mapped without std distributions, whose algorithms differ
/// between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : e_(seed) {}
  bool chance(double p) {
    if (p <= 0) return false;
    if (p >= 1) return true;
    return static_cast<double>(e_() >> 11) * 0x1.0p-53 < p;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(e_() % n); }

 private:
  std::mt19937_64 e_;
};

inline std::string numbered(std::string_view prefix, std::size_t i) { return std::string(prefix) + std::to_string(i); }

}  // namespace detail

inline Snapshot random_snapshot(const GenParams& p, const Vocabulary& vocab = Vocabulary::standard()) {
  const std::size_t total = p.users + p.groups + p.roles + p.datastores + p.policies;
  if (total > kMaxGenEntities) throw ContractError("random snapshot larger than 2000 entities");
  if (p.accounts == 0) throw ContractError("accounts must be at least 1");
  detail::Rng rng(p.seed);
  Snapshot s;
  std::size_t counter = 0;
  auto account = [&] {
    return p.accounts == 1 ? std::string() : detail::numbered("acct_", counter++ % p.accounts);
  };
  std::vector<std::string> users, groups, roles, stores, policies;
  for (std::size_t i = 0; i < p.users; ++i) {
    users.push_back(detail::numbered("user_", i));
    s.identities.push_back({{users.back(), account()}, IdentityKind::User});
  }
  for (std::size_t i = 0; i < p.groups; ++i) {
    groups.push_back(detail::numbered("group_", i));
    s.identities.push_back({{groups.back(), account()}, IdentityKind::Group});
  }
  for (std::size_t i = 0; i < p.roles; ++i) {
    roles.push_back(detail::numbered("role_", i));
    s.identities.push_back({{roles.back(), account()}, IdentityKind::Role});
  }
  for (std::size_t i = 0; i < p.policies; ++i) policies.push_back(detail::numbered("policy_", i));
  for (std::size_t i = 0; i < p.datastores; ++i) {
    Datastore d;
    d.id = {detail::numbered("data_store_", i), account()};
    d.has_sensitive_data = rng.chance(p.sensitive_fraction);
    d.is_public = rng.chance(p.public_fraction);
    stores.push_back(d.id.name);
    s.datastores.push_back(std::move(d));
  }

  for (const auto& pol : policies) {
    PolicyDocument doc{{pol, account()}, {}};
    for (const auto& action : p.actions) {
      auto perm = vocab.find_aws(action);
      if (!perm) throw ContractError("generator action not in vocabulary: " + action);
      const auto& info = vocab.info(*perm);
      std::vector<std::string> targets;
      if (info.family == PermFamily::Datastore) {
        targets = stores;
      } else if (info.rule == CompileRule::AddToGroup) {
        targets = groups;
      } else if (info.rule == CompileRule::TrustUpdate || *perm == vocab.assume_role()) {
        targets = roles;
      } else if (info.rule == CompileRule::AccessKey || info.role == PermRole::Login ||
                 info.role == PermRole::Persistence) {
        targets = users;
      } else {
        targets = roles;
        targets.insert(targets.end(), users.begin(), users.end());
        targets.insert(targets.end(), groups.begin(), groups.end());
      }
      std::vector<std::string> chosen;
      if (info.resource_agnostic) {
        if (rng.chance(p.grant_density)) chosen.push_back("*");
      } else {
        for (const auto& t : targets)
          if (rng.chance(p.grant_density)) chosen.push_back(t);
        if (rng.chance(p.star_resource_fraction)) chosen = {"*"};
      }
      if (!chosen.empty()) doc.statements.push_back({Effect::Allow, {action}, std::move(chosen), std::nullopt});
    }
    s.policies.push_back(std::move(doc));
  }
  for (const auto& u : users)
    for (const auto& g : groups)
      if (rng.chance(p.membership_density)) s.memberships.push_back({u, g});
  std::vector<std::string> holders = users;
  holders.insert(holders.end(), groups.begin(), groups.end());
  holders.insert(holders.end(), roles.begin(), roles.end());
  for (const auto& h : holders)
    for (const auto& pol : policies)
      if (rng.chance(p.attachment_density)) s.attachments.push_back({h, pol});
  for (const auto& u : users)
    for (const auto& r : roles)
      if (rng.chance(p.trust_density)) s.trust.push_back({u, r});
  validate_snapshot(s);
  return s;
}

}  // namespace cloudlens
