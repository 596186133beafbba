#include <gtest/gtest.h>

#include "support.hpp"

using namespace cloudlens;
using namespace testsupport;

namespace {

// Every syntactically possible ground action of the world, for brute-force
// comparison against the generator.
std::vector<GroundAction> all_groundings(const World& w) {
  std::vector<GroundAction> out;
  for (const auto& info : kSchemas) {
    std::vector<std::uint32_t> sizes;
    for (std::size_t i = 0; i < info.arity; ++i)
      sizes.push_back(info.slots[i] == Slot::Perm ? static_cast<std::uint32_t>(w.vocab().size())
                                                  : static_cast<std::uint32_t>(w.size()));
    GroundAction a{info.schema, {}};
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == info.arity) {
        out.push_back(a);
        return;
      }
      for (std::uint32_t x = 0; x < sizes[i]; ++x) {
        a.args[i] = x;
        rec(i + 1);
      }
    };
    rec(0);
  }
  return out;
}

std::vector<GroundAction> brute_applicable(const World& w, const IamState& s, const GenOptions& o,
                                           const std::vector<GroundAction>& all) {
  std::vector<GroundAction> out;
  for (const auto& a : all)
    if (is_applicable(w, s, a, o)) out.push_back(a);
  std::sort(out.begin(), out.end());
  return out;
}

// States reachable from `init` within `depth` steps, breadth first.
std::vector<IamState> reachable(const World& w, const IamState& init, const GenOptions& o, std::size_t depth,
                                std::size_t cap) {
  std::vector<IamState> all{init}, frontier{init};
  for (std::size_t d = 0; d < depth && all.size() < cap; ++d) {
    std::vector<IamState> next;
    for (const auto& s : frontier)
      for (const auto& a : applicable_actions(w, s, o)) {
        auto n = apply(w, s, a, o);
        if (std::find(all.begin(), all.end(), n) == all.end()) {
          all.push_back(n);
          next.push_back(n);
        }
      }
    frontier = std::move(next);
  }
  return all;
}

}  // namespace

TEST(FlowActive, StructuralEdgesOnly) {
  auto c = compile_scenario(ScenarioName::FlowWalkthrough);
  const auto& w = c.w();
  auto u1 = w.require("u1"), g1 = w.require("g1"), r1 = w.require("r1");
  EXPECT_TRUE(is_flow_active(w, c.s(), g1, u1));
  EXPECT_FALSE(is_flow_active(w, c.s(), u1, g1));
  EXPECT_FALSE(is_flow_active(w, c.s(), r1, u1));
  EXPECT_FALSE(is_flow_active(w, c.s(), u1, u1));
  IamState s = c.s();
  s.add_tuple(RelTuple::id3(u1, w.vocab().assume_role(), r1));
  EXPECT_TRUE(is_flow_active(w, s, r1, u1));
  EXPECT_TRUE(assume_only_flow(w, s, r1, u1));
  EXPECT_FALSE(assume_only_flow(w, s, g1, u1));
}

TEST(ApplicableActions, OnlySelectionBeforeCompromise) {
  auto c = compile_scenario(ScenarioName::AdminChainListing);
  auto acts = applicable_actions(c.w(), c.s(), gen_opts(FlowMode::PerTuple, AttackType::PrivilegeEscalation));
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(format_action(c.w(), acts[0]), "(selectCompromisedUser user_9)");
}

TEST(ApplicableActions, SelectionHappensOnce) {
  auto c = compile_scenario(ScenarioName::ExfiltrationListing);
  auto o = gen_opts(FlowMode::Bulk, AttackType::SensitiveDataExfiltration);
  auto s = apply(c.w(), c.s(), make_action(Schema::SelectCompromisedUser, {c.w().require("user_0")}), o);
  for (const auto& a : applicable_actions(c.w(), s, o)) EXPECT_NE(a.schema, Schema::SelectCompromisedUser);
}

TEST(ApplicableActions, WalkthroughFirstSteps) {
  auto c = compile_scenario(ScenarioName::FlowWalkthrough);
  const auto& w = c.w();
  auto o = gen_opts(FlowMode::Bulk, AttackType::Impact);
  IamState s = c.s();
  s.add_compromised(w.require("u1"));
  std::vector<std::string> got;
  for (const auto& a : applicable_actions(w, s, o)) got.push_back(format_action(w, a));
  // policies hold no tuples, so their flows are applicable but inert
  EXPECT_EQ(got, (std::vector<std::string>{"(permissionFlow g1 u1)", "(permissionFlow g1_policy g1)",
                                           "(permissionFlow r1_policy r1)"}));
  EXPECT_EQ(apply(w, s, make_action(Schema::PermFlowBulk, {w.require("g1_policy"), w.require("g1")}), o).tuples(),
            s.tuples());
}

TEST(Apply, FlowCopiesTuplesAndKeepsSource) {
  auto c = compile_scenario(ScenarioName::FlowWalkthrough);
  const auto& w = c.w();
  auto o = gen_opts(FlowMode::Bulk, AttackType::Impact);
  IamState s = c.s();
  s.add_compromised(w.require("u1"));
  auto g1 = w.require("g1"), u1 = w.require("u1");
  auto expected = expected_bulk_additions(s, g1, u1);
  auto n = apply(w, s, make_action(Schema::PermFlowBulk, {g1, u1}), o);
  EXPECT_FALSE(expected.empty());
  EXPECT_EQ(n.tuples().size(), s.tuples().size() + expected.size());
  for (const auto& t : expected) EXPECT_TRUE(n.contains(t));
  for (const auto& t : s.tuples()) EXPECT_TRUE(n.contains(t));
}

TEST(Apply, RejectsInapplicable) {
  auto c = compile_scenario(ScenarioName::FlowWalkthrough);
  const auto& w = c.w();
  auto o = gen_opts(FlowMode::Bulk, AttackType::Impact);
  EXPECT_THROW(apply(w, c.s(), make_action(Schema::PermFlowBulk, {w.require("g1"), w.require("u1")}), o),
               ContractError);
  EXPECT_THROW(make_action(Schema::PermFlowBulk, {1}), ContractError);
}

TEST(Apply, ExfiltrationCopyRaisesFlag) {
  auto c = compile_scenario(ScenarioName::ExfiltrationListing);
  const auto& w = c.w();
  auto o = gen_opts(FlowMode::Bulk, AttackType::SensitiveDataExfiltration);
  IamState s = c.s();
  s.add_compromised(w.require("user_0"));
  auto copy = make_action(Schema::CopyObject, {w.require("user_0"), w.require("data_store_0"), w.require("data_store_138")});
  ASSERT_TRUE(is_applicable(w, s, copy, o));
  EXPECT_TRUE(goal_satisfied(apply(w, s, copy, o), AttackType::SensitiveDataExfiltration));
  // reversed direction has no sensitive source
  auto back = make_action(Schema::CopyObject, {w.require("user_0"), w.require("data_store_138"), w.require("data_store_0")});
  EXPECT_FALSE(is_applicable(w, s, back, o));
}

TEST(Apply, MoveObjectTransfersSensitivity) {
  auto c = compile_scenario(ScenarioName::ExfiltrationListing);
  const auto& w = c.w();
  auto u = w.require("user_0"), a = w.require("data_store_0"), b = w.require("data_store_138");
  IamState s = c.s();
  s.add_compromised(u);
  s.add_tuple(RelTuple::ds3(u, w.vocab().delete_object(), a));
  GenOptions o = gen_opts(FlowMode::Bulk, AttackType::SensitiveDataExfiltration);
  auto n = apply(w, s, make_action(Schema::MoveObject, {u, a, b}), o);
  EXPECT_FALSE(n.is_sensitive(a));
  EXPECT_TRUE(n.is_sensitive(b));
  EXPECT_TRUE(goal_satisfied(n, AttackType::SensitiveDataExfiltration));
}

// Generator output equals exhaustive grounding filtered by is_applicable.
TEST(ApplicableActions, MatchesBruteForceGrounding) {
  for (auto name : {ScenarioName::FlowWalkthrough, ScenarioName::ExfiltrationListing}) {
    auto sc = scenario(name);
    auto c = compile_scenario(name);
    auto all = all_groundings(c.w());
    for (auto mode : {FlowMode::Bulk, FlowMode::PerTuple})
      for (bool prune : {true, false}) {
        auto o = gen_opts(mode, sc.expected.goal, prune);
        for (const auto& s : reachable(c.w(), c.s(), o, 3, 12)) {
          auto gen = applicable_actions(c.w(), s, o);
          ASSERT_TRUE(std::is_sorted(gen.begin(), gen.end()));
          ASSERT_EQ(gen, brute_applicable(c.w(), s, o, all)) << to_string(name) << " " << to_string(mode);
        }
      }
  }
}

// Only moveObject removes anything from a state; everything else is monotone.
TEST(Apply, MonotoneExceptMoveProperty) {
  Gen g(21);
  std::size_t checked = 0;
  for (int i = 0; i < 40; ++i) {
    auto snap = random_snapshot(small_params(1000 + i, g));
    auto cp = compile(snap);
    for (auto mode : {FlowMode::Bulk, FlowMode::PerTuple}) {
      auto o = gen_opts(mode, AttackType::Impact, false);
      for (const auto& s : reachable(cp.world, cp.initial, o, 3, 40))
        for (const auto& a : applicable_actions(cp.world, s, o)) {
          auto n = apply(cp.world, s, a, o);
          for (const auto& t : s.tuples()) ASSERT_TRUE(n.contains(t));
          for (auto e : s.compromised()) ASSERT_TRUE(n.is_compromised(e));
          ASSERT_EQ(n.attack_flags() & s.attack_flags(), s.attack_flags());
          if (a.schema != Schema::MoveObject) {
            for (auto e : s.sensitive()) ASSERT_TRUE(n.is_sensitive(e));
          }
          // Applying an action twice changes nothing further, flags and tuples alike.
          IamState twice = n;
          apply_effects(cp.world, twice, a, o);
          if (a.schema != Schema::MoveObject) { ASSERT_EQ(twice, n) << format_action(cp.world, a); }
          ++checked;
        }
    }
  }
  EXPECT_GT(checked, 200u);
}

// Activated concrete tuples are always implied by a wildcard the holder had.
TEST(Apply, ActivationSoundnessProperty) {
  Gen g(33);
  for (int i = 0; i < 40; ++i) {
    auto p = small_params(2000 + i, g);
    p.star_resource_fraction = 0.5;
    auto cp = compile(random_snapshot(p));
    const auto& w = cp.world;
    const auto& v = w.vocab();
    auto o = gen_opts(FlowMode::Bulk, AttackType::Impact, false);
    for (const auto& s : reachable(w, cp.initial, o, 2, 30))
      for (const auto& a : applicable_actions(w, s, o)) {
        if (a.schema != Schema::ActivateId3 && a.schema != Schema::ActivateDs3) continue;
        EntityIx h = a.args[0], t = a.args[2];
        PermIx perm = a.args[1];
        bool ds = a.schema == Schema::ActivateDs3;
        EntityIx any = ds ? w.any_datastore() : w.any_user();
        auto mk = [&](PermIx q, EntityIx x) { return ds ? RelTuple::ds3(h, q, x) : RelTuple::id3(h, q, x); };
        ASSERT_TRUE(s.contains(mk(v.full_control(), t)) || s.contains(mk(v.full_control(), any)) ||
                    s.contains(mk(perm, any)))
            << format_action(w, a);
        ASSERT_NE(perm, v.full_control());
        ASSERT_FALSE(w.is_sentinel(t));
      }
  }
}

// The relaxed generator never loses an action the strict one has.
TEST(ApplicableActions, RelaxedIsSupersetProperty) {
  Gen g(44);
  for (int i = 0; i < 30; ++i) {
    auto cp = compile(random_snapshot(small_params(3000 + i, g)));
    auto strict = gen_opts(FlowMode::Bulk, AttackType::Ransomware);
    auto relaxed = strict;
    relaxed.relaxed = true;
    for (const auto& s : reachable(cp.world, cp.initial, strict, 2, 30)) {
      auto a = applicable_actions(cp.world, s, strict);
      auto b = applicable_actions(cp.world, s, relaxed);
      ASSERT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
  }
}

// Repeating per-tuple flows from src to dst until nothing changes reaches
// exactly what one bulk flow adds.
TEST(Flow, PerTupleClosureEqualsBulkProperty) {
  Gen g(55);
  std::size_t checked = 0;
  for (int i = 0; i < 60; ++i) {
    auto cp = compile(random_snapshot(small_params(4000 + i, g)));
    const auto& w = cp.world;
    IamState s = cp.initial;
    if (w.users().empty()) continue;
    s.add_compromised(w.users().front());
    auto bulk = gen_opts(FlowMode::Bulk, AttackType::Impact);
    auto per = gen_opts(FlowMode::PerTuple, AttackType::Impact);
    for (const auto& a : applicable_actions(w, s, bulk)) {
      if (a.schema != Schema::PermFlowBulk) continue;
      EntityIx src = a.args[0], dst = a.args[1];
      auto after_bulk = apply(w, s, a, bulk);
      IamState cur = s;
      for (bool changed = true; changed;) {
        changed = false;
        for (const auto& b : applicable_actions(w, cur, per)) {
          bool from_src = (b.schema == Schema::PermFlowId3 || b.schema == Schema::PermFlowDs3)
                              ? (b.args[0] == src && b.args[3] == dst)
                              : (b.schema == Schema::PermFlowId4 || b.schema == Schema::PermFlowDs4) &&
                                    b.args[1] == src && b.args[0] == dst;
          if (!from_src) continue;
          cur = apply(w, cur, b, per);
          changed = true;
        }
      }
      ASSERT_EQ(cur.tuples(), after_bulk.tuples());
      auto oracle = expected_bulk_additions(s, src, dst);
      ASSERT_EQ(after_bulk.tuples().size(), s.tuples().size() + oracle.size());
      ++checked;
    }
  }
  EXPECT_GT(checked, 10u);
}

TEST(Flow, SingleSourceBindsAssumedRole) {
  Snapshot snap;
  snap.identities = {{{"a", ""}, IdentityKind::Role}, {{"b", ""}, IdentityKind::Role}, {{"r", ""}, IdentityKind::Role},
                     {{"u", ""}, IdentityKind::User}};
  auto cp = compile(snap);
  const auto& w = cp.world;
  const auto& v = w.vocab();
  auto a = w.require("a"), b = w.require("b"), r = w.require("r"), u = w.require("u");
  IamState s = cp.initial;
  s.add_compromised(u);
  // r can be reached from a and from b by assumeRole alone
  s.add_tuple(RelTuple::id3(r, v.assume_role(), a));
  s.add_tuple(RelTuple::id3(r, v.assume_role(), b));
  auto single = gen_opts(FlowMode::Bulk, AttackType::Impact);
  single.constraint = AssumeConstraint::SingleSource;
  auto after = apply(w, s, make_action(Schema::PermFlowBulk, {a, r}), single);
  EXPECT_EQ(after.bound_source(r), a);
  EXPECT_FALSE(is_applicable(w, after, make_action(Schema::PermFlowBulk, {b, r}), single));
  EXPECT_TRUE(is_applicable(w, after, make_action(Schema::PermFlowBulk, {a, r}), single));
  auto free = single;
  free.constraint = AssumeConstraint::Unrestricted;
  EXPECT_TRUE(is_applicable(w, apply(w, s, make_action(Schema::PermFlowBulk, {a, r}), free),
                            make_action(Schema::PermFlowBulk, {b, r}), free));
}

TEST(AttackSchemas, PruningKeepsOnlyRelevant) {
  for (auto g : kAllAttackTypes)
    for (const auto& info : kSchemas)
      if (is_attack_schema(info.schema) && info.schema != Schema::EnableAttack) {
        bool relevant = schema_relevant(info.schema, g);
        if (info.schema == Schema::ReachAdminPolicy) { EXPECT_EQ(relevant, g == AttackType::PrivilegeEscalation); }
        if (info.schema == Schema::EncryptSensitiveData) { EXPECT_EQ(relevant, g == AttackType::Ransomware); }
      }
}

TEST(AttackSchemas, VersionedBucketResistsRansomware) {
  auto snap = scenario(ScenarioName::RansomwareListing).snapshot;
  for (auto& d : snap.datastores) d.versioning_enabled = true;
  auto cp = compile(snap);
  auto r = find_min_plan(cp.world, [&] {
    IamState s = cp.initial;
    s.add_compromised(cp.world.require("compromised_user"));
    return s;
  }(), AttackType::Ransomware, search_opts(FlowMode::Bulk));
  // only the key-holding path onto a fresh public bucket remains
  if (r.found())
    for (const auto& a : r.plan.actions)
      if (a.schema == Schema::EncryptSensitiveData) { EXPECT_NE(cp.world.name(a.args[1]), "sensitiveDataBucket"); }
}

TEST(Facts, PreconditionsHoldAndEffectsAreNew) {
  Gen g(66);
  for (int i = 0; i < 30; ++i) {
    auto cp = compile(random_snapshot(small_params(5000 + i, g)));
    auto o = gen_opts(FlowMode::PerTuple, AttackType::Impact, false);
    for (const auto& s : reachable(cp.world, cp.initial, o, 2, 20))
      for (const auto& a : applicable_actions(cp.world, s, o)) {
        for (const auto& f : precondition_facts(cp.world, s, a)) ASSERT_TRUE(fact_holds(s, f));
        auto n = apply(cp.world, s, a, o);
        for (const auto& f : added_facts(s, n)) {
          ASSERT_TRUE(fact_holds(n, f));
          ASSERT_FALSE(fact_holds(s, f));
        }
      }
  }
}
