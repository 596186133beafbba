#pragma once

// End-to-end analysis of one snapshot: partition, compile, enumerate the
// compromisable users per attack type, and the versioned JSON report.

#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "cloudlens/compile.hpp"
#include "cloudlens/partition.hpp"
#include "cloudlens/search.hpp"

namespace cloudlens {

inline constexpr std::string_view kReportSchema = "cloudlens-report/1";

struct AnalyzeOptions {
  std::vector<AttackType> goals{kAllAttackTypes.begin(), kAllAttackTypes.end()};
  FlowMode mode = FlowMode::Bulk;
  AssumeConstraint constraint = AssumeConstraint::Unrestricted;
  SearchLimits limits;
  unsigned jobs = 1;
  std::size_t partition_max = 0;  // 0: no budget
  CompileOptions compile;
};

struct PlanRecord {
  std::string user;
  std::vector<std::string> actions;

  std::size_t cost() const { return actions.size(); }
};

struct AttackFindings {
  std::vector<std::string> compromisable_users;  // sorted
  std::vector<PlanRecord> plans;                 // one per user, same order
  std::vector<std::string> exhausted_users;      // sorted
};

struct PartitionTiming {
  std::size_t users = 0;
  double compile_seconds = 0;
  double ground_seconds = 0;
  double search_seconds = 0;
};

struct AnalysisReport {
  std::string source;
  AnalyzeOptions options;
  std::map<AttackType, AttackFindings> per_attack;
  std::map<std::size_t, std::size_t> path_length_histogram;
  std::vector<PartitionTiming> timing;
  std::size_t partitions = 0;
  std::vector<std::string> excluded_admins;
  CompilationReport compilation;
  bool partial = false;
};

inline AnalysisReport analyze(const Snapshot& snap, const AnalyzeOptions& opts, std::string source = {}) {
  using clock = std::chrono::steady_clock;
  AnalysisReport r;
  r.source = std::move(source);
  r.options = opts;

  auto whole = compile(snap, opts.compile);
  r.compilation = whole.report;
  for (auto u : admin_users(whole.world, whole.initial)) r.excluded_admins.push_back(whole.world.name(u));

  const std::size_t budget = opts.partition_max == 0 ? std::numeric_limits<std::size_t>::max() : opts.partition_max;
  auto parts = partition(snap, budget, opts.compile);
  r.partitions = parts.size();
  for (auto g : opts.goals) r.per_attack[g];

  for (const auto& part : parts) {
    PartitionTiming t;
    t.users = part.source_users.size();
    auto c0 = clock::now();
    auto cp = compile(part.snapshot, opts.compile);
    t.compile_seconds = std::chrono::duration<double>(clock::now() - c0).count();
    std::vector<EntityIx> candidates;
    for (const auto& u : part.source_users) candidates.push_back(cp.world.require(u));
    if (candidates.empty()) {
      r.timing.push_back(t);
      continue;
    }
    SearchOptions so;
    so.mode = opts.mode;
    so.constraint = opts.constraint;
    so.limits = opts.limits;
    for (auto g : opts.goals) {
      auto e = enumerate_compromisable_users(cp.world, cp.initial, g, so, opts.jobs, candidates);
      t.ground_seconds += e.stats.ground_seconds;
      t.search_seconds += e.stats.wall_seconds - e.stats.ground_seconds;
      auto& f = r.per_attack[g];
      for (const auto& o : e.found) {
        PlanRecord rec{cp.world.name(o.user), {}};
        for (const auto& a : o.result.plan.actions) rec.actions.push_back(format_action(cp.world, a));
        f.compromisable_users.push_back(rec.user);
        f.plans.push_back(std::move(rec));
      }
      for (auto u : e.exhausted) f.exhausted_users.push_back(cp.world.name(u));
      if (!e.exhausted.empty()) r.partial = true;
    }
    r.timing.push_back(t);
  }

  for (auto& [_, f] : r.per_attack) {
    std::sort(f.plans.begin(), f.plans.end(), [](const auto& a, const auto& b) { return a.user < b.user; });
    std::sort(f.compromisable_users.begin(), f.compromisable_users.end());
    std::sort(f.exhausted_users.begin(), f.exhausted_users.end());
    for (const auto& p : f.plans) ++r.path_length_histogram[p.cost()];
  }
  return r;
}

inline nlohmann::ordered_json report_to_json(const AnalysisReport& r, bool with_timing = true) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = kReportSchema;
  j["source"] = r.source;
  ordered_json goals = ordered_json::array();
  for (auto g : r.options.goals) goals.push_back(to_string(g));
  j["options"] = {{"goals", goals},
                  {"mode", to_string(r.options.mode)},
                  {"assume", to_string(r.options.constraint)},
                  {"max_states", r.options.limits.max_states},
                  {"max_seconds", r.options.limits.max_seconds},
                  {"partition_max", r.options.partition_max},
                  {"strict_trust", r.options.compile.strict_trust}};
  j["partitions"] = r.partitions;
  j["partial"] = r.partial;
  j["excluded_admins"] = r.excluded_admins;
  ordered_json skipped = ordered_json::array();
  for (const auto& s : r.compilation.statements_skipped)
    skipped.push_back({{"statement", s.locator}, {"reason", s.reason}});
  j["compilation"] = {{"tuples_emitted", r.compilation.tuples_emitted},
                      {"deny_subtractions", r.compilation.deny_subtractions},
                      {"statements_skipped", skipped}};
  ordered_json per = ordered_json::object();
  for (const auto& [g, f] : r.per_attack) {
    ordered_json plans = ordered_json::array();
    for (const auto& p : f.plans) plans.push_back({{"user", p.user}, {"cost", p.cost()}, {"actions", p.actions}});
    per[std::string(to_string(g))] = {{"compromisable_users", f.compromisable_users},
                                      {"exhausted_users", f.exhausted_users},
                                      {"plans", plans}};
  }
  j["per_attack"] = per;
  ordered_json hist = ordered_json::object();
  for (auto [len, n] : r.path_length_histogram) hist[std::to_string(len)] = n;
  j["path_length_histogram"] = hist;
  if (with_timing) {
    ordered_json timing = ordered_json::array();
    for (const auto& t : r.timing)
      timing.push_back({{"users", t.users},
                        {"compile_seconds", t.compile_seconds},
                        {"ground_seconds", t.ground_seconds},
                        {"search_seconds", t.search_seconds}});
    j["timing"] = timing;
  }
  return j;
}

/// Structural check of a report document; returns an empty string when
/// valid, otherwise the first problem found.
inline std::string check_report_json(const nlohmann::json& j) {
  auto need = [&](const nlohmann::json& o, const char* key, auto pred, const char* what) -> std::string {
    if (!o.is_object() || !o.contains(key)) return std::string("missing '") + key + "'";
    if (!pred(o.at(key))) return std::string("'") + key + "' must be " + what;
    return {};
  };
  auto is_str = [](const auto& v) { return v.is_string(); };
  auto is_obj = [](const auto& v) { return v.is_object(); };
  auto is_arr = [](const auto& v) { return v.is_array(); };
  auto is_uint = [](const auto& v) { return v.is_number_unsigned(); };
  auto is_bool = [](const auto& v) { return v.is_boolean(); };
  for (auto e : {need(j, "schema", is_str, "a string"), need(j, "source", is_str, "a string"),
                 need(j, "options", is_obj, "an object"), need(j, "partitions", is_uint, "a count"),
                 need(j, "partial", is_bool, "a boolean"), need(j, "excluded_admins", is_arr, "an array"),
                 need(j, "compilation", is_obj, "an object"), need(j, "per_attack", is_obj, "an object"),
                 need(j, "path_length_histogram", is_obj, "an object")})
    if (!e.empty()) return e;
  if (j["schema"] != kReportSchema) return "unsupported schema";
  std::size_t plans = 0;
  for (const auto& [name, f] : j["per_attack"].items()) {
    if (!attack_type_from_string(name)) return "unknown attack type '" + name + "'";
    for (auto e : {need(f, "compromisable_users", is_arr, "an array"), need(f, "exhausted_users", is_arr, "an array"),
                   need(f, "plans", is_arr, "an array")})
      if (!e.empty()) return name + ": " + e;
    if (f["plans"].size() != f["compromisable_users"].size()) return name + ": one plan per user expected";
    for (const auto& p : f["plans"]) {
      for (auto e : {need(p, "user", is_str, "a string"), need(p, "cost", is_uint, "a count"),
                     need(p, "actions", is_arr, "an array")})
        if (!e.empty()) return name + ": " + e;
      if (p["cost"] != p["actions"].size()) return name + ": cost differs from action count";
    }
    plans += f["plans"].size();
  }
  std::size_t total = 0;
  for (const auto& [len, n] : j["path_length_histogram"].items()) {
    if (!n.is_number_unsigned()) return "histogram counts must be counts";
    total += n.get<std::size_t>();
  }
  if (total != plans) return "histogram total differs from plan count";
  if (j.contains("timing")) {
    if (!j["timing"].is_array()) return "'timing' must be an array";
    if (j["timing"].size() != j["partitions"].get<std::size_t>()) return "one timing entry per partition expected";
  }
  return {};
}

/// Human-readable summary table.
inline std::string format_report_table(const AnalysisReport& r) {
  std::string out;
  auto pad = [](std::string s, std::size_t n) {
    if (s.size() < n) s.append(n - s.size(), ' ');
    return s;
  };
  out += pad("attack", 30) + pad("users", 8) + "shortest\n";
  for (const auto& [g, f] : r.per_attack) {
    std::string shortest = "-";
    if (!f.plans.empty()) {
      std::size_t best = f.plans.front().cost();
      for (const auto& p : f.plans) best = std::min(best, p.cost());
      shortest = std::to_string(best);
    }
    out += pad(std::string(to_string(g)), 30) + pad(std::to_string(f.compromisable_users.size()), 8) + shortest;
    if (!f.exhausted_users.empty()) out += "  (" + std::to_string(f.exhausted_users.size()) + " exhausted)";
    out += '\n';
  }
  out += "partitions: " + std::to_string(r.partitions);
  if (!r.excluded_admins.empty()) out += ", admins excluded: " + std::to_string(r.excluded_admins.size());
  if (r.partial) out += ", PARTIAL";
  out += '\n';
  return out;
}

}  // namespace cloudlens
