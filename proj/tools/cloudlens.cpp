// cloudlens: attack-path analysis of cloud IAM snapshots.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "cloudlens/cloudlens.hpp"

namespace fs = std::filesystem;
using namespace cloudlens;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kExhausted = 2;

struct InputError : Error {
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(path.string() + ": cannot write");
  out << text;
  if (!out) throw InputError(path.string() + ": write failed");
}

Snapshot load_snapshot(const std::string& path) {
  try {
    return parse_snapshot(read_file(path));
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

AttackType parse_goal(const std::string& s) {
  auto g = attack_type_from_string(s);
  if (!g) throw InputError("unknown goal '" + s + "'");
  return *g;
}

struct Common {
  std::string mode = "bulk";
  std::string assume = "unrestricted";
  bool strict_trust = false;

  FlowMode flow_mode() const { return mode == "per-tuple" ? FlowMode::PerTuple : FlowMode::Bulk; }
  AssumeConstraint constraint() const {
    return assume == "single" ? AssumeConstraint::SingleSource : AssumeConstraint::Unrestricted;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--mode", c.mode, "permission flow granularity")->check(CLI::IsMember({"bulk", "per-tuple"}));
  cmd->add_option("--assume", c.assume, "role assumption constraint")
      ->check(CLI::IsMember({"single", "unrestricted"}));
  cmd->add_flag("--strict-trust", c.strict_trust, "require both an AssumeRole grant and a trust entry");
}

struct AnalyzeArgs {
  std::string snapshot;
  std::vector<std::string> goals;
  Common common;
  unsigned jobs = 1;
  std::size_t max_states = SearchLimits{}.max_states;
  double max_seconds = SearchLimits{}.max_seconds;
  std::size_t partition_max = 0;
  std::string out;
  bool json = false;
};

int run_analyze(const AnalyzeArgs& a) {
  auto snap = load_snapshot(a.snapshot);
  AnalyzeOptions o;
  if (!a.goals.empty()) {
    o.goals.clear();
    for (const auto& g : a.goals) o.goals.push_back(parse_goal(g));
  }
  o.mode = a.common.flow_mode();
  o.constraint = a.common.constraint();
  o.limits = {a.max_states, a.max_seconds};
  o.jobs = a.jobs;
  o.partition_max = a.partition_max;
  o.compile.strict_trust = a.common.strict_trust;
  spdlog::info("analyzing {} ({} goals, {} mode, {} jobs)", a.snapshot, o.goals.size(), to_string(o.mode), o.jobs);
  auto report = analyze(snap, o, fs::path(a.snapshot).filename().string());
  for (const auto& s : report.compilation.statements_skipped) spdlog::debug("skipped {}: {}", s.locator, s.reason);
  auto doc = report_to_json(report).dump(2) + "\n";
  if (!a.out.empty()) {
    write_file(a.out, doc);
    spdlog::info("report written to {}", a.out);
  }
  std::cout << (a.json ? doc : format_report_table(report));
  if (report.partial) {
    spdlog::warn("search limits reached; report is partial");
    return kExhausted;
  }
  return kOk;
}

struct EmitArgs {
  std::string snapshot;
  std::string goal = "privilege_escalation";
  Common common;
  std::size_t partition_max = 0;
  std::string out = ".";
  std::string name;
};

int run_emit(const EmitArgs& a) {
  auto snap = load_snapshot(a.snapshot);
  auto goal = parse_goal(a.goal);
  fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw InputError(a.out + ": not a directory");
  std::string stem = a.name.empty() ? fs::path(a.snapshot).stem().string() : a.name;

  auto domain = emit_domain(a.common.flow_mode());
  auto domain_path = dir / (stem + ".domain.pddl");
  write_file(domain_path, domain.text);
  std::cout << domain_path.string() << "\n";

  CompileOptions co{a.common.strict_trust};
  std::vector<Snapshot> pieces;
  if (a.partition_max == 0) {
    pieces.push_back(snap);
  } else {
    for (auto& p : partition(snap, a.partition_max, co)) pieces.push_back(std::move(p.snapshot));
  }
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    auto cp = compile(pieces[i], co);
    NameMap names(cp.world);
    std::string pname = pieces.size() == 1 ? stem : stem + "_p" + std::to_string(i);
    auto problem = emit_problem(cp.world, cp.initial, goal, pname, names);
    auto path = dir / (pname + ".problem.pddl");
    write_file(path, problem.text);
    std::cout << path.string() << "\n";
  }
  return kOk;
}

struct ValidateArgs {
  std::string snapshot;
  std::string plan;
  std::string goal;
  Common common;
};

int run_validate(const ValidateArgs& a) {
  auto snap = load_snapshot(a.snapshot);
  auto goal = parse_goal(a.goal);
  auto cp = compile(snap, CompileOptions{a.common.strict_trust});
  NameMap names(cp.world);
  AttackPlan plan;
  try {
    plan = parse_plan_file(read_file(a.plan), cp.world, names);
  } catch (const ParseError& e) {
    throw InputError(a.plan + ": " + e.what());
  }
  auto v = validate_plan(cp.world, cp.initial, plan, goal, a.common.constraint());
  if (v.ok) {
    std::cout << "valid: " << plan.cost() << " actions reach " << to_string(goal) << "\n";
    return kOk;
  }
  std::cout << "invalid: " << a.plan << ": " << v.message << "\n";
  return kInputError;
}

struct GenArgs {
  std::string scenario;
  GenParams params;
  std::string out;
};

int run_gen(const GenArgs& a) {
  auto emit = [&](const fs::path& path, const std::string& text) {
    if (a.out.empty()) {
      std::cout << text;
    } else {
      write_file(path, text);
      std::cout << path.string() << "\n";
    }
  };
  if (a.scenario == "all") {
    if (a.out.empty()) throw InputError("--out DIR is required with --scenario all");
    fs::create_directories(a.out);
    for (auto n : kAllScenarios)
      emit(fs::path(a.out) / (std::string(to_string(n)) + ".json"), format_snapshot(scenario(n).snapshot));
    return kOk;
  }
  if (!a.scenario.empty()) {
    auto n = scenario_from_string(a.scenario);
    if (!n) throw InputError("unknown scenario '" + a.scenario + "'");
    emit(a.out, format_snapshot(scenario(*n).snapshot));
    return kOk;
  }
  emit(a.out, format_snapshot(random_snapshot(a.params)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("cloudlens");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lv = std::getenv("CLOUDLENS_LOG")) spdlog::cfg::helpers::load_levels(lv);

  CLI::App app{"Attack-path analysis of cloud IAM snapshots"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "enumerate compromisable users per attack type");
  analyze_cmd->add_option("snapshot", an.snapshot, "snapshot JSON file")->required();
  analyze_cmd->add_option("--goal", an.goals, "attack type (repeatable; default all)");
  add_common(analyze_cmd, an.common);
  analyze_cmd->add_option("--jobs", an.jobs, "worker threads")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--max-states", an.max_states, "state budget per search");
  analyze_cmd->add_option("--max-seconds", an.max_seconds, "time budget per search");
  analyze_cmd->add_option("--partition-max", an.partition_max, "entities per partition (0: unlimited)");
  analyze_cmd->add_option("--out", an.out, "report JSON path");
  analyze_cmd->add_flag("--json", an.json, "print the report JSON instead of the table");

  EmitArgs em;
  auto* emit_cmd = app.add_subcommand("emit-pddl", "write PDDL domain and problem files");
  emit_cmd->add_option("snapshot", em.snapshot, "snapshot JSON file")->required();
  emit_cmd->add_option("--goal", em.goal, "attack type");
  add_common(emit_cmd, em.common);
  emit_cmd->add_option("--partition-max", em.partition_max, "entities per partition (0: unlimited)");
  emit_cmd->add_option("--out", em.out, "output directory");
  emit_cmd->add_option("--name", em.name, "file name stem (default: snapshot stem)");

  ValidateArgs va;
  auto* validate_cmd = app.add_subcommand("validate", "check a plan file against a snapshot");
  validate_cmd->add_option("snapshot", va.snapshot, "snapshot JSON file")->required();
  validate_cmd->add_option("plan", va.plan, "plan file")->required();
  validate_cmd->add_option("--goal", va.goal, "attack type")->required();
  add_common(validate_cmd, va.common);

  GenArgs ge;
  auto* gen_cmd = app.add_subcommand("gen", "write a scenario or random snapshot");
  gen_cmd->add_option("--scenario", ge.scenario, "scenario name, or 'all' with --out DIR");
  gen_cmd->add_option("--seed", ge.params.seed, "random seed");
  gen_cmd->add_option("--users", ge.params.users);
  gen_cmd->add_option("--groups", ge.params.groups);
  gen_cmd->add_option("--roles", ge.params.roles);
  gen_cmd->add_option("--datastores", ge.params.datastores);
  gen_cmd->add_option("--policies", ge.params.policies);
  gen_cmd->add_option("--accounts", ge.params.accounts);
  gen_cmd->add_option("--grant-density", ge.params.grant_density);
  gen_cmd->add_option("--out", ge.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInputError;
  }

  try {
    if (*analyze_cmd) return run_analyze(an);
    if (*emit_cmd) return run_emit(em);
    if (*validate_cmd) return run_validate(va);
    if (*gen_cmd) return run_gen(ge);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
