#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "saca/advisor.hpp"
#include "saca/arbiter.hpp"
#include "saca/evaluation.hpp"
#include "saca/memory.hpp"
#include "saca/risk_model.hpp"
#include "saca/scene_config.hpp"

namespace {

using namespace saca;
namespace ev = saca::evaluation;

constexpr int kExitViolation = 3;

struct Common {
  std::uint64_t seed{1};
  std::string config{"intersection"};
  std::string advisor_mode{"stub"};
  std::string endpoint;
  std::string bank;
  std::string grid_cache;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Trial seed");
  cmd->add_option("-c,--config", c.config, "Scene config name or path");
  cmd->add_option("--advisor", c.advisor_mode, "Advisor backend")->check(CLI::IsMember({"stub", "remote"}));
  cmd->add_option("--endpoint", c.endpoint, "Endpoint config JSON for the remote advisor");
  cmd->add_option("--bank", c.bank, "Memory bank file (created when missing)");
  cmd->add_option("--grid-cache", c.grid_cache, "Directory for cached reachability grids");
}

void apply_grid_cache(const Common& c) {
  if (!c.grid_cache.empty()) ::setenv("SACA_GRID_CACHE", c.grid_cache.c_str(), 1);
}

advisor::EndpointConfig endpoint_from(const Common& c) {
  return c.endpoint.empty() ? advisor::EndpointConfig{} : advisor::load_endpoint_config(c.endpoint);
}

int cmd_run(const Common& c, bool no_risk, const std::string& method_key, const std::string& log_path) {
  apply_grid_cache(c);
  const SceneConfig cfg = load_scene_config(resolve_config(c.config));
  const WorldState world = ev::trial_world(cfg, !no_risk, c.seed, 0);

  auto method = ev::parse_method(method_key);
  if (!method) throw std::invalid_argument("unknown method: " + method_key);
  if (*method == ev::Method::saca_stub && c.advisor_mode == "remote") method = ev::Method::saca_remote;

  MemoryBank bank = c.bank.empty() ? MemoryBank{} : MemoryBank::open(c.bank);
  std::unique_ptr<advisor::Advisor> adv;
  switch (*method) {
    case ev::Method::saca_remote: adv = std::make_unique<advisor::RemoteAdvisor>(endpoint_from(c)); break;
    case ev::Method::no_finetune: adv = std::make_unique<ev::NaiveAdvisor>(); break;
    case ev::Method::imitation: break;
    default: adv = std::make_unique<advisor::StubAdvisor>(); break;
  }

  ev::EpisodeSetup setup;
  setup.method = *method;
  setup.duration_s = cfg.duration_s;
  setup.risk = &shared_risk_model();
  setup.bank = &bank;
  setup.advisor = adv.get();
  setup.learn = !c.bank.empty();
  const ev::EpisodeResult r = ev::run_episode(world, setup);

  std::printf("scene %s (%s), method %s, ego %.2f m/s\n", cfg.name.c_str(), no_risk ? "no risk" : "risk",
              std::string(ev::method_name(*method)).c_str(), world.ego.speed);
  const auto& log = r.log;
  if (log.preview_time)
    std::printf("preview   t=%.2f s  ttc=%.2f s\n", *log.preview_time, log.preview_ttc);
  for (const auto& f : log.forecasts)
    std::printf("  forecast %zu  sim=%.3f  band=%s  outcome=%s  policy=%s%s%s\n", f.index, f.memory_similarity,
                f.band.c_str(), f.outcome.c_str(),
                f.policy ? std::to_string(to_int(*f.policy)).c_str() : "-", f.validation.empty() ? "" : "  ",
                f.validation.c_str());
  if (log.trigger_time)
    std::printf("trigger   t=%.2f s  ttc=%.2f s  match=%.3f%s\n", *log.trigger_time, log.trigger_ttc,
                log.trigger_match, log.fallback ? "  (fallback)" : "");
  std::printf("policy    %d (%s)%s\n", to_int(r.executed()), std::string(policy_name(r.executed())).c_str(),
              r.emitted ? "" : "  never emitted");
  if (r.impact.occurred)
    std::printf("impact    t=%.2f s  agent=%s  zone=%s  rel_speed=%.3f m/s\n", r.impact.time,
                r.impact.agent_id.c_str(), std::string(zone_name(r.impact.zone)).c_str(), r.impact.rel_speed);
  else
    std::printf("impact    none\n");
  std::printf("losses    collision=%.3f  false_trigger=%.2f  advisor_calls=%zu\n", r.report.collision_loss,
              r.report.false_trigger_loss, log.advisor_calls);

  if (!log_path.empty()) {
    std::ofstream out(log_path);
    if (!out) throw std::runtime_error("cannot write " + log_path);
    out << arbiter::to_json(log) << "\n";
  }
  for (const std::string& v : r.violations) std::fprintf(stderr, "safety violation: %s\n", v.c_str());
  return r.violations.empty() ? 0 : kExitViolation;
}

int cmd_experiment(const Common& c, const std::string& spec_path, const std::vector<std::string>& methods,
                   std::size_t trials, bool no_risk, const std::string& out_dir, CLI::App* sub) {
  apply_grid_cache(c);
  ev::ExperimentSpec base = spec_path.empty() ? ev::ExperimentSpec{} : ev::load_experiment_spec(spec_path);
  if (sub->count("--seed")) base.seed = c.seed;
  if (sub->count("--config") || spec_path.empty()) base.config = c.config;
  if (sub->count("--trials")) base.trials = trials;
  if (sub->count("--no-risk")) base.risk_present = !no_risk;
  if (!c.bank.empty()) base.bank_path = c.bank;
  if (c.advisor_mode == "remote" || !c.endpoint.empty()) base.endpoint = endpoint_from(c);

  std::vector<ev::Method> list;
  for (const std::string& m : methods) {
    const auto parsed = ev::parse_method(m);
    if (!parsed) throw std::invalid_argument("unknown method: " + m);
    list.push_back(*parsed);
  }
  if (list.empty()) list.push_back(c.advisor_mode == "remote" ? ev::Method::saca_remote : base.method);

  std::vector<ev::ExperimentReport> reports;
  std::size_t violations = 0;
  for (ev::Method m : list) {
    ev::ExperimentSpec spec = base;
    spec.method = m;
    reports.push_back(ev::run_experiment(spec));
    violations += reports.back().violation_count();
  }
  std::cout << ev::comparison_csv(reports);
  if (!out_dir.empty()) ev::write_report(reports, out_dir);
  if (violations > 0) {
    std::fprintf(stderr, "%zu safety violations recorded\n", violations);
    return kExitViolation;
  }
  return 0;
}

int cmd_solve_grid(const Common& c, const std::vector<std::string>& configs) {
  if (c.grid_cache.empty()) throw std::invalid_argument("solve-grid needs --grid-cache");
  RiskModelOptions opts;
  opts.cache_dir = c.grid_cache;
  RiskModel model(opts);
  for (const std::string& name : configs.empty() ? std::vector<std::string>{c.config} : configs) {
    const SceneConfig cfg = load_scene_config(resolve_config(name));
    for (const Obstacle& o : cfg.initial.obstacles) {
      const auto s = model.surface(o.shape, cfg.initial.limits);
      std::printf("%s  %s  iterations=%d  v=[%.3f, %.3f]\n", cfg.name.c_str(), shape_cache_key(o.shape).c_str(),
                  s->iterations, s->params.v_min, s->params.v_max);
    }
  }
  std::printf("solved %zu new grid(s) into %s\n", model.solves(), c.grid_cache.c_str());
  return 0;
}

int cmd_export(const Common& c, const std::string& out_path) {
  if (c.bank.empty()) throw std::invalid_argument("export-dataset needs --bank");
  const MemoryBank bank = MemoryBank::load(c.bank);
  const auto records = bank.records();
  const auto summary = advisor::export_finetune_dataset(records, out_path);
  std::printf("wrote %zu examples (~%zu tokens) to %s\n", summary.examples, summary.token_estimate, out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-aware collision avoidance engine and simulator"};
  app.require_subcommand(1);

  Common run_c, exp_c, grid_c, export_c;

  auto* run = app.add_subcommand("run", "Simulate one engagement and print the decision trace");
  add_common(run, run_c);
  bool run_no_risk = false;
  std::string run_method = "saca_stub", run_log;
  run->add_flag("--no-risk", run_no_risk, "Apply the scene's no-risk edits");
  run->add_option("--method", run_method, "saca_stub | saca_remote | no_scenario_awareness | no_finetune | imitation");
  run->add_option("--log", run_log, "Write the engagement log as JSON");

  auto* exp = app.add_subcommand("experiment", "Run repeated trials and write the comparison table");
  add_common(exp, exp_c);
  std::string spec_path, out_dir;
  std::vector<std::string> methods;
  std::size_t trials = 10;
  bool exp_no_risk = false;
  exp->add_option("spec", spec_path, "Experiment spec JSON")->check(CLI::ExistingFile);
  exp->add_option("-m,--method", methods, "Methods to compare (repeatable)");
  exp->add_option("--trials", trials, "Trials per method")->check(CLI::PositiveNumber);
  exp->add_flag("--no-risk", exp_no_risk, "Run the no-risk twin");
  exp->add_option("-o,--out", out_dir, "Directory for comparison.csv and series files");

  auto* grid = app.add_subcommand("solve-grid", "Precompute reachability grids for the scene obstacles");
  add_common(grid, grid_c);
  std::vector<std::string> grid_configs;
  grid->add_option("configs", grid_configs, "Scene configs (defaults to --config)");

  auto* exp_ds = app.add_subcommand("export-dataset", "Export the memory bank as a chat fine-tuning dataset");
  add_common(exp_ds, export_c);
  std::string ds_out = "dataset.jsonl";
  exp_ds->add_option("-o,--out", ds_out, "Output JSONL path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_c, run_no_risk, run_method, run_log);
    if (*exp) return cmd_experiment(exp_c, spec_path, methods, trials, exp_no_risk, out_dir, exp);
    if (*grid) return cmd_solve_grid(grid_c, grid_configs);
    if (*exp_ds) return cmd_export(export_c, ds_out);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 1;
}
