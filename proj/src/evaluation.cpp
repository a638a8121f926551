#include "saca/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "saca/policy.hpp"

namespace saca::evaluation {

namespace {

bool arbitrated(Method m) { return m != Method::imitation; }

void check_invariants(const WorldState& w, std::vector<std::string>& out) {
  char buf[160];
  if (!(w.ego.speed >= 0.0) || !std::isfinite(w.ego.position.x) || !std::isfinite(w.ego.position.y)) {
    std::snprintf(buf, sizeof buf, "t=%.2f: ego state invalid (speed %.3f)", w.time, w.ego.speed);
    out.emplace_back(buf);
  }
  for (const Obstacle& o : w.obstacles)
    if (!(o.risk >= 0.0 && o.risk <= 1.0)) {
      std::snprintf(buf, sizeof buf, "t=%.2f: risk of %s outside [0,1]", w.time, o.id.c_str());
      out.emplace_back(buf);
    }
  for (const ParticipantState& p : w.participants)
    if (p.kind == ParticipantKind::pedestrian && p.velocity.norm() > w.limits.pedestrian_speed_max + 1e-9) {
      std::snprintf(buf, sizeof buf, "t=%.2f: pedestrian %s exceeds the speed limit", w.time, p.id.c_str());
      out.emplace_back(buf);
    }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::saca_stub: return "saca_stub";
    case Method::saca_remote: return "saca_remote";
    case Method::no_scenario_awareness: return "no_scenario_awareness";
    case Method::no_finetune: return "no_finetune";
    case Method::imitation: return "imitation";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view key) {
  constexpr std::string_view suffix = "_variant";
  if (key.size() > suffix.size() && key.substr(key.size() - suffix.size()) == suffix)
    key = key.substr(0, key.size() - suffix.size());
  for (Method m : kAllMethods)
    if (method_name(m) == key) return m;
  return std::nullopt;
}

advisor::AdvisorResult NaiveAdvisor::advise(const advisor::AdvisorRequest& request, std::stop_token) {
  const bool crossing = request.snapshot && request.snapshot->road.kind == RoadKind::intersection;
  advisor::AdvisorResponse r;
  r.policy = crossing ? PolicyId::AES_L : PolicyId::AES_R;
  r.rationale = crossing ? "Swerve left around the truck." : "Swerve right into the next lane.";
  r.token_count = advisor::estimate_tokens(r.rationale);
  return r;
}

PolicyId imitation_policy(RoadKind kind) {
  return kind == RoadKind::intersection ? PolicyId::AEB : PolicyId::ES_B_R;
}

bool imitation_fires(const WorldState& world, double t1) {
  const Vec2 fwd{std::cos(world.ego.heading), std::sin(world.ego.heading)};
  const double v = world.ego.speed;
  auto closes = [&](Vec2 pos, Vec2 vel, double half_length) {
    const double range = (pos - world.ego.position).dot(fwd) - half_length - 0.5 * world.limits.length;
    if (range < -half_length) return false;  // behind the ego
    const double closing = v - vel.dot(fwd);
    if (closing <= kClosingEpsilon) return false;
    return std::max(0.0, range) / closing <= t1;
  };
  for (const Obstacle& o : world.obstacles)
    if (closes(o.position, o.velocity, o.shape.a)) return true;
  for (const ParticipantState& p : world.participants)
    if (closes(p.position, p.velocity, 0.5 * p.footprint.length)) return true;
  return false;
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  if (!(stub_latency_s >= 0.0)) throw std::invalid_argument("experiment: stub_latency_s must be >= 0");
  arbiter.validate();
}

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  using nlohmann::json;
  ExperimentSpec s;
  try {
    const json j = json::parse(json_text);
    s.config = j.value("config", s.config);
    if (j.contains("method")) {
      const auto name = j.at("method").get<std::string>();
      const auto m = parse_method(name);
      if (!m) throw std::invalid_argument("experiment: unknown method '" + name + "'");
      s.method = *m;
    }
    s.trials = j.value("trials", s.trials);
    s.risk_present = j.value("risk_present", s.risk_present);
    s.seed = j.value("seed", s.seed);
    s.stub_latency_s = j.value("stub_latency_s", s.stub_latency_s);
    s.learn = j.value("learn", s.learn);
    s.parallel = j.value("parallel", s.parallel);
    if (j.contains("bank")) s.bank_path = j.at("bank").get<std::string>();
    if (j.contains("endpoint")) s.endpoint = advisor::parse_endpoint_config(j.at("endpoint").dump());
    if (j.contains("arbiter")) {
      const json& a = j.at("arbiter");
      s.arbiter.t1 = a.value("t1", s.arbiter.t1);
      s.arbiter.t2 = a.value("t2", s.arbiter.t2);
      s.arbiter.band_hi = a.value("band_hi", s.arbiter.band_hi);
      s.arbiter.band_lo = a.value("band_lo", s.arbiter.band_lo);
      s.arbiter.match_threshold = a.value("match_threshold", s.arbiter.match_threshold);
      s.arbiter.history_cases = a.value("history_cases", s.arbiter.history_cases);
    }
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("experiment spec: ") + ex.what());
  }
  s.validate();
  return s;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open experiment spec: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_spec(ss.str());
}

bool intervention_needed(const WorldState& initial, double duration_s, double dt) {
  WorldState w = initial;
  w.ego.control = {};
  const double end = initial.time + duration_s;
  while (true) {
    if (check_impact(w).occurred) return true;
    if (w.time >= end - 1e-9) return false;
    w = step(w, dt);
  }
}

EpisodeResult run_episode(const WorldState& initial, const EpisodeSetup& setup) {
  if (arbitrated(setup.method) && (!setup.bank || !setup.advisor))
    throw std::invalid_argument("run_episode: arbitrated methods need a bank and an advisor");
  EpisodeResult out;
  out.intervention_needed = intervention_needed(initial, setup.duration_s, setup.dt);

  std::optional<arbiter::Arbiter> arb;
  if (arbitrated(setup.method)) {
    arbiter::ArbiterDeps deps;
    deps.risk = setup.risk;
    deps.bank = setup.bank;
    deps.advisor = setup.advisor;
    deps.blind = setup.method == Method::no_scenario_awareness;
    arb.emplace(setup.arbiter, std::move(deps));
  }

  WorldState w = initial;
  w.ego.control = {};
  std::optional<policy::TrajectoryTemplate> tmpl;
  const double end = initial.time + setup.duration_s;
  while (true) {
    check_invariants(w, out.violations);
    if (setup.keep_trace) out.trace.push_back(w);
    if (ImpactReport hit = check_impact(w); hit.occurred) {
      out.impact = hit;
      break;
    }
    if (w.time >= end - 1e-9) break;

    if (!out.emitted) {
      std::optional<PolicyId> chosen;
      if (arb) {
        if (auto d = arb->tick(w)) chosen = d->policy;
      } else if (imitation_fires(w, setup.arbiter.t1)) {
        chosen = imitation_policy(w.road.kind);
      }
      if (chosen) {
        out.emitted = chosen;
        out.emit_time = w.time;
        if (*chosen != PolicyId::NI && w.ego.speed > 0.0) {
          policy::GenerateOptions go;
          go.dt = setup.dt;
          go.duration = std::max(setup.dt, end - w.time + setup.dt);
          tmpl = policy::generate(*chosen, w.ego, w.road, w.limits, go);
        }
      }
    } else if (arb) {
      arb->tick(w);  // keeps the engagement log current; emits at most once
    }

    WorldState next = step(w, setup.dt);
    if (tmpl) {
      const auto s = tmpl->at(next.time - out.emit_time);
      next.ego.position = s.position;
      next.ego.heading = s.heading;
      next.ego.speed = s.speed;
      next.ego.slip = wrap_angle(s.course - s.heading);
      next.ego.yaw_rate = 0.0;
    }
    w = std::move(next);
  }

  out.report = arbiter::evaluate_run(out.impact, out.intervention_needed, out.executed());
  if (arb) {
    if (setup.learn && arb->phase() == arbiter::Phase::triggered) arb->learn_engagement(out.report);
    out.log = arb->log();
    out.log.report = out.report;
    double latency = 0.0;
    for (const arbiter::ForecastLog& f : out.log.forecasts) {
      if (f.outcome.rfind("failure: timeout", 0) == 0) out.inference_in_window = false;
      if (f.outcome == "reasoned") {
        latency += f.advisor_latency_s;
        out.advisor_tokens += f.advisor_tokens;
        ++out.advisor_answers;
      }
    }
    if (out.advisor_answers > 0) out.advisor_latency_s = latency / static_cast<double>(out.advisor_answers);
  }
  return out;
}

std::size_t ExperimentReport::violation_count() const {
  std::size_t n = 0;
  for (const TrialRecord& r : records) n += r.violations.size();
  return n;
}

WorldState trial_world(const SceneConfig& cfg, bool risk_present, std::uint64_t seed, std::size_t index) {
  WorldState w = risk_present ? cfg.initial : no_risk_world(cfg);
  if (cfg.speed_jitter_mps > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    // Manual mapping keeps the draw identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double dv = (2.0 * u - 1.0) * cfg.speed_jitter_mps;
    w.ego.speed = std::max(0.0, w.ego.speed + dv);
    for (ParticipantState& p : w.participants) {
      if (std::find(cfg.jitter_participants.begin(), cfg.jitter_participants.end(), p.id) ==
          cfg.jitter_participants.end())
        continue;
      const double v = p.velocity.norm();
      if (v > 1e-9) p.velocity = p.velocity * (std::max(0.0, v + dv) / v);
    }
  }
  return w;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  SceneConfig cfg;
  try {
    cfg = load_scene_config(resolve_config(spec.config));
  } catch (const std::runtime_error& ex) {
    throw std::invalid_argument(std::string("experiment: ") + ex.what());
  }
  if (spec.method == Method::saca_remote && !spec.endpoint)
    throw std::invalid_argument("experiment: saca_remote needs an endpoint config");

  ExperimentReport rep;
  rep.config = cfg.name;
  rep.method = spec.method;
  rep.risk_present = spec.risk_present;
  rep.seed = spec.seed;
  rep.trials = spec.trials;
  rep.records.resize(spec.trials);

  std::optional<MemoryBank> shared;
  if (spec.bank_path) shared = MemoryBank::open(*spec.bank_path);
  const bool parallel = spec.parallel && !shared && spec.method != Method::saca_remote;

  auto run_trial = [&](std::size_t i) {
    const WorldState world = trial_world(cfg, spec.risk_present, spec.seed, i);
    MemoryBank local;
    std::unique_ptr<advisor::Advisor> adv;
    switch (spec.method) {
      case Method::saca_stub:
      case Method::no_scenario_awareness:
        adv = std::make_unique<advisor::StubAdvisor>(advisor::StubOptions{spec.stub_latency_s, 2.0});
        break;
      case Method::saca_remote: adv = std::make_unique<advisor::RemoteAdvisor>(*spec.endpoint); break;
      case Method::no_finetune: adv = std::make_unique<NaiveAdvisor>(); break;
      case Method::imitation: break;
    }
    EpisodeSetup setup;
    setup.method = spec.method;
    setup.arbiter = spec.arbiter;
    setup.duration_s = cfg.duration_s;
    setup.risk = &shared_risk_model();
    setup.bank = shared ? &*shared : &local;
    setup.advisor = adv.get();
    setup.learn = spec.learn;
    const EpisodeResult r = run_episode(world, setup);

    TrialRecord& t = rep.records[i];
    t.index = i;
    t.ego_speed = world.ego.speed;
    t.policy = r.executed();
    t.fallback = !r.inference_in_window;
    t.counted = r.inference_in_window;
    t.collision_loss = r.report.collision_loss;
    t.false_trigger_loss = r.report.false_trigger_loss;
    t.zone = r.report.zone;
    t.rel_speed = r.report.rel_speed;
    t.latency_s = r.advisor_latency_s;
    t.tokens = r.advisor_tokens;
    t.advisor_calls = r.log.advisor_calls;
    t.violations = r.violations;
  };

  if (parallel) {
    std::vector<std::exception_ptr> errors(spec.trials);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < spec.trials; ++i) {
      try {
        run_trial(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t i = 0; i < spec.trials; ++i) run_trial(i);
  }

  double lat_sum = 0.0, tok_sum = 0.0;
  std::size_t answered = 0;
  rep.latency_min_s = std::numeric_limits<double>::infinity();
  for (const TrialRecord& t : rep.records) {
    if (!t.counted) {
      ++rep.fallback_trials;
      continue;
    }
    ++rep.counted;
    rep.collision_loss += t.collision_loss;
    rep.false_trigger_loss += t.false_trigger_loss;
    if (t.tokens > 0) {
      lat_sum += t.latency_s;
      tok_sum += static_cast<double>(t.tokens);
      rep.latency_min_s = std::min(rep.latency_min_s, t.latency_s);
      ++answered;
    }
  }
  if (rep.counted > 0) {
    rep.collision_loss /= static_cast<double>(rep.counted);
    rep.false_trigger_loss /= static_cast<double>(rep.counted);
  }
  rep.has_latency = spec.method == Method::saca_remote && answered > 0;
  if (rep.has_latency) {
    rep.latency_mean_s = lat_sum / static_cast<double>(answered);
    rep.tokens_mean = tok_sum / static_cast<double>(answered);
  } else {
    rep.latency_min_s = 0.0;
  }
  return rep;
}

std::string comparison_csv(std::vector<ExperimentReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const ExperimentReport& a, const ExperimentReport& b) {
    if (a.config != b.config) return a.config < b.config;
    if (a.risk_present != b.risk_present) return a.risk_present > b.risk_present;
    return static_cast<int>(a.method) < static_cast<int>(b.method);
  });
  std::string out =
      "config,risk_present,method,trials,counted,fallback_trials,collision_loss,false_trigger_loss,"
      "latency_mean_s,latency_min_s,tokens_mean\n";
  for (const ExperimentReport& r : reports) {
    out += r.config + "," + (r.risk_present ? "1" : "0") + "," + std::string(method_name(r.method)) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.counted) + "," + std::to_string(r.fallback_trials) +
           "," + fmt(r.collision_loss) + "," + fmt(r.false_trigger_loss) + ",";
    if (r.has_latency)
      out += fmt(r.latency_mean_s) + "," + fmt(r.latency_min_s) + "," + fmt(r.tokens_mean);
    else
      out += ",,";
    out += "\n";
  }
  return out;
}

std::string series_csv(const ExperimentReport& r) {
  std::string out =
      "trial,ego_speed,policy,counted,collision_loss,false_trigger_loss,zone,rel_speed,advisor_calls,latency_s,"
      "tokens\n";
  for (const TrialRecord& t : r.records) {
    out += std::to_string(t.index) + "," + fmt(t.ego_speed) + "," + std::to_string(to_int(t.policy)) + "," +
           (t.counted ? "1" : "0") + "," + fmt(t.collision_loss) + "," + fmt(t.false_trigger_loss) + "," +
           std::string(zone_name(t.zone)) + "," + fmt(t.rel_speed) + "," + std::to_string(t.advisor_calls) + "," +
           (r.has_latency ? fmt(t.latency_s) : std::string()) + "," +
           (r.has_latency ? std::to_string(t.tokens) : std::string()) + "\n";
  }
  return out;
}

void write_report(std::vector<ExperimentReport> reports, const std::filesystem::path& dir) {
  if (reports.empty()) throw std::invalid_argument("write_report: no reports");
  std::filesystem::create_directories(dir);
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
  };
  for (const ExperimentReport& r : reports)
    write(dir / ("series_" + r.config + "_" + (r.risk_present ? "risk" : "norisk") + "_" +
                 std::string(method_name(r.method)) + ".csv"),
          series_csv(r));
  write(dir / "comparison.csv", comparison_csv(std::move(reports)));
}

}  // namespace saca::evaluation
