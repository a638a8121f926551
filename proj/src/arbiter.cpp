#include "saca/arbiter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace saca::arbiter {

namespace {

using clock = std::chrono::steady_clock;

double seconds_between(clock::time_point a, clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

ScenarioSnapshot blinded(ScenarioSnapshot s) {
  for (Obstacle& o : s.obstacles) o.risk = 0.0;
  for (ParticipantState& p : s.participants) {
    p.intention = Intention::M;
    p.confidence = 1.0;
    p.ranking = kAllIntentions;
  }
  return s;
}

std::vector<HistoricalCase> to_cases(const std::vector<MemoryMatch>& matches) {
  std::vector<HistoricalCase> out;
  for (const MemoryMatch& m : matches)
    out.push_back({m.record.id, m.similarity, m.record.policy, m.record.outcome.collision_loss,
                   m.record.outcome.false_trigger_loss, {}});
  return out;
}

}  // namespace

void ArbiterConfig::validate() const {
  if (!(t1 > 0.0 && t1 < t2)) throw std::invalid_argument("arbiter config: need 0 < t1 < t2");
  if (!(band_lo > 0.0 && band_lo < band_hi && band_hi <= 1.0))
    throw std::invalid_argument("arbiter config: need 0 < band_lo < band_hi <= 1");
  if (!(intention_dt > 0.0)) throw std::invalid_argument("arbiter config: intention_dt must be positive");
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::retrieved: return "retrieved";
    case Provenance::validated: return "validated";
    case Provenance::reasoned: return "reasoned";
  }
  return "?";
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::idle: return "idle";
    case Phase::armed: return "armed";
    case Phase::triggered: return "triggered";
  }
  return "?";
}

std::string to_json(const EngagementLog& log) {
  nlohmann::json j;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["preview_time"] = opt(log.preview_time);
  j["trigger_time"] = opt(log.trigger_time);
  j["preview_ttc"] = log.preview_ttc;
  j["trigger_ttc"] = log.trigger_ttc;
  j["advisor_calls"] = log.advisor_calls;
  j["trigger_match"] = log.trigger_match;
  j["fallback"] = log.fallback;
  j["emitted_policy"] = log.emitted ? nlohmann::json(to_int(*log.emitted)) : nlohmann::json(nullptr);
  j["forecasts"] = nlohmann::json::array();
  for (const ForecastLog& f : log.forecasts) {
    nlohmann::json e;
    e["index"] = f.index;
    e["memory_similarity"] = f.memory_similarity;
    e["band"] = f.band;
    e["outcome"] = f.outcome;
    e["policy"] = f.policy ? nlohmann::json(to_int(*f.policy)) : nlohmann::json(nullptr);
    e["validation"] = f.validation;
    e["advisor_latency_s"] = f.advisor_latency_s;
    e["advisor_tokens"] = f.advisor_tokens;
    e["resolve_wall_s"] = f.resolve_wall_s;
    j["forecasts"].push_back(e);
  }
  if (log.report) {
    j["collision_loss"] = log.report->collision_loss;
    j["false_trigger_loss"] = log.report->false_trigger_loss;
    j["impact_zone"] = std::string(zone_name(log.report->zone));
    j["impact_rel_speed"] = log.report->rel_speed;
    j["intervention_needed"] = log.report->intervention_needed;
  }
  j["learned_ids"] = log.learned_ids;
  return j.dump();
}

double injury_rate(ImpactZone zone) {
  switch (zone) {
    case ImpactZone::side: return 0.41;
    case ImpactZone::front: return 0.35;
    case ImpactZone::rear: return 0.21;
    case ImpactZone::none: return 0.0;
  }
  return 0.0;
}

EvaluationReport evaluate_run(const ImpactReport& impact, bool intervention_needed, PolicyId policy) {
  EvaluationReport r;
  r.intervention_needed = intervention_needed;
  if (impact.occurred) {
    r.zone = impact.zone;
    r.rel_speed = impact.rel_speed;
    r.collision_loss = impact.rel_speed * injury_rate(impact.zone);
  }
  if (!intervention_needed && policy != PolicyId::NI) r.false_trigger_loss = policy::trigger_severity(policy);
  return r;
}

ImpactReport rollout_policy(const WorldState& world, PolicyId policy, double duration, double dt) {
  const bool moving = world.ego.speed > 0.0;
  policy::GenerateOptions opts;
  opts.dt = dt;
  opts.duration = duration;
  const auto tmpl =
      policy::generate(moving ? policy : PolicyId::NI, world.ego, world.road, world.limits, opts);
  WorldState w = world;
  for (std::size_t k = 0; k < tmpl.samples.size(); ++k) {
    const auto& s = tmpl.samples[k];
    w.ego.position = s.position;
    w.ego.heading = s.heading;
    w.ego.speed = s.speed;
    w.ego.slip = wrap_angle(s.course - s.heading);
    if (ImpactReport r = check_impact(w); r.occurred) return r;
    if (k + 1 < tmpl.samples.size()) w = step(w, dt);
  }
  return {};
}

std::string learn(MemoryBank& bank, const ScenarioSnapshot& snapshot, PolicyId policy, const EvaluationReport& report,
                  const std::string& source, const std::string& rationale) {
  MemoryRecord r;
  r.vector = encode(snapshot);
  r.prompt_text = to_prompt(snapshot);
  r.policy = policy;
  r.outcome = report;
  r.created_at = snapshot.timestamp;
  r.source = source;
  r.rationale = rationale;
  return bank.insert(std::move(r));
}

Arbiter::Arbiter(ArbiterConfig config, ArbiterDeps deps) : config_(config), deps_(std::move(deps)) {
  config_.validate();
  if (!deps_.bank) throw std::invalid_argument("arbiter: a memory bank is required");
  if (deps_.blind) deps_.prompt = PromptOptions{false, false};
}

Arbiter::~Arbiter() {
  for (Pending& p : pending_) p.worker.request_stop();
  for (std::jthread& t : graveyard_) t.request_stop();
}

void Arbiter::observe(const WorldState& world) {
  const std::size_t keep = deps_.intention.window + 1;
  for (const ParticipantState& p : world.participants) {
    auto it = last_sample_.find(p.id);
    if (it != last_sample_.end() && world.time - it->second < config_.intention_dt - 1e-9) continue;
    last_sample_[p.id] = world.time;
    auto& track = tracks_[p.id];
    track.push_back(p);
    if (track.size() > keep) track.erase(track.begin());
  }
}

ScenarioSnapshot Arbiter::perceive(const WorldState& world) const {
  WorldState w = world;
  if (deps_.risk && !deps_.blind) deps_.risk->fill(w);
  ScenarioSnapshot s = make_snapshot(w);
  for (ParticipantState& p : s.participants) {
    p.intention = Intention::M;
    p.confidence = 1.0;
    p.ranking = kAllIntentions;
    if (deps_.blind || p.kind == ParticipantKind::pedestrian) continue;
    const auto it = tracks_.find(p.id);
    if (it == tracks_.end() || it->second.empty()) continue;
    const auto features = intention::features_from_track(it->second, config_.intention_dt);
    const auto pred = intention::predict_intention(features, deps_.intention);
    p.intention = pred.label;
    p.confidence = pred.confidence;
    p.ranking = pred.ranking;
  }
  if (deps_.blind) s = blinded(std::move(s));
  return s;
}

void Arbiter::preview(const WorldState& world) {
  const auto started = clock::now();
  const ScenarioSnapshot live = perceive(world);
  const auto fs = forecast(live, config_.t1);
  forecasts_.assign(fs.begin(), fs.end());
  const double budget = config_.window() - seconds_between(started, clock::now());
  const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                           std::chrono::duration<double>(std::max(0.0, budget)));

  std::vector<ScenarioVector> vectors;
  for (std::size_t i = 0; i < forecasts_.size(); ++i) {
    const ScenarioSnapshot& f = forecasts_[i];
    const ScenarioVector v = encode(f);
    vectors.push_back(v);
    ForecastLog entry;
    entry.index = i;

    // Identical forecasts share the first one's outcome.
    std::optional<std::size_t> twin;
    for (std::size_t j = 0; j < i; ++j)
      if (vectors[j].values == v.values) {
        twin = j;
        break;
      }
    if (twin) {
      entry = log_.forecasts[*twin];
      entry.index = i;
      log_.forecasts.push_back(entry);
      for (std::size_t c = 0, n = cache_.size(); c < n; ++c)
        if (cache_[c].forecast_index == *twin) {
          CachedDecision copy = cache_[c];
          copy.forecast_index = i;
          cache_.push_back(copy);
        }
      for (Pending& p : pending_)
        if (p.forecast_index == *twin) p.aliases.push_back(i);
      continue;
    }

    const auto nearest = deps_.bank->retrieve_nearest(v, 1);
    const double sim = nearest.empty() ? 0.0 : nearest.front().similarity;
    entry.memory_similarity = sim;

    if (sim > config_.band_hi) {
      entry.band = "reuse";
      entry.outcome = "retrieved";
      entry.policy = nearest.front().record.policy;
      cache_.push_back({v, *entry.policy, Provenance::retrieved, world.time, i, f, {}, nearest.front().record.rationale,
                        nearest.front().record.id});
      log_.forecasts.push_back(entry);
      continue;
    }
    if (sim > config_.band_lo) {
      entry.band = "validate";
      const PolicyId candidate = nearest.front().record.policy;
      const auto check = f.ego.speed > 0.0
                             ? policy::validate(policy::generate(candidate, f.ego, f.road, f.limits), f)
                             : policy::Validation{};
      if (check.ok) {
        entry.outcome = "validated";
        entry.policy = candidate;
        cache_.push_back({v, candidate, Provenance::validated, world.time, i, f, {}, nearest.front().record.rationale,
                          nearest.front().record.id});
        log_.forecasts.push_back(entry);
        continue;
      }
      entry.validation = check.reason;
    } else {
      entry.band = "reason";
    }

    if (!deps_.advisor) {
      entry.outcome = "no advisor";
      log_.forecasts.push_back(entry);
      continue;
    }
    advisor::AdvisorRequest req;
    req.system_preamble = advisor::system_preamble();
    req.historical_cases = to_cases(deps_.bank->successful_cases(v, config_.history_cases));
    req.scenario_prompt = to_prompt(f, req.historical_cases, deps_.prompt);
    req.deadline_s = std::max(0.0, budget);
    req.snapshot = f;
    req.t1 = config_.t1;

    std::promise<advisor::AdvisorResult> promise;
    Pending p;
    p.forecast_index = i;
    p.future = promise.get_future();
    p.dispatched = clock::now();
    p.deadline = deadline;
    p.prompt = req.scenario_prompt;
    p.worker = std::jthread([adv = deps_.advisor, req = std::move(req), promise = std::move(promise)](
                                std::stop_token stop) mutable {
      try {
        promise.set_value(adv->advise(req, stop));
      } catch (const std::exception& ex) {
        promise.set_value(advisor::AdvisorFailure{advisor::FailureKind::transport, ex.what(), 0.0});
      }
    });
    ++log_.advisor_calls;
    entry.outcome = "pending";
    log_.forecasts.push_back(entry);
    pending_.push_back(std::move(p));
  }
}

void Arbiter::resolve(Pending& p, std::optional<advisor::AdvisorResult> result) {
  const double wall = seconds_between(p.dispatched, clock::now());
  std::vector<std::size_t> targets{p.forecast_index};
  targets.insert(targets.end(), p.aliases.begin(), p.aliases.end());
  for (std::size_t idx : targets) {
    ForecastLog& entry = log_.forecasts[idx];
    entry.resolve_wall_s = wall;
    if (!result) {
      entry.outcome = "failure: timeout (deadline passed)";
      continue;
    }
    if (const auto* ok = std::get_if<advisor::AdvisorResponse>(&*result)) {
      entry.outcome = "reasoned";
      entry.policy = ok->policy;
      entry.advisor_latency_s = ok->latency_s;
      entry.advisor_tokens = ok->token_count;
      cache_.push_back({encode(forecasts_[idx]), ok->policy, Provenance::reasoned, forecasts_[idx].timestamp, idx,
                        forecasts_[idx], p.prompt, ok->rationale, {}});
    } else {
      const auto& fail = std::get<advisor::AdvisorFailure>(*result);
      entry.outcome = "failure: " + std::string(advisor::failure_name(fail.kind)) + " (" + fail.message + ")";
      entry.advisor_latency_s = fail.latency_s;
    }
  }
  if (!result) {
    p.worker.request_stop();
    graveyard_.push_back(std::move(p.worker));
  }
}

void Arbiter::poll(bool block) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    const auto status = block ? it->future.wait_until(it->deadline) : it->future.wait_for(std::chrono::seconds(0));
    if (status == std::future_status::ready) {
      resolve(*it, it->future.get());
    } else if (clock::now() >= it->deadline) {
      resolve(*it, std::nullopt);
    } else {
      ++it;
      continue;
    }
    it = pending_.erase(it);
  }
}

Decision Arbiter::trigger(const WorldState& world) {
  poll(true);
  const ScenarioSnapshot live = perceive(world);
  trigger_snapshot_ = live;
  const ScenarioVector v = encode(live);
  Decision d;
  const CachedDecision* best = nullptr;
  double best_sim = -1.0;
  for (const CachedDecision& c : cache_) {
    const double sim = similarity(v, c.forecast_vector);
    if (sim > best_sim || (sim == best_sim && best && c.forecast_index < best->forecast_index)) {
      best_sim = sim;
      best = &c;
    }
  }
  d.match_similarity = std::max(0.0, best_sim);
  if (best && best_sim > config_.match_threshold) {
    d.policy = best->policy;
    d.provenance = best->provenance;
  } else {
    d.policy = PolicyId::AEB;
    d.fallback = true;
  }
  return d;
}

std::optional<Decision> Arbiter::tick(const WorldState& world) {
  observe(world);
  const auto hazard = hazard_ttc(world);
  const double ttc = hazard ? hazard->ttc : std::numeric_limits<double>::infinity();

  if (phase_ == Phase::idle) {
    if (!(ttc < config_.t2)) return std::nullopt;
    log_.preview_time = world.time;
    log_.preview_ttc = ttc;
    preview(world);
    phase_ = Phase::armed;
  }
  if (phase_ == Phase::armed) {
    poll(false);
    if (ttc <= config_.t1) {
      decision_ = trigger(world);
      log_.trigger_time = world.time;
      log_.trigger_ttc = ttc;
      log_.trigger_match = decision_->match_similarity;
      log_.emitted = decision_->policy;
      log_.fallback = decision_->fallback;
      phase_ = Phase::triggered;
      return decision_;
    }
  }
  return std::nullopt;
}

std::vector<std::string> Arbiter::learn_engagement(const EvaluationReport& live_report) {
  poll(false);
  std::vector<std::string> ids;
  std::string live_rationale;
  if (decision_ && decision_->provenance)
    for (const CachedDecision& c : cache_)
      if (c.policy == decision_->policy) {
        live_rationale = c.rationale;
        break;
      }
  if (trigger_snapshot_ && decision_)
    ids.push_back(learn(*deps_.bank, *trigger_snapshot_, decision_->policy, live_report, "live", live_rationale));

  std::vector<ScenarioVector> seen;
  for (const CachedDecision& c : cache_) {
    if (c.provenance == Provenance::retrieved) continue;
    if (std::any_of(seen.begin(), seen.end(), [&](const ScenarioVector& s) { return s.values == c.forecast_vector.values; }))
      continue;
    seen.push_back(c.forecast_vector);
    const WorldState w = to_world(c.forecast);
    const bool needed = rollout_policy(w, PolicyId::NI).occurred;
    const EvaluationReport report = evaluate_run(rollout_policy(w, c.policy), needed, c.policy);
    ids.push_back(learn(*deps_.bank, c.forecast, c.policy, report, "forecast", c.rationale));
  }
  log_.report = live_report;
  log_.learned_ids = ids;
  return ids;
}

}  // namespace saca::arbiter
