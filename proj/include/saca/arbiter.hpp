#ifndef SACA_ARBITER_HPP
#define SACA_ARBITER_HPP

#include <chrono>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "saca/advisor.hpp"
#include "saca/intention.hpp"
#include "saca/memory.hpp"
#include "saca/policy.hpp"
#include "saca/risk_model.hpp"
#include "saca/scenario.hpp"
#include "saca/world.hpp"

namespace saca::arbiter {

struct ArbiterConfig {
  double t1{1.3};               // trigger TTC [s]
  double t2{5.5};               // preview TTC [s]
  double band_hi{0.90};
  double band_lo{0.70};
  double match_threshold{0.90};
  std::size_t history_cases{3};  // successful cases attached to each prompt
  double intention_dt{0.1};      // sampling interval of the intention tracks [s]

  /// Throws std::invalid_argument unless 0 < t1 < t2 and 0 < band_lo < band_hi <= 1.
  void validate() const;
  double window() const { return t2 - t1; }
};

enum class Provenance { retrieved, validated, reasoned };
std::string_view provenance_name(Provenance p);

struct CachedDecision {
  ScenarioVector forecast_vector;
  PolicyId policy{PolicyId::AEB};
  Provenance provenance{Provenance::reasoned};
  double created_at{0.0};
  std::size_t forecast_index{0};
  ScenarioSnapshot forecast;
  std::string prompt;
  std::string rationale;
  std::string source_id;  // memory record behind a retrieved/validated entry
};

enum class Phase { idle, armed, triggered };
std::string_view phase_name(Phase p);

struct ForecastLog {
  std::size_t index{0};
  double memory_similarity{0.0};
  std::string band;          // "reuse" | "validate" | "reason"
  std::string outcome;       // provenance name or failure description
  std::optional<PolicyId> policy;
  std::string validation;    // reason when validation failed
  double advisor_latency_s{0.0};
  std::size_t advisor_tokens{0};
  double resolve_wall_s{0.0};  // wall time from dispatch to resolution
};

struct EngagementLog {
  std::optional<double> preview_time;
  std::optional<double> trigger_time;
  double preview_ttc{0.0};
  double trigger_ttc{0.0};
  std::vector<ForecastLog> forecasts;
  double trigger_match{0.0};
  std::optional<PolicyId> emitted;
  bool fallback{false};
  std::size_t advisor_calls{0};
  std::optional<EvaluationReport> report;
  std::vector<std::string> learned_ids;
};

std::string to_json(const EngagementLog& log);

struct Decision {
  PolicyId policy{PolicyId::AEB};
  bool fallback{false};
  double match_similarity{0.0};
  std::optional<Provenance> provenance;
};

struct ArbiterDeps {
  RiskModel* risk{nullptr};                 // risks stay as given when null
  intention::IntentionModel intention;
  MemoryBank* bank{nullptr};                // required
  advisor::Advisor* advisor{nullptr};       // no reasoning band when null
  PromptOptions prompt;
  bool blind{false};                        // advisor sees no risk and all-Maintain intentions
};

/// Injury-weighted rates per impact zone: side 0.41, front 0.35, rear 0.21.
double injury_rate(ImpactZone zone);

/// collision_loss = rel_speed x injury_rate(zone); false_trigger_loss =
/// trigger_severity(policy) when no intervention was needed and policy != NI.
EvaluationReport evaluate_run(const ImpactReport& impact, bool intervention_needed, PolicyId policy);

/// Simulates the ego following `policy` from `world` while agents follow
/// their scripts. Returns the first impact within `duration`.
ImpactReport rollout_policy(const WorldState& world, PolicyId policy, double duration = 4.0,
                            double dt = kDefaultDt);

/// Inserts one record and returns its id.
std::string learn(MemoryBank& bank, const ScenarioSnapshot& snapshot, PolicyId policy, const EvaluationReport& report,
                  const std::string& source = "live", const std::string& rationale = {});

/// Preview, cache and trigger logic for one vehicle. tick() is called once
/// per simulation step with the current world.
class Arbiter {
 public:
  Arbiter(ArbiterConfig config, ArbiterDeps deps);
  ~Arbiter();
  Arbiter(const Arbiter&) = delete;
  Arbiter& operator=(const Arbiter&) = delete;

  std::optional<Decision> tick(const WorldState& world);

  /// Stores the live trigger scenario with its real outcome plus every
  /// reasoned or validated forecast with a simulated outcome.
  std::vector<std::string> learn_engagement(const EvaluationReport& live_report);

  Phase phase() const { return phase_; }
  const EngagementLog& log() const { return log_; }
  const std::vector<CachedDecision>& cache() const { return cache_; }
  std::size_t advisor_calls() const { return log_.advisor_calls; }
  const std::optional<ScenarioSnapshot>& trigger_snapshot() const { return trigger_snapshot_; }

 private:
  struct Pending {
    std::size_t forecast_index;
    std::vector<std::size_t> aliases;  // forecasts with identical vectors
    std::future<advisor::AdvisorResult> future;
    std::jthread worker;
    std::chrono::steady_clock::time_point dispatched;
    std::chrono::steady_clock::time_point deadline;
    std::string prompt;
  };

  void observe(const WorldState& world);
  ScenarioSnapshot perceive(const WorldState& world) const;
  void preview(const WorldState& world);
  void resolve(Pending& p, std::optional<advisor::AdvisorResult> result);
  void poll(bool block);
  Decision trigger(const WorldState& world);

  ArbiterConfig config_;
  ArbiterDeps deps_;
  Phase phase_{Phase::idle};
  EngagementLog log_;
  std::vector<CachedDecision> cache_;
  std::vector<ScenarioSnapshot> forecasts_;
  std::vector<Pending> pending_;
  std::vector<std::jthread> graveyard_;
  std::map<std::string, std::vector<ParticipantState>> tracks_;
  std::map<std::string, double> last_sample_;
  std::optional<ScenarioSnapshot> trigger_snapshot_;
  std::optional<Decision> decision_;
};

}  // namespace saca::arbiter

#endif
