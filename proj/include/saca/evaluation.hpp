#ifndef SACA_EVALUATION_HPP
#define SACA_EVALUATION_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "saca/advisor.hpp"
#include "saca/arbiter.hpp"
#include "saca/memory.hpp"
#include "saca/scene_config.hpp"
#include "saca/world.hpp"

namespace saca::evaluation {

/// Methods in report order.
enum class Method { saca_stub, saca_remote, no_scenario_awareness, no_finetune, imitation };

inline constexpr Method kAllMethods[] = {Method::saca_stub, Method::saca_remote, Method::no_scenario_awareness,
                                         Method::no_finetune, Method::imitation};

std::string_view method_name(Method m);
/// Accepts the names above plus the "_variant" suffixed aliases.
std::optional<Method> parse_method(std::string_view key);

/// Deliberately naive lateral escape chosen without any validation:
/// AES-L at intersections, AES-R on multi-lane roads.
class NaiveAdvisor : public advisor::Advisor {
 public:
  advisor::AdvisorResult advise(const advisor::AdvisorRequest& request, std::stop_token stop) override;
  std::string name() const override { return "naive"; }
};

/// Fixed maneuver per road family: AEB at intersections, ES-B-R on multi-lane roads.
PolicyId imitation_policy(RoadKind kind);

/// True when some agent ahead of the ego closes within t1, judged from
/// longitudinal range and closing speed only.
bool imitation_fires(const WorldState& world, double t1);

struct ExperimentSpec {
  std::string config{"intersection"};  // name or path
  Method method{Method::saca_stub};
  std::size_t trials{10};
  bool risk_present{true};
  std::uint64_t seed{1};
  arbiter::ArbiterConfig arbiter;
  double stub_latency_s{0.0};
  std::optional<advisor::EndpointConfig> endpoint;   // saca_remote only
  std::optional<std::filesystem::path> bank_path;    // shared bank; forces sequential trials
  bool learn{false};                                 // write engagements back to the bank
  bool parallel{true};

  void validate() const;
};

/// JSON object; keys mirror the fields above ("method", "trials", "risk_present",
/// "seed", "config", "stub_latency_s", "bank", "learn", "arbiter": {...}).
ExperimentSpec parse_experiment_spec(const std::string& json_text);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// Everything one simulated episode needs besides the world.
struct EpisodeSetup {
  Method method{Method::saca_stub};
  arbiter::ArbiterConfig arbiter;
  double duration_s{10.0};
  double dt{kDefaultDt};
  RiskModel* risk{nullptr};
  MemoryBank* bank{nullptr};          // required for arbitrated methods
  advisor::Advisor* advisor{nullptr}; // required for arbitrated methods
  bool learn{false};
  bool keep_trace{false};
};

struct EpisodeResult {
  std::optional<PolicyId> emitted;
  double emit_time{0.0};
  ImpactReport impact;
  bool intervention_needed{false};
  EvaluationReport report;
  arbiter::EngagementLog log;
  bool inference_in_window{true};  // false when any advisor call hit its deadline
  double advisor_latency_s{0.0};   // mean over answered calls
  std::size_t advisor_tokens{0};
  std::size_t advisor_answers{0};
  std::vector<std::string> violations;  // safety-invariant breaches seen during the run
  std::vector<WorldState> trace;

  PolicyId executed() const { return emitted.value_or(PolicyId::NI); }
};

/// NI rollout of the whole episode; true when it ends in an impact.
bool intervention_needed(const WorldState& initial, double duration_s, double dt = kDefaultDt);

/// Simulates one engagement: the arbiter (or the imitation rule) ticks every
/// step; after emission the ego follows the policy template.
EpisodeResult run_episode(const WorldState& initial, const EpisodeSetup& setup);

struct TrialRecord {
  std::size_t index{0};
  double ego_speed{0.0};
  PolicyId policy{PolicyId::NI};
  bool fallback{false};
  bool counted{true};
  double collision_loss{0.0};
  double false_trigger_loss{0.0};
  ImpactZone zone{ImpactZone::none};
  double rel_speed{0.0};
  double latency_s{0.0};
  std::size_t tokens{0};
  std::size_t advisor_calls{0};
  std::vector<std::string> violations;
};

struct ExperimentReport {
  std::string config;
  Method method{Method::saca_stub};
  bool risk_present{true};
  std::uint64_t seed{0};
  std::size_t trials{0};
  std::size_t counted{0};
  std::size_t fallback_trials{0};  // advisor overran the window; excluded from the means
  double collision_loss{0.0};
  double false_trigger_loss{0.0};
  bool has_latency{false};
  double latency_mean_s{0.0};
  double latency_min_s{0.0};
  double tokens_mean{0.0};
  std::vector<TrialRecord> records;

  std::size_t violation_count() const;
};

/// Perturbed initial world of one trial. Intersection scenes jitter the ego
/// speed uniformly within +-speed_jitter_mps; listed participants get the same offset.
WorldState trial_world(const SceneConfig& cfg, bool risk_present, std::uint64_t seed, std::size_t index);

/// Throws std::invalid_argument on an unknown config or a bad spec.
ExperimentReport run_experiment(const ExperimentSpec& spec);

/// Writes comparison.csv (one row per report, sorted by config, risk flag and
/// method) plus one series_<config>_<risk>_<method>.csv per report. Throws
/// std::invalid_argument when `reports` is empty.
void write_report(std::vector<ExperimentReport> reports, const std::filesystem::path& dir);

std::string comparison_csv(std::vector<ExperimentReport> reports);
std::string series_csv(const ExperimentReport& report);

}  // namespace saca::evaluation

#endif
