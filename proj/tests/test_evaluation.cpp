#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "saca/evaluation.hpp"

using namespace saca;
namespace ev = saca::evaluation;

namespace {

SceneConfig scene(const std::string& name) { return load_scene_config(resolve_config(name)); }

ev::ExperimentReport quick(const std::string& config, ev::Method m, bool risk, std::size_t trials = 3,
                           bool parallel = true) {
  ev::ExperimentSpec spec;
  spec.config = config;
  spec.method = m;
  spec.trials = trials;
  spec.risk_present = risk;
  spec.seed = 5;
  spec.parallel = parallel;
  return ev::run_experiment(spec);
}

}  // namespace

TEST(Evaluation, MethodNames) {
  for (ev::Method m : ev::kAllMethods) EXPECT_EQ(ev::parse_method(ev::method_name(m)), m);
  EXPECT_EQ(ev::parse_method("no_finetune_variant"), ev::Method::no_finetune);
  EXPECT_FALSE(ev::parse_method("_variant").has_value());
  EXPECT_FALSE(ev::parse_method("oracle").has_value());
}

TEST(Evaluation, ImitationRule) {
  EXPECT_EQ(ev::imitation_policy(RoadKind::intersection), PolicyId::AEB);
  EXPECT_EQ(ev::imitation_policy(RoadKind::one_way_multilane), PolicyId::ES_B_R);

  WorldState w;
  w.ego.speed = 10.0;
  w.obstacles.push_back({"o", ObstacleShape::circle(1.0), {16.0, 8.0}, {}, 0.0});
  // Range 16 - 1 - 2.25 = 12.75 m at 10 m/s: 1.275 s, lateral offset ignored.
  EXPECT_TRUE(ev::imitation_fires(w, 1.3));
  EXPECT_FALSE(ev::imitation_fires(w, 1.2));
  w.obstacles[0].velocity = {10.0, 0.0};
  EXPECT_FALSE(ev::imitation_fires(w, 1.3));
  w.obstacles[0] = {"behind", ObstacleShape::circle(1.0), {-10.0, 0.0}, {}, 0.0};
  EXPECT_FALSE(ev::imitation_fires(w, 1.3));
}

TEST(Evaluation, TrialWorldJitter) {
  const SceneConfig cfg = scene("intersection");
  ASSERT_GT(cfg.speed_jitter_mps, 0.0);
  const double base = cfg.initial.ego.speed;
  bool varied = false;
  for (std::size_t i = 0; i < 20; ++i) {
    const WorldState w = ev::trial_world(cfg, true, 9, i);
    const double dv = w.ego.speed - base;
    EXPECT_LE(std::abs(dv), cfg.speed_jitter_mps);
    if (std::abs(dv) > 1e-6) varied = true;
    for (const std::string& id : cfg.jitter_participants)
      for (std::size_t k = 0; k < w.participants.size(); ++k)
        if (w.participants[k].id == id)
          EXPECT_NEAR(w.participants[k].velocity.norm() - cfg.initial.participants[k].velocity.norm(), dv, 1e-9);
    const WorldState again = ev::trial_world(cfg, true, 9, i);
    EXPECT_EQ(again.ego.speed, w.ego.speed);
  }
  EXPECT_TRUE(varied);
  EXPECT_NE(ev::trial_world(cfg, true, 9, 0).ego.speed, ev::trial_world(cfg, true, 10, 0).ego.speed);
}

TEST(Evaluation, NoRiskTwinNeedsNoIntervention) {
  for (const char* name : {"intersection", "one_way"}) {
    const SceneConfig cfg = scene(name);
    EXPECT_TRUE(ev::intervention_needed(ev::trial_world(cfg, true, 1, 0), cfg.duration_s)) << name;
    EXPECT_FALSE(ev::intervention_needed(ev::trial_world(cfg, false, 1, 0), cfg.duration_s)) << name;
  }
}

TEST(Evaluation, EpisodeFollowsEmittedTemplate) {
  const SceneConfig cfg = scene("one_way");
  MemoryBank bank;
  advisor::StubAdvisor stub;
  ev::EpisodeSetup setup;
  setup.risk = &shared_risk_model();
  setup.bank = &bank;
  setup.advisor = &stub;
  setup.keep_trace = true;
  setup.duration_s = cfg.duration_s;
  const ev::EpisodeResult r = ev::run_episode(cfg.initial, setup);
  ASSERT_TRUE(r.emitted);
  EXPECT_EQ(*r.emitted, PolicyId::AEB);
  EXPECT_TRUE(r.violations.empty());
  ASSERT_FALSE(r.trace.empty());
  EXPECT_EQ(r.trace.back().ego.speed, 0.0);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k].ego.speed, r.trace[k - 1].ego.speed + 1e-9);
  EXPECT_FALSE(r.impact.occurred);
  EXPECT_TRUE(r.intervention_needed);
}

TEST(Evaluation, EpisodeNeedsBankAndAdvisor) {
  ev::EpisodeSetup setup;
  EXPECT_THROW(ev::run_episode(scene("one_way").initial, setup), std::invalid_argument);
  setup.method = ev::Method::imitation;
  EXPECT_NO_THROW(ev::run_episode(scene("one_way").initial, setup));
}

TEST(Evaluation, ImitationFalseTriggersOnNoRiskTwin) {
  const ev::ExperimentReport r = quick("one_way", ev::Method::imitation, false);
  EXPECT_EQ(r.counted, 3u);
  EXPECT_DOUBLE_EQ(r.false_trigger_loss, 0.5);
  EXPECT_DOUBLE_EQ(r.collision_loss, 0.0);
}

TEST(Evaluation, ParallelMatchesSerial) {
  const auto a = quick("intersection", ev::Method::saca_stub, true, 4, true);
  const auto b = quick("intersection", ev::Method::saca_stub, true, 4, false);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].ego_speed, b.records[i].ego_speed);
    EXPECT_EQ(a.records[i].policy, b.records[i].policy);
    EXPECT_EQ(a.records[i].collision_loss, b.records[i].collision_loss);
  }
  EXPECT_EQ(a.collision_loss, b.collision_loss);
  EXPECT_EQ(a.violation_count(), 0u);
}

TEST(Evaluation, SpecParsing) {
  const auto s = ev::parse_experiment_spec(
      R"({"config": "one_way", "method": "no_finetune", "trials": 4, "risk_present": false, "seed": 3,
          "arbiter": {"t1": 1.0, "t2": 5.0}})");
  EXPECT_EQ(s.config, "one_way");
  EXPECT_EQ(s.method, ev::Method::no_finetune);
  EXPECT_EQ(s.trials, 4u);
  EXPECT_FALSE(s.risk_present);
  EXPECT_EQ(s.seed, 3u);
  EXPECT_DOUBLE_EQ(s.arbiter.t1, 1.0);
  EXPECT_DOUBLE_EQ(s.arbiter.window(), 4.0);
  EXPECT_THROW(ev::parse_experiment_spec(R"({"method": "oracle"})"), std::invalid_argument);
  EXPECT_THROW(ev::parse_experiment_spec(R"({"trials": 0})"), std::invalid_argument);
  EXPECT_THROW(ev::parse_experiment_spec(R"({"arbiter": {"t1": 9}})"), std::invalid_argument);
  EXPECT_THROW(ev::parse_experiment_spec("[1"), std::invalid_argument);
  EXPECT_NO_THROW(ev::load_experiment_spec(resolve_config("experiment_intersection").parent_path() /
                                           "experiment_intersection.json"));
}

TEST(Evaluation, UnknownConfigThrows) {
  ev::ExperimentSpec spec;
  spec.config = "no_such_scene";
  EXPECT_THROW(ev::run_experiment(spec), std::invalid_argument);
}

TEST(Evaluation, ComparisonCsvLayout) {
  std::vector<ev::ExperimentReport> reports{quick("one_way", ev::Method::imitation, true, 2),
                                            quick("one_way", ev::Method::saca_stub, true, 2),
                                            quick("intersection", ev::Method::saca_stub, false, 2)};
  const std::string csv = ev::comparison_csv(reports);
  std::istringstream in(csv);
  std::string header, l1, l2, l3;
  std::getline(in, header);
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  EXPECT_EQ(header.rfind("config,risk_present,method,", 0), 0u);
  EXPECT_EQ(l1.rfind("intersection,0,saca_stub,", 0), 0u);
  EXPECT_EQ(l2.rfind("one_way,1,saca_stub,", 0), 0u);
  EXPECT_EQ(l3.rfind("one_way,1,imitation,", 0), 0u);
  EXPECT_EQ(l3.substr(l3.size() - 3), ",,,");  // latency columns only for the remote method
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(l1.begin(), l1.end(), ','));
}

TEST(Evaluation, WriteReportFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "saca_test_report";
  std::filesystem::remove_all(dir);
  const auto r = quick("one_way", ev::Method::saca_stub, true, 2);
  ev::write_report({r}, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "comparison.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "series_one_way_risk_saca_stub.csv"));
  std::ifstream series(dir / "series_one_way_risk_saca_stub.csv");
  std::string line;
  int rows = 0;
  while (std::getline(series, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_THROW(ev::write_report({}, dir), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
