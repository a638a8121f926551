#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "saca/memory.hpp"

using namespace saca;

namespace {

ScenarioVector unit(std::size_t axis, double scale = 1.0) {
  ScenarioVector v;
  v.values[axis] = scale;
  return v;
}

MemoryRecord record(const std::string& id, ScenarioVector v, PolicyId p = PolicyId::AEB, double cl = 0.0,
                    double ft = 0.0) {
  MemoryRecord r;
  r.id = id;
  r.vector = v;
  r.policy = p;
  r.outcome.collision_loss = cl;
  r.outcome.false_trigger_loss = ft;
  r.prompt_text = "scene " + id;
  return r;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(Memory, InsertAssignsIdsAndRejectsDuplicates) {
  MemoryBank bank;
  EXPECT_EQ(bank.insert(record("", unit(0))), "case-0001");
  EXPECT_EQ(bank.insert(record("", unit(1))), "case-0002");
  bank.insert(record("manual", unit(2)));
  EXPECT_THROW(bank.insert(record("manual", unit(3))), DuplicateRecordError);
  EXPECT_EQ(bank.size(), 3u);
}

TEST(Memory, RetrievalOrderAndTies) {
  MemoryBank bank;
  ScenarioVector mixed;
  mixed.values[0] = 1.0;
  mixed.values[1] = 1.0;
  bank.insert(record("b", unit(0)));
  bank.insert(record("a", unit(0, 2.0)));  // same direction as "b": equal similarity
  bank.insert(record("c", mixed));
  bank.insert(record("d", unit(1)));
  const auto top = bank.retrieve_nearest(unit(0), 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].record.id, "a");
  EXPECT_EQ(top[1].record.id, "b");
  EXPECT_EQ(top[2].record.id, "c");
  EXPECT_DOUBLE_EQ(top[0].similarity, 1.0);
  EXPECT_NEAR(top[2].similarity, (1.0 + 1.0 / std::sqrt(2.0)) / 2.0, 1e-12);
  EXPECT_THROW(bank.retrieve_nearest(unit(0), 0), std::invalid_argument);
  EXPECT_TRUE(MemoryBank{}.retrieve_nearest(unit(0), 2).empty());
}

TEST(Memory, SuccessFilter) {
  MemoryBank bank;
  bank.insert(record("ok", unit(0), PolicyId::T_D_R, 0.0, 0.0));
  bank.insert(record("crash", unit(0), PolicyId::AEB, 2.35, 0.0));
  bank.insert(record("false-alarm", unit(0), PolicyId::AEB, 0.0, 0.5));
  const auto good = bank.successful_cases(unit(0), 5);
  ASSERT_EQ(good.size(), 1u);
  EXPECT_EQ(good[0].record.id, "ok");
  SuccessFilter all;
  all.include_failures = true;
  EXPECT_EQ(bank.successful_cases(unit(0), 5, all).size(), 3u);
}

TEST(Memory, JsonLineRoundTrip) {
  MemoryRecord r = record("case-0042", unit(7, 0.25), PolicyId::ES_B_R, 0.492, 0.0);
  r.outcome.zone = ImpactZone::side;
  r.outcome.rel_speed = 1.2;
  r.rationale = "slow down, then shift right";
  r.created_at = 3.75;
  r.prompt_text = "line one\nline \"two\"";
  const MemoryRecord back = record_from_json_line(record_to_json_line(r));
  EXPECT_EQ(back.id, r.id);
  EXPECT_EQ(back.policy, r.policy);
  EXPECT_EQ(back.outcome.zone, ImpactZone::side);
  EXPECT_DOUBLE_EQ(back.outcome.collision_loss, 0.492);
  EXPECT_EQ(back.prompt_text, r.prompt_text);
  EXPECT_EQ(back.rationale, r.rationale);
  EXPECT_EQ(back.vector.values, r.vector.values);
  EXPECT_THROW(record_from_json_line("{}"), std::runtime_error);
  EXPECT_THROW(record_from_json_line("garbage"), std::runtime_error);
}

TEST(Memory, OpenAppendsAndReloads) {
  const auto path = temp_file("saca_test_bank.jsonl");
  {
    MemoryBank bank = MemoryBank::open(path);
    bank.insert(record("", unit(0)));
    bank.insert(record("", unit(4), PolicyId::T_D_L));
  }
  {
    MemoryBank bank = MemoryBank::open(path);
    EXPECT_EQ(bank.size(), 2u);
    EXPECT_EQ(bank.insert(record("", unit(5))), "case-0003");
  }
  const MemoryBank loaded = MemoryBank::load(path);
  ASSERT_EQ(loaded.size(), 3u);
  EXPECT_EQ(loaded.records()[1].policy, PolicyId::T_D_L);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kMemoryHeader);
  std::filesystem::remove(path);
}

TEST(Memory, LoadRejectsBadFiles) {
  const auto path = temp_file("saca_test_bad_bank.jsonl");
  EXPECT_THROW(MemoryBank::load(path), std::runtime_error);
  std::ofstream(path) << "SACA-MEMORY v0\n";
  EXPECT_THROW(MemoryBank::load(path), std::runtime_error);
  {
    std::ofstream out(path);
    out << kMemoryHeader << "\n"
        << record_to_json_line(record("x", unit(0))) << "\n"
        << record_to_json_line(record("x", unit(1))) << "\n";
  }
  EXPECT_THROW(MemoryBank::load(path), DuplicateRecordError);
  std::filesystem::remove(path);
}

TEST(Memory, SaveThenLoad) {
  const auto path = temp_file("saca_test_saved_bank.jsonl");
  MemoryBank bank;
  bank.insert(record("one", unit(2)));
  bank.save(path);
  EXPECT_EQ(MemoryBank::load(path).records()[0].id, "one");
  std::filesystem::remove(path);
}

TEST(Memory, ConcurrentReadersSeeWholeRecords) {
  MemoryBank bank;
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    while (!done) {
      for (const auto& m : bank.retrieve_nearest(unit(0), 50))
        if (m.record.prompt_text != "scene " + m.record.id) ++bad;
    }
  });
  for (int i = 0; i < 200; ++i) bank.insert(record("r" + std::to_string(i), unit(static_cast<std::size_t>(i % 5))));
  done = true;
  reader.join();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_EQ(bank.size(), 200u);
}
