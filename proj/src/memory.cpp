#include "saca/memory.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>

#include "json.hpp"

namespace saca {

using nlohmann::json;

namespace {

ImpactZone zone_from_name(const std::string& name) {
  for (ImpactZone z : {ImpactZone::none, ImpactZone::front, ImpactZone::side, ImpactZone::rear})
    if (zone_name(z) == name) return z;
  throw std::runtime_error("memory log: unknown impact zone " + name);
}

}  // namespace

std::string record_to_json_line(const MemoryRecord& r) {
  json j;
  j["id"] = r.id;
  j["vector"] = r.vector.values;
  j["truncated"] = r.vector.truncated;
  j["policy"] = to_int(r.policy);
  j["collision_loss"] = r.outcome.collision_loss;
  j["false_trigger_loss"] = r.outcome.false_trigger_loss;
  j["zone"] = std::string(zone_name(r.outcome.zone));
  j["rel_speed"] = r.outcome.rel_speed;
  j["intervention_needed"] = r.outcome.intervention_needed;
  j["created_at"] = r.created_at;
  j["source"] = r.source;
  j["rationale"] = r.rationale;
  j["prompt"] = r.prompt_text;
  return j.dump();
}

MemoryRecord record_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    MemoryRecord r;
    r.id = j.at("id").get<std::string>();
    const auto v = j.at("vector").get<std::vector<double>>();
    if (v.size() != kScenarioDim) throw std::runtime_error("memory log: vector dimension mismatch for " + r.id);
    std::copy(v.begin(), v.end(), r.vector.values.begin());
    r.vector.truncated = j.value("truncated", false);
    r.policy = policy_from_int(j.at("policy").get<int>());
    r.outcome.collision_loss = j.at("collision_loss").get<double>();
    r.outcome.false_trigger_loss = j.at("false_trigger_loss").get<double>();
    r.outcome.zone = zone_from_name(j.value("zone", "none"));
    r.outcome.rel_speed = j.value("rel_speed", 0.0);
    r.outcome.intervention_needed = j.value("intervention_needed", true);
    r.created_at = j.value("created_at", 0.0);
    r.source = j.value("source", "live");
    r.rationale = j.value("rationale", "");
    r.prompt_text = j.value("prompt", "");
    return r;
  } catch (const json::exception& ex) {
    throw std::runtime_error(std::string("memory log: ") + ex.what());
  }
}

MemoryBank::MemoryBank(const MemoryBank& other) {
  std::shared_lock lock(other.mutex_);
  records_ = other.records_;
  ids_ = other.ids_;
  log_path_ = other.log_path_;
}

MemoryBank& MemoryBank::operator=(const MemoryBank& other) {
  if (this == &other) return *this;
  std::vector<MemoryRecord> recs;
  std::unordered_set<std::string> ids;
  std::optional<std::filesystem::path> log;
  {
    std::shared_lock lock(other.mutex_);
    recs = other.records_;
    ids = other.ids_;
    log = other.log_path_;
  }
  std::unique_lock lock(mutex_);
  records_ = std::move(recs);
  ids_ = std::move(ids);
  log_path_ = std::move(log);
  return *this;
}

MemoryBank MemoryBank::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open memory log: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMemoryHeader)
    throw std::runtime_error("memory log: missing or unsupported header in " + path.string());
  MemoryBank bank;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MemoryRecord r = record_from_json_line(line);
    if (!bank.ids_.insert(r.id).second) throw DuplicateRecordError("memory log: duplicate id " + r.id);
    bank.records_.push_back(std::move(r));
  }
  return bank;
}

MemoryBank MemoryBank::open(const std::filesystem::path& path) {
  MemoryBank bank = std::filesystem::exists(path) ? load(path) : MemoryBank{};
  if (!std::filesystem::exists(path)) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot create memory log: " + path.string());
    out << kMemoryHeader << '\n';
  }
  bank.log_path_ = path;
  return bank;
}

void MemoryBank::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write memory log: " + path.string());
  out << kMemoryHeader << '\n';
  for (const MemoryRecord& r : records_) out << record_to_json_line(r) << '\n';
}

std::string MemoryBank::insert(MemoryRecord record) {
  std::unique_lock lock(mutex_);
  if (record.id.empty()) {
    std::size_t n = records_.size() + 1;
    char buf[32];
    do {
      std::snprintf(buf, sizeof buf, "case-%04zu", n++);
    } while (ids_.count(buf));
    record.id = buf;
  }
  if (ids_.count(record.id)) throw DuplicateRecordError("memory bank: duplicate id " + record.id);
  if (log_path_) {
    std::ofstream out(*log_path_, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to memory log: " + log_path_->string());
    out << record_to_json_line(record) << '\n';
    out.flush();
  }
  ids_.insert(record.id);
  records_.push_back(std::move(record));
  return records_.back().id;
}

std::vector<MemoryMatch> MemoryBank::ranked(const ScenarioVector& v) const {
  std::vector<MemoryMatch> out;
  {
    std::shared_lock lock(mutex_);
    out.reserve(records_.size());
    for (const MemoryRecord& r : records_) out.push_back({r, similarity(v, r.vector)});
  }
  std::sort(out.begin(), out.end(), [](const MemoryMatch& a, const MemoryMatch& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.record.id < b.record.id;
  });
  return out;
}

std::vector<MemoryMatch> MemoryBank::retrieve_nearest(const ScenarioVector& v, std::size_t k) const {
  if (k == 0) throw std::invalid_argument("retrieve_nearest: k must be >= 1");
  auto out = ranked(v);
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<MemoryMatch> MemoryBank::successful_cases(const ScenarioVector& v, std::size_t k,
                                                      const SuccessFilter& filter) const {
  if (k == 0) throw std::invalid_argument("successful_cases: k must be >= 1");
  auto out = ranked(v);
  if (!filter.include_failures)
    std::erase_if(out, [&](const MemoryMatch& m) {
      return !(m.record.outcome.collision_loss < filter.max_collision_loss) ||
             m.record.outcome.false_trigger_loss != 0.0;
    });
  if (out.size() > k) out.resize(k);
  return out;
}

void MemoryBank::unbind() {
  std::unique_lock lock(mutex_);
  log_path_.reset();
}

std::size_t MemoryBank::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::vector<MemoryRecord> MemoryBank::records() const {
  std::shared_lock lock(mutex_);
  return records_;
}

}  // namespace saca
