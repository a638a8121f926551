#ifndef SACA_MEMORY_HPP
#define SACA_MEMORY_HPP

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "saca/labels.hpp"
#include "saca/scenario.hpp"
#include "saca/world.hpp"

namespace saca {

/// Losses of one executed (or simulated) decision.
struct EvaluationReport {
  double collision_loss{0.0};
  double false_trigger_loss{0.0};
  ImpactZone zone{ImpactZone::none};
  double rel_speed{0.0};
  bool intervention_needed{true};
};

struct MemoryRecord {
  std::string id;
  ScenarioVector vector;
  std::string prompt_text;
  PolicyId policy{PolicyId::AEB};
  EvaluationReport outcome;
  double created_at{0.0};
  std::string rationale;
  std::string source{"live"};
};

struct MemoryMatch {
  MemoryRecord record;
  double similarity{0.0};
};

struct SuccessFilter {
  double max_collision_loss{0.1};
  bool include_failures{false};
};

class DuplicateRecordError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Case bank with exhaustive similarity retrieval. One writer at a time;
/// readers never observe a partially inserted record. When bound to a log
/// file every insert is appended and flushed before it becomes visible.
class MemoryBank {
 public:
  MemoryBank() = default;
  MemoryBank(const MemoryBank& other);
  MemoryBank& operator=(const MemoryBank& other);

  /// Loads `path` if it exists and appends future inserts to it.
  static MemoryBank open(const std::filesystem::path& path);
  static MemoryBank load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Assigns "case-NNNN" when the id is empty. Throws DuplicateRecordError.
  std::string insert(MemoryRecord record);

  /// Top-k by similarity, ties broken by ascending id.
  std::vector<MemoryMatch> retrieve_nearest(const ScenarioVector& v, std::size_t k) const;
  /// Nearest records whose outcome counts as a success.
  std::vector<MemoryMatch> successful_cases(const ScenarioVector& v, std::size_t k,
                                            const SuccessFilter& filter = {}) const;

  /// Stops appending to the log file (copies share the binding until then).
  void unbind();

  std::size_t size() const;
  std::vector<MemoryRecord> records() const;

 private:
  std::vector<MemoryMatch> ranked(const ScenarioVector& v) const;

  mutable std::shared_mutex mutex_;
  std::vector<MemoryRecord> records_;
  std::unordered_set<std::string> ids_;
  std::optional<std::filesystem::path> log_path_;
};

inline constexpr const char* kMemoryHeader = "SACA-MEMORY v1 dim=55";

std::string record_to_json_line(const MemoryRecord& r);
MemoryRecord record_from_json_line(const std::string& line);

}  // namespace saca

#endif
