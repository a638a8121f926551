#ifndef SACA_ADVISOR_HPP
#define SACA_ADVISOR_HPP

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "saca/labels.hpp"
#include "saca/memory.hpp"
#include "saca/scenario.hpp"

namespace saca::advisor {

struct AdvisorRequest {
  std::string system_preamble;
  std::string scenario_prompt;
  std::vector<HistoricalCase> historical_cases;
  double deadline_s{4.2};
  /// Structured form of the prompt. Rule-based backends read this instead of the text.
  std::optional<ScenarioSnapshot> snapshot;
  double t1{1.3};
};

struct AdvisorResponse {
  PolicyId policy{PolicyId::AEB};
  std::string rationale;
  double latency_s{0.0};
  std::size_t token_count{0};
};

enum class FailureKind { timeout, transport, parse };

std::string_view failure_name(FailureKind k);

struct AdvisorFailure {
  FailureKind kind{FailureKind::transport};
  std::string message;
  double latency_s{0.0};
};

using AdvisorResult = std::variant<AdvisorResponse, AdvisorFailure>;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integer after the last "Response to user:", else a bare integer 0-7.
PolicyId parse_response(std::string_view text);
std::string format_response(PolicyId policy, std::string_view rationale = {});

/// Policy catalog plus the output contract.
const std::string& system_preamble();

/// Whitespace tokens x 1.3, rounded up.
std::size_t estimate_tokens(std::string_view text);

/// A reasoning backend. Implementations must honor the request deadline and
/// return promptly once `stop` is requested.
class Advisor {
 public:
  virtual ~Advisor() = default;
  virtual AdvisorResult advise(const AdvisorRequest& request, std::stop_token stop) = 0;
  virtual std::string name() const = 0;
};

struct StubOptions {
  double latency_s{0.0};        // injected delay before answering
  double hazard_window_s{2.0};  // NI rollout length used to decide whether to intervene
};

/// Deterministic expert rule cascade; a pure function of the snapshot.
AdvisorResponse advise_stub(const AdvisorRequest& request, const StubOptions& options = {});

class StubAdvisor : public Advisor {
 public:
  explicit StubAdvisor(StubOptions options = {}) : options_(options) {}
  AdvisorResult advise(const AdvisorRequest& request, std::stop_token stop) override;
  std::string name() const override { return "stub"; }

 private:
  StubOptions options_;
};

struct EndpointConfig {
  std::string base_url{"https://api.openai.com"};
  std::string path{"/v1/chat/completions"};
  std::string model{"gpt-4o-mini"};
  std::string api_key_env{"OPENAI_API_KEY"};
  double temperature{0.0};
};

/// JSON object with any of base_url, path, model, api_key_env, temperature.
EndpointConfig load_endpoint_config(const std::filesystem::path& path);
EndpointConfig parse_endpoint_config(const std::string& json_text);

std::string build_request_body(const EndpointConfig& endpoint, const AdvisorRequest& request);

/// Chat-completion client. Each call runs on a worker thread; the caller gets
/// a timeout failure once the deadline passes, and the worker is joined later.
class RemoteAdvisor : public Advisor {
 public:
  explicit RemoteAdvisor(EndpointConfig endpoint);
  ~RemoteAdvisor() override;
  AdvisorResult advise(const AdvisorRequest& request, std::stop_token stop) override;
  std::string name() const override { return "remote"; }

 private:
  EndpointConfig endpoint_;
  std::mutex graveyard_mutex_;
  std::vector<std::jthread> graveyard_;
};

struct DatasetSummary {
  std::size_t examples{0};
  std::size_t token_estimate{0};
};

/// One {"messages": [...]} object per line. Throws std::invalid_argument on empty input.
DatasetSummary export_finetune_dataset(std::span<const MemoryRecord> records, std::ostream& out);
DatasetSummary export_finetune_dataset(std::span<const MemoryRecord> records, const std::filesystem::path& path);

}  // namespace saca::advisor

#endif
