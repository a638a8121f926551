#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "saca/advisor.hpp"

namespace saca::advisor {

using nlohmann::json;

EndpointConfig parse_endpoint_config(const std::string& json_text) {
  EndpointConfig c;
  try {
    const json j = json::parse(json_text);
    c.base_url = j.value("base_url", c.base_url);
    c.path = j.value("path", c.path);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.temperature = j.value("temperature", c.temperature);
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("endpoint config: ") + ex.what());
  }
  if (c.base_url.empty() || c.path.empty()) throw std::invalid_argument("endpoint config: base_url and path required");
  return c;
}

EndpointConfig load_endpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open endpoint config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_endpoint_config(ss.str());
}

std::string build_request_body(const EndpointConfig& endpoint, const AdvisorRequest& request) {
  std::string system = request.system_preamble.empty() ? system_preamble() : request.system_preamble;
  json body;
  body["model"] = endpoint.model;
  body["temperature"] = endpoint.temperature;
  body["messages"] = json::array({
      {{"role", "system"}, {"content", system}},
      {{"role", "user"}, {"content", request.scenario_prompt}},
  });
  return body.dump();
}

RemoteAdvisor::RemoteAdvisor(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}

RemoteAdvisor::~RemoteAdvisor() {
  std::lock_guard lock(graveyard_mutex_);
  graveyard_.clear();  // joins
}

namespace {

AdvisorResult call_endpoint(const EndpointConfig& endpoint, const std::string& body, double timeout_s) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  httplib::Client client(endpoint.base_url);
  const auto budget = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s));
  client.set_connection_timeout(budget);
  client.set_read_timeout(budget);
  client.set_write_timeout(budget);
  httplib::Headers headers;
  if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  const auto res = client.Post(endpoint.path, headers, body, "application/json");
  if (!res) return AdvisorFailure{FailureKind::transport, httplib::to_string(res.error()), elapsed()};
  if (res->status != 200)
    return AdvisorFailure{FailureKind::transport, "HTTP status " + std::to_string(res->status), elapsed()};

  std::string content;
  std::size_t tokens = 0;
  try {
    const json j = json::parse(res->body);
    content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) tokens = j["usage"].value("total_tokens", std::size_t{0});
  } catch (const json::exception& ex) {
    return AdvisorFailure{FailureKind::parse, std::string("malformed completion body: ") + ex.what(), elapsed()};
  }
  try {
    AdvisorResponse r;
    r.policy = parse_response(content);
    r.rationale = content;
    r.latency_s = elapsed();
    r.token_count = tokens ? tokens : estimate_tokens(content);
    return r;
  } catch (const ParseError& ex) {
    return AdvisorFailure{FailureKind::parse, ex.what(), elapsed()};
  }
}

}  // namespace

AdvisorResult RemoteAdvisor::advise(const AdvisorRequest& request, std::stop_token stop) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
  if (!(request.deadline_s > 0.0)) return AdvisorFailure{FailureKind::timeout, "no time left before deadline", 0.0};

  auto promise = std::make_shared<std::promise<AdvisorResult>>();
  auto future = promise->get_future();
  std::jthread worker([endpoint = endpoint_, body = build_request_body(endpoint_, request),
                       timeout = request.deadline_s, promise](std::stop_token) {
    promise->set_value(call_endpoint(endpoint, body, timeout));
  });

  const auto deadline = start + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(request.deadline_s));
  std::optional<AdvisorResult> result;
  while (true) {
    const auto slice = std::min(deadline, clock::now() + std::chrono::milliseconds(5));
    if (future.wait_until(slice) == std::future_status::ready) {
      result = future.get();
      break;
    }
    if (clock::now() >= deadline) {
      result = AdvisorFailure{FailureKind::timeout, "deadline exceeded", elapsed()};
      break;
    }
    if (stop.stop_requested()) {
      result = AdvisorFailure{FailureKind::timeout, "cancelled", elapsed()};
      break;
    }
  }
  if (future.valid()) {
    // The worker is still blocked in the transport; its socket timeouts bound its lifetime.
    std::lock_guard lock(graveyard_mutex_);
    graveyard_.push_back(std::move(worker));
  }
  return *result;
}

}  // namespace saca::advisor
