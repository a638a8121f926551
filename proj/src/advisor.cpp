#include "saca/advisor.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "saca/policy.hpp"

namespace saca::advisor {

namespace {

constexpr std::string_view kMarker = "Response to user:";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<int> leading_int(std::string_view s) {
  s = trim(s);
  std::size_t n = 0;
  while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
  if (n == 0 || n > 3) return std::nullopt;
  return std::stoi(std::string(s.substr(0, n)));
}

struct Contact {
  std::string agent_id;
  double t{0.0};
};

// First footprint overlap of the ego following `tmpl` with the forecast agents.
std::optional<Contact> first_contact(const policy::TrajectoryTemplate& tmpl, const ScenarioSnapshot& s) {
  WorldState world = to_world(s);
  const Vec2 shift{0.0, s.lane_offset};
  for (std::size_t k = 0; k < tmpl.samples.size(); ++k) {
    const auto& smp = tmpl.samples[k];
    if (k > 0) world = step(world, smp.t - tmpl.samples[k - 1].t);
    const Polygon ego = box_polygon({smp.position + shift, smp.heading}, s.limits.length, s.limits.width);
    for (const auto& p : world.participants)
      if (polygons_overlap(ego, participant_polygon(p))) return Contact{p.id, smp.t};
    for (const auto& o : world.obstacles)
      if (polygons_overlap(ego, obstacle_polygon(o))) return Contact{o.id, smp.t};
  }
  return std::nullopt;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

std::string_view failure_name(FailureKind k) {
  switch (k) {
    case FailureKind::timeout: return "timeout";
    case FailureKind::transport: return "transport";
    case FailureKind::parse: return "parse";
  }
  return "?";
}

PolicyId parse_response(std::string_view text) {
  if (const auto pos = text.rfind(kMarker); pos != std::string_view::npos) {
    const auto v = leading_int(text.substr(pos + kMarker.size()));
    if (v && *v >= 0 && *v < kPolicyCount) return policy_from_int(*v);
    throw ParseError("response marker not followed by a policy id 0-7");
  }
  const std::string_view t = trim(text);
  if (t.size() == 1 && t[0] >= '0' && t[0] <= '7') return policy_from_int(t[0] - '0');
  throw ParseError("no policy id found in response");
}

std::string format_response(PolicyId policy, std::string_view rationale) {
  std::string out(rationale);
  if (!out.empty() && out.back() != '\n') out += '\n';
  out += std::string(kMarker) + " " + std::to_string(to_int(policy));
  return out;
}

const std::string& system_preamble() {
  static const std::string text =
      "You are the collision-avoidance decision module of an automated vehicle.\n"
      "You receive a structured scenario at the moment an emergency maneuver is required and must pick one\n"
      "of the following policies:\n"
      "0 AEB: brake as hard as possible in the current lane until stopped.\n"
      "1 AES-L: steer one lane to the left while holding speed.\n"
      "2 AES-R: steer one lane to the right while holding speed.\n"
      "3 ES-B-L: steer one lane to the left while braking to a target speed.\n"
      "4 ES-B-R: steer one lane to the right while braking to a target speed.\n"
      "5 T-D-L: brake and rotate the vehicle toward the left until it stands perpendicular to the lane,\n"
      "  so that a lateral impact lands on the rear structure.\n"
      "6 T-D-R: the same rotation toward the right.\n"
      "7 NI: no intervention.\n"
      "Respect road boundaries, occupied lanes and vulnerable road users. Explain the decision briefly,\n"
      "then end with a final line of the form: Response to user: <id>\n";
  return text;
}

std::size_t estimate_tokens(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t words = 0;
  for (std::string w; in >> w;) ++words;
  return static_cast<std::size_t>(std::ceil(static_cast<double>(words) * 1.3));
}

AdvisorResponse advise_stub(const AdvisorRequest& request, const StubOptions& options) {
  if (!request.snapshot) throw std::invalid_argument("advise_stub: request carries no structured snapshot");
  const ScenarioSnapshot& s = *request.snapshot;
  std::ostringstream why;
  why << "Scenario Analysis\n";
  why << "- Ego speed " << num(s.ego.speed) << " m/s, "
      << (s.road.kind == RoadKind::intersection ? "intersection" : "one-way multi-lane road") << ".\n";

  auto respond = [&](PolicyId p) {
    AdvisorResponse r;
    r.policy = p;
    r.rationale = format_response(p, why.str());
    r.token_count = estimate_tokens(r.rationale);
    return r;
  };

  if (!(s.ego.speed > 0.0)) {
    why << "- Ego is stationary; no maneuver is available.\n";
    return respond(PolicyId::NI);
  }

  policy::GenerateOptions window;
  window.duration = options.hazard_window_s;
  const auto ni = policy::generate(PolicyId::NI, s.ego, s.road, s.limits, window);
  const auto contact = first_contact(ni, s);
  if (!contact) {
    why << "- No contact predicted within " << num(options.hazard_window_s) << " s without intervention.\n";
    return respond(PolicyId::NI);
  }
  why << "- Contact with " << contact->agent_id << " predicted after " << num(contact->t) << " s.\n";

  const auto aeb = policy::generate(PolicyId::AEB, s.ego, s.road, s.limits);
  const auto aeb_check = policy::validate(aeb, s);
  if (aeb_check.ok) {
    why << "- Maximum braking stops short of every hazard.\n";
    return respond(PolicyId::AEB);
  }
  why << "- Braking alone fails (" << aeb_check.reason << ").\n";

  bool ped_left = false, ped_right = false;
  for (const ParticipantState& p : s.participants) {
    if (p.kind != ParticipantKind::pedestrian || p.position.x < -5.0 || p.position.x > 60.0) continue;
    (p.position.y >= 0.0 ? ped_left : ped_right) = true;
  }
  if (ped_left) why << "- A pedestrian on the left rules out leftward maneuvers.\n";
  if (ped_right) why << "- A pedestrian on the right rules out rightward maneuvers.\n";

  for (PolicyId p : {PolicyId::ES_B_L, PolicyId::ES_B_R, PolicyId::AES_L, PolicyId::AES_R}) {
    const bool left = p == PolicyId::ES_B_L || p == PolicyId::AES_L;
    if ((left && ped_left) || (!left && ped_right)) continue;
    const auto check = policy::validate(policy::generate(p, s.ego, s.road, s.limits), s);
    if (check.ok) {
      why << "- " << policy_name(p) << " clears all hazards.\n";
      return respond(p);
    }
    why << "- " << policy_name(p) << " rejected (" << check.reason << ").\n";
  }

  const ParticipantState* threat = nullptr;
  for (const ParticipantState& p : s.participants)
    if (p.id == contact->agent_id) threat = &p;
  if (threat && std::abs(threat->velocity.y) > std::abs(threat->velocity.x)) {
    PolicyId drift;
    if (ped_left != ped_right)
      drift = ped_left ? PolicyId::T_D_R : PolicyId::T_D_L;
    else
      drift = threat->position.y >= 0.0 ? PolicyId::T_D_R : PolicyId::T_D_L;
    why << "- The threat crosses laterally; a T-type drift presents the rear structure to it.\n";
    return respond(drift);
  }
  why << "- No escape validated; default to maximum braking.\n";
  return respond(PolicyId::AEB);
}

AdvisorResult StubAdvisor::advise(const AdvisorRequest& request, std::stop_token stop) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
  const double wait = std::min(options_.latency_s, request.deadline_s);
  while (elapsed() < wait) {
    if (stop.stop_requested()) return AdvisorFailure{FailureKind::timeout, "cancelled", elapsed()};
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (options_.latency_s > request.deadline_s)
    return AdvisorFailure{FailureKind::timeout, "injected latency exceeds deadline", elapsed()};
  try {
    AdvisorResponse r = advise_stub(request, options_);
    r.latency_s = std::max(elapsed(), options_.latency_s);
    return r;
  } catch (const std::exception& ex) {
    return AdvisorFailure{FailureKind::parse, ex.what(), elapsed()};
  }
}

DatasetSummary export_finetune_dataset(std::span<const MemoryRecord> records, std::ostream& out) {
  if (records.empty()) throw std::invalid_argument("export_finetune_dataset: no records");
  DatasetSummary summary;
  for (const MemoryRecord& r : records) {
    const std::string rationale = r.rationale.empty() ? "Policy " + std::string(policy_name(r.policy)) + " applies."
                                                      : r.rationale;
    std::string answer = rationale;
    if (answer.find(kMarker) == std::string::npos) answer = format_response(r.policy, rationale);
    nlohmann::json j;
    j["messages"] = nlohmann::json::array({
        {{"role", "system"}, {"content", system_preamble()}},
        {{"role", "user"}, {"content", r.prompt_text}},
        {{"role", "assistant"}, {"content", answer}},
    });
    out << j.dump() << '\n';
    summary.token_estimate += estimate_tokens(system_preamble()) + estimate_tokens(r.prompt_text) +
                              estimate_tokens(answer);
    ++summary.examples;
  }
  return summary;
}

DatasetSummary export_finetune_dataset(std::span<const MemoryRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw std::invalid_argument("export_finetune_dataset: no records");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path.string());
  return export_finetune_dataset(records, out);
}

}  // namespace saca::advisor
