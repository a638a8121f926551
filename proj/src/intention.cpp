#include "saca/intention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace saca::intention {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Index of the largest entry; the lowest index wins ties.
template <typename F>
std::size_t argmax_low(F value) {
  std::size_t best = 0;
  double best_v = value(0);
  for (std::size_t k = 1; k < kIntentionCount; ++k) {
    const double v = value(k);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

}  // namespace

void TransitionMatrix::validate() const {
  for (const auto& row : a) {
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("transition matrix: negative or non-finite entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("transition matrix: row does not sum to 1");
  }
  const auto lb = index_of(Intention::LB);
  const auto rb = index_of(Intention::RB);
  if (a[lb][rb] != 0.0 || a[rb][lb] != 0.0) throw std::invalid_argument("transition matrix: LB<->RB must be forbidden");
}

IntentionModel parse_intention_model(const std::string& json_text) {
  using nlohmann::json;
  IntentionModel m;
  try {
    const json j = json::parse(json_text);
    if (j.contains("transitions")) {
      const json& t = j.at("transitions");
      if (t.size() != kIntentionCount) throw std::invalid_argument("transitions: expected 6 rows");
      for (std::size_t i = 0; i < kIntentionCount; ++i) {
        if (t[i].size() != kIntentionCount) throw std::invalid_argument("transitions: expected 6 columns");
        for (std::size_t k = 0; k < kIntentionCount; ++k) m.transitions.a[i][k] = t[i][k].get<double>();
      }
    }
    if (j.contains("emissions")) {
      const json& e = j.at("emissions");
      auto read = [&](const char* key, ScoreVector& dst) {
        if (!e.contains(key)) return;
        const auto v = e.at(key).get<std::vector<double>>();
        if (v.size() != kIntentionCount) throw std::invalid_argument(std::string("emissions.") + key + ": expected 6 values");
        std::copy(v.begin(), v.end(), dst.begin());
      };
      read("bias", m.emissions.bias);
      read("brake", m.emissions.brake);
      read("left", m.emissions.left);
      read("right", m.emissions.right);
    }
    m.window = j.value("window", m.window);
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("intention model: ") + ex.what());
  }
  if (m.window == 0) throw std::invalid_argument("intention model: window must be positive");
  m.transitions.validate();
  return m;
}

IntentionModel load_intention_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open intention model: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_intention_model(ss.str());
}

ScoreVector emission_scores(const DrivingFeatures& obs, const EmissionTable& table) {
  const double b = std::clamp((-obs.longitudinal_accel - 1.0) / 3.0, 0.0, 1.5);
  const double s = obs.lateral_velocity + 0.5 * obs.lateral_offset_rate + 2.0 * obs.heading_rate;
  const double l = std::clamp((s - 0.2) / 0.8, 0.0, 1.5);
  const double r = std::clamp((-s - 0.2) / 0.8, 0.0, 1.5);
  ScoreVector out{};
  for (std::size_t k = 0; k < kIntentionCount; ++k)
    out[k] = table.bias[k] + table.brake[k] * b + table.left[k] * l + table.right[k] * r;
  return out;
}

Decoding viterbi(std::span<const ScoreVector> scores, const TransitionMatrix& a) {
  if (scores.empty()) throw std::invalid_argument("viterbi: empty score sequence");
  const std::size_t T = scores.size();
  std::array<std::array<double, kIntentionCount>, kIntentionCount> log_a{};
  for (std::size_t i = 0; i < kIntentionCount; ++i)
    for (std::size_t j = 0; j < kIntentionCount; ++j) log_a[i][j] = safe_log(a.a[i][j]);

  std::vector<std::array<std::size_t, kIntentionCount>> back(T);
  ScoreVector delta = scores[0];
  for (std::size_t t = 1; t < T; ++t) {
    ScoreVector next{};
    for (std::size_t j = 0; j < kIntentionCount; ++j) {
      const std::size_t i = argmax_low([&](std::size_t k) { return delta[k] + log_a[k][j]; });
      back[t][j] = i;
      next[j] = delta[i] + log_a[i][j] + scores[t][j];
    }
    delta = next;
  }
  const std::size_t last = argmax_low([&](std::size_t k) { return delta[k]; });
  if (delta[last] == kNegInf) throw DecodeError("viterbi: every label path has zero probability");

  Decoding d;
  d.final_scores = delta;
  d.path.resize(T);
  std::size_t cur = last;
  for (std::size_t t = T; t-- > 0;) {
    d.path[t] = kAllIntentions[cur];
    if (t > 0) cur = back[t][cur];
  }
  return d;
}

std::vector<Intention> viterbi_decode(std::span<const ScoreVector> scores, const TransitionMatrix& a) {
  return viterbi(scores, a).path;
}

Prediction predict_intention(std::span<const DrivingFeatures> history, const IntentionModel& model) {
  if (history.empty()) throw std::invalid_argument("predict_intention: empty history");
  const std::size_t n = std::min(history.size(), model.window);
  std::vector<ScoreVector> scores;
  scores.reserve(n);
  for (const DrivingFeatures& f : history.last(n)) scores.push_back(emission_scores(f, model.emissions));
  const Decoding d = viterbi(scores, model.transitions);

  std::array<std::size_t, kIntentionCount> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return d.final_scores[x] > d.final_scores[y]; });
  Prediction p;
  for (std::size_t k = 0; k < kIntentionCount; ++k) p.ranking[k] = kAllIntentions[order[k]];
  p.label = d.path.back();
  const double best = d.final_scores[order[0]];
  const double second = d.final_scores[order[1]];
  p.confidence = second == kNegInf ? 1.0 : 1.0 - std::exp(second - best);
  return p;
}

std::vector<DrivingFeatures> features_from_track(std::span<const ParticipantState> track, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("features_from_track: dt must be positive");
  std::vector<DrivingFeatures> out;
  if (track.empty()) return out;
  if (track.size() == 1) {
    // A single sample only reveals the current lateral motion.
    const ParticipantState& p = track.front();
    const Vec2 left{-p.travel_dir.y, p.travel_dir.x};
    DrivingFeatures f;
    f.lateral_velocity = p.velocity.dot(left);
    f.lateral_offset_rate = f.lateral_velocity;
    out.push_back(f);
    return out;
  }
  const Vec2 fwd = track.front().travel_dir;
  const Vec2 left{-fwd.y, fwd.x};
  for (std::size_t t = 1; t < track.size(); ++t) {
    const ParticipantState& p0 = track[t - 1];
    const ParticipantState& p1 = track[t];
    DrivingFeatures f;
    f.lateral_velocity = p1.velocity.dot(left);
    f.longitudinal_accel = (p1.velocity.dot(fwd) - p0.velocity.dot(fwd)) / dt;
    f.lateral_offset_rate = (p1.position - p0.position).dot(left) / dt;
    const double h0 = p0.velocity.norm() > 0.1 ? std::atan2(p0.velocity.y, p0.velocity.x) : p0.heading();
    const double h1 = p1.velocity.norm() > 0.1 ? std::atan2(p1.velocity.y, p1.velocity.x) : p1.heading();
    f.heading_rate = wrap_angle(h1 - h0) / dt;
    out.push_back(f);
  }
  return out;
}

}  // namespace saca::intention
