#ifndef SACA_INTENTION_HPP
#define SACA_INTENTION_HPP

#include <array>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "saca/labels.hpp"
#include "saca/world.hpp"

namespace saca::intention {

/// Per-step kinematic observation of one participant, in its own travel frame.
struct DrivingFeatures {
  double lateral_velocity{0.0};     // [m/s], + left
  double longitudinal_accel{0.0};   // [m/s^2]
  double lateral_offset_rate{0.0};  // [m/s], + left
  double heading_rate{0.0};         // [rad/s], + counter-clockwise
};

using ScoreVector = std::array<double, kIntentionCount>;

/// Piecewise-linear emission scorer. With the clipped activations
///   b = clamp((-accel - 1) / 3, 0, 1.5)
///   s = lateral_velocity + 0.5 * lateral_offset_rate + 2 * heading_rate
///   l = clamp((s - 0.2) / 0.8, 0, 1.5),  r = clamp((-s - 0.2) / 0.8, 0, 1.5)
/// the score of label k is bias[k] + brake[k] * b + left[k] * l + right[k] * r.
struct EmissionTable {
  ScoreVector bias{1.0, 0.0, 0.0, 0.0, -1.5, -1.5};
  ScoreVector brake{-2.0, -2.0, -2.0, 3.0, 2.0, 2.0};
  ScoreVector left{-2.0, 3.0, -3.0, -2.0, 2.0, -3.0};
  ScoreVector right{-2.0, -3.0, 3.0, -2.0, -3.0, 2.0};
};

/// Row-stochastic matrix a[i][j] = P(I_t = j | I_{t-1} = i), label order M, LC, RC, FB, LB, RB.
struct TransitionMatrix {
  std::array<std::array<double, kIntentionCount>, kIntentionCount> a{{
      {0.90, 0.03, 0.03, 0.02, 0.01, 0.01},
      {0.04, 0.90, 0.01, 0.02, 0.02, 0.01},
      {0.04, 0.01, 0.90, 0.02, 0.01, 0.02},
      {0.03, 0.01, 0.01, 0.90, 0.025, 0.025},
      {0.02, 0.03, 0.01, 0.04, 0.90, 0.00},
      {0.02, 0.01, 0.03, 0.04, 0.00, 0.90},
  }};

  /// Throws std::invalid_argument unless rows are stochastic and LB/RB reversals are forbidden.
  void validate() const;
};

struct IntentionModel {
  EmissionTable emissions;
  TransitionMatrix transitions;
  std::size_t window{10};
};

/// Reads {"transitions": 6x6, "emissions": {bias, brake, left, right}, "window": n};
/// absent keys keep their defaults.
IntentionModel load_intention_model(const std::filesystem::path& path);
IntentionModel parse_intention_model(const std::string& json_text);

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ScoreVector emission_scores(const DrivingFeatures& obs, const EmissionTable& table = {});

struct Decoding {
  std::vector<Intention> path;
  ScoreVector final_scores{};  // best path score ending in each label
};

/// Maximizes sum of emission scores plus log transitions (uniform start).
/// Ties go to the lower label index, deciding the last step first.
Decoding viterbi(std::span<const ScoreVector> scores, const TransitionMatrix& a);
std::vector<Intention> viterbi_decode(std::span<const ScoreVector> scores, const TransitionMatrix& a);

struct Prediction {
  Intention label{Intention::M};
  double confidence{1.0};
  std::array<Intention, kIntentionCount> ranking = kAllIntentions;
};

/// Decodes the last `model.window` observations. confidence = 1 - exp(second - best)
/// over the final-step path scores.
Prediction predict_intention(std::span<const DrivingFeatures> history, const IntentionModel& model = {});

/// Finite-difference features from a sampled track of one participant.
std::vector<DrivingFeatures> features_from_track(std::span<const ParticipantState> track, double dt);

}  // namespace saca::intention

#endif
