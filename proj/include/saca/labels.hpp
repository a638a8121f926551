#ifndef SACA_LABELS_HPP
#define SACA_LABELS_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace saca {

/// Motion intention of a surrounding vehicle. Order is fixed and meaningful:
/// it is the tie-break order of the decoder and the one-hot layout order.
enum class Intention : int { M = 0, LC = 1, RC = 2, FB = 3, LB = 4, RB = 5 };

inline constexpr std::size_t kIntentionCount = 6;
inline constexpr std::array<Intention, kIntentionCount> kAllIntentions = {
    Intention::M, Intention::LC, Intention::RC, Intention::FB, Intention::LB, Intention::RB};

std::string_view intention_code(Intention i);
std::string_view intention_name(Intention i);
std::optional<Intention> parse_intention(std::string_view code);

constexpr std::size_t index_of(Intention i) { return static_cast<std::size_t>(i); }

/// Candidate collision-avoidance policies, ids 0..7.
enum class PolicyId : int {
  AEB = 0,
  AES_L = 1,
  AES_R = 2,
  ES_B_L = 3,
  ES_B_R = 4,
  T_D_L = 5,
  T_D_R = 6,
  NI = 7,
};

inline constexpr int kPolicyCount = 8;

std::string_view policy_name(PolicyId p);
/// Throws std::invalid_argument outside 0..7.
PolicyId policy_from_int(int id);
constexpr int to_int(PolicyId p) { return static_cast<int>(p); }

}  // namespace saca

#endif
