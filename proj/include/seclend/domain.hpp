#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace seclend {

// Candidate prices, ordered by the fixed tie-break order used everywhere.
enum class ArmId : std::uint8_t { OwnVwaf = 0, MlBased = 1, MarketVwaf = 2, RuleBased = 3 };

inline constexpr std::size_t kArmCount = 4;
inline constexpr std::array<ArmId, kArmCount> kAllArms = {ArmId::OwnVwaf, ArmId::MlBased,
                                                         ArmId::MarketVwaf, ArmId::RuleBased};

constexpr std::size_t arm_index(ArmId arm) noexcept { return static_cast<std::size_t>(arm); }
std::string_view arm_name(ArmId arm) noexcept;
std::optional<ArmId> parse_arm(std::string_view name) noexcept;

template <typename T>
using PerArm = std::array<T, kArmCount>;

// The four quoted lending fees attached to one request, each a decimal fraction per annum.
class ArmQuotes {
 public:
  ArmQuotes() = default;
  ArmQuotes(double own_vwaf, double ml_based, double market_vwaf, double rule_based)
      : prices_{own_vwaf, ml_based, market_vwaf, rule_based} {}

  double price(ArmId arm) const noexcept { return prices_[arm_index(arm)]; }
  double& operator[](ArmId arm) noexcept { return prices_[arm_index(arm)]; }
  const PerArm<double>& prices() const noexcept { return prices_; }

  // OwnVwaf <= MlBased <= MarketVwaf <= RuleBased.
  bool is_aggressiveness_ordered() const noexcept;

  bool operator==(const ArmQuotes&) const = default;

 private:
  PerArm<double> prices_{};
};

struct BookingRequest {
  std::string request_id;
  std::int64_t timestamp_ms = 0;
  std::string security_id;
  double bid = 0.0;
  std::int64_t quantity = 0;
  double market_value = 0.0;
  std::optional<ArmId> logged_arm;
  std::optional<bool> logged_status;

  bool operator==(const BookingRequest&) const = default;
};

struct ContextVector {
  static constexpr std::size_t kFeatureCount = 5;

  double utilization = 0.0;
  double market_share = 0.0;
  double alt_supply = 0.0;
  double return_signal = 0.0;
  double bid_signal_scaled = 0.0;

  std::array<double, kFeatureCount> features() const noexcept {
    return {utilization, market_share, alt_supply, return_signal, bid_signal_scaled};
  }

  // Model input: the five features followed by a constant 1.0 when with_bias is set.
  Eigen::VectorXd to_vector(bool with_bias) const;

  bool operator==(const ContextVector&) const = default;
};

inline constexpr std::array<std::string_view, ContextVector::kFeatureCount> kFeatureNames = {
    "utilization", "market_share", "alt_supply", "return_signal", "bid_signal_scaled"};

constexpr std::size_t context_dimension(bool with_bias) noexcept {
  return ContextVector::kFeatureCount + (with_bias ? 1 : 0);
}

// One fully populated log row: what the replay engine consumes.
struct LogRecord {
  BookingRequest request;
  ContextVector context;
  ArmQuotes arms;
  std::optional<double> offered_rate;

  bool operator==(const LogRecord&) const = default;
};

struct RewardComponents {
  double booking_preference = 0.0;
  int booking_status = 0;
  double revenue_propensity = 0.0;
  double expected_revenue = 0.0;
};

enum class BenchmarkMode { MarketVwaf, FixedValue };

struct SpoofConfig {
  double delta = 0.85;
  BenchmarkMode benchmark_mode = BenchmarkMode::MarketVwaf;
  std::optional<double> fixed_value;

  // Throws InvalidSpoofConfig unless delta is in (0, 1].
  void validate() const;
};

// Returns the request unchanged when bid >= 0, quantity > 0 and market_value >= 0.
BookingRequest validate_request(BookingRequest request);

}  // namespace seclend
