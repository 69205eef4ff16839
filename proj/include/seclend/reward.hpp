#pragma once

// Revenue-propensity reward for one quoted lending fee against a borrower bid,
// plus the realized-reward oracle and regret bookkeeping built on it.
//
// All fees are decimal fractions per annum. The reward of quoting `ask` to a
// borrower bidding `bid` is
//
//   preference = ask / bid        if bid >= ask (a match), else 0
//   status     = 0                if preference == 0 or bid < delta * benchmark
//                1                otherwise
//   propensity = preference * status                         in [0, 1]
//   revenue    = propensity * market_value * ask
//
// The benchmark is resolved per security (see resolve_benchmark); a zero
// benchmark disables the anti-spoofing threshold.

#include <string>
#include <unordered_map>
#include <vector>

#include "seclend/domain.hpp"

namespace seclend {

double booking_preference(double bid, double ask) noexcept;

// bid == ask == 0: booking_preference returns 0 there, the quotient being undefined.
constexpr bool is_degenerate_quote(double bid, double ask) noexcept { return bid == 0.0 && ask == 0.0; }

int booking_status(double bid, double ask, const SpoofConfig& spoof, double benchmark) noexcept;

double revenue_propensity(double bid, double ask, const SpoofConfig& spoof, double benchmark) noexcept;

double expected_revenue(double propensity, double market_value, double price) noexcept;

// All four components for quoting `price` on `request`.
RewardComponents evaluate_reward(const BookingRequest& request, double price, const SpoofConfig& spoof,
                                 double benchmark) noexcept;

// Latest known market VWAF per security.
using VwafBook = std::unordered_map<std::string, double>;

double resolve_benchmark(const std::string& security_id, const SpoofConfig& spoof, const VwafBook& vwaf);

struct OracleChoice {
  ArmId arm = ArmId::OwnVwaf;
  double revenue = 0.0;
};

// Arm with the highest realized expected revenue. Ties go to the lower price,
// then to the earlier arm in kAllArms order.
OracleChoice oracle_arm(const BookingRequest& request, const ArmQuotes& arms, const SpoofConfig& spoof,
                        double benchmark) noexcept;

struct RegretRecord {
  ArmId oracle_arm = ArmId::OwnVwaf;
  ArmId chosen_arm = ArmId::OwnVwaf;
  double oracle_revenue = 0.0;
  double chosen_revenue = 0.0;
};

class RegretLedger {
 public:
  double cumulative_regret() const noexcept { return cumulative_regret_; }
  const std::vector<RegretRecord>& records() const noexcept { return records_; }

  // Throws NegativeRegretStep when the chosen revenue exceeds the oracle's,
  // which can only mean a broken oracle.
  void push(const RegretRecord& record);

 private:
  double cumulative_regret_ = 0.0;
  std::vector<RegretRecord> records_;
};

RegretLedger regret_step(RegretLedger ledger, double oracle_revenue, double chosen_revenue,
                         ArmId oracle = ArmId::OwnVwaf, ArmId chosen = ArmId::OwnVwaf);

}  // namespace seclend
