#include "seclend/reward.hpp"

#include "seclend/error.hpp"

namespace seclend {

double booking_preference(double bid, double ask) noexcept {
  if (bid < ask || bid <= 0.0) return 0.0;
  return ask / bid;
}

int booking_status(double bid, double ask, const SpoofConfig& spoof, double benchmark) noexcept {
  if (booking_preference(bid, ask) == 0.0) return 0;
  if (bid < spoof.delta * benchmark) return 0;
  return 1;
}

double revenue_propensity(double bid, double ask, const SpoofConfig& spoof, double benchmark) noexcept {
  return booking_preference(bid, ask) * booking_status(bid, ask, spoof, benchmark);
}

double expected_revenue(double propensity, double market_value, double price) noexcept {
  return propensity * market_value * price;
}

RewardComponents evaluate_reward(const BookingRequest& request, double price, const SpoofConfig& spoof,
                                 double benchmark) noexcept {
  RewardComponents out;
  out.booking_preference = booking_preference(request.bid, price);
  out.booking_status = booking_status(request.bid, price, spoof, benchmark);
  out.revenue_propensity = out.booking_preference * out.booking_status;
  out.expected_revenue = expected_revenue(out.revenue_propensity, request.market_value, price);
  return out;
}

double resolve_benchmark(const std::string& security_id, const SpoofConfig& spoof, const VwafBook& vwaf) {
  if (spoof.benchmark_mode == BenchmarkMode::FixedValue) {
    if (!spoof.fixed_value) {
      throw Error(ErrorCode::MissingFixedValue, "benchmark mode is fixed but no value is configured");
    }
    return *spoof.fixed_value;
  }
  const auto it = vwaf.find(security_id);
  return it == vwaf.end() ? 0.0 : it->second;
}

OracleChoice oracle_arm(const BookingRequest& request, const ArmQuotes& arms, const SpoofConfig& spoof,
                        double benchmark) noexcept {
  OracleChoice best{kAllArms[0], -1.0};
  double best_price = 0.0;
  for (ArmId arm : kAllArms) {
    const double price = arms.price(arm);
    const double revenue =
        expected_revenue(revenue_propensity(request.bid, price, spoof, benchmark), request.market_value, price);
    // Arms are visited in tie-break order, so only a strictly better revenue
    // or an equal revenue at a strictly lower price displaces the incumbent.
    if (revenue > best.revenue || (revenue == best.revenue && price < best_price)) {
      best = {arm, revenue};
      best_price = price;
    }
  }
  return best;
}

void RegretLedger::push(const RegretRecord& record) {
  if (record.chosen_revenue > record.oracle_revenue) {
    throw Error(ErrorCode::NegativeRegretStep, "chosen revenue " + std::to_string(record.chosen_revenue) +
                                                   " exceeds oracle revenue " +
                                                   std::to_string(record.oracle_revenue));
  }
  cumulative_regret_ += record.oracle_revenue - record.chosen_revenue;
  records_.push_back(record);
}

RegretLedger regret_step(RegretLedger ledger, double oracle_revenue, double chosen_revenue, ArmId oracle,
                         ArmId chosen) {
  ledger.push({oracle, chosen, oracle_revenue, chosen_revenue});
  return ledger;
}

}  // namespace seclend
