#include <algorithm>
#include <cmath>

#include "seclend/data.hpp"
#include "seclend/error.hpp"

namespace seclend {

double compute_vwaf(std::span<const Loan> loans) {
  if (loans.empty()) throw Error(ErrorCode::EmptyPortfolio, "cannot compute VWAF of an empty loan book");
  double weighted = 0.0;
  double total = 0.0;
  for (const Loan& loan : loans) {
    if (!(loan.notional > 0.0)) throw Error(ErrorCode::InvalidConfig, "loan notional must be positive");
    weighted += loan.fee * loan.notional;
    total += loan.notional;
  }
  return weighted / total;
}

BidEwma::BidEwma(double half_life) : half_life_(half_life), decay_(std::pow(0.5, 1.0 / half_life)) {
  if (!(half_life > 0.0)) throw Error(ErrorCode::InvalidConfig, "EWMA half-life must be positive");
}

double BidEwma::current(const std::string& security_id, double bid) const {
  const auto it = mean_.find(security_id);
  return it == mean_.end() ? bid : it->second;
}

void BidEwma::observe(const std::string& security_id, double bid) {
  auto [it, inserted] = mean_.try_emplace(security_id, bid);
  if (!inserted) it->second = decay_ * it->second + (1.0 - decay_) * bid;
}

ContextVector derive_features(const BookingRequest& request, const MarketSnapshot& market, double bid_ewma) {
  ContextVector c;
  if (market.supply > 0.0) {
    c.utilization = std::min(1.0, market.demand / market.supply);
  } else {
    c.utilization = market.market_utilization.value_or(market.demand > 0.0 ? 1.0 : 0.0);
  }
  c.market_share = market.market_supply > 0.0 ? market.lender_supply / market.market_supply : 0.0;
  c.alt_supply =
      market.market_supply > 0.0 ? std::clamp(market.alternative_supply / market.market_supply, 0.0, 1.0) : 0.0;
  c.return_signal = market.return_signal;
  c.bid_signal_scaled = bid_ewma > 0.0 ? std::clamp(request.bid / bid_ewma, 0.0, 1.0) : 0.0;
  return c;
}

std::size_t ClampCounts::total() const noexcept {
  std::size_t n = 0;
  for (std::size_t v : per_feature) n += v;
  return n;
}

ContextVector clamp_context(ContextVector context, ClampCounts& counts) {
  double* fields[] = {&context.utilization, &context.market_share, &context.alt_supply, &context.return_signal,
                      &context.bid_signal_scaled};
  for (std::size_t i = 0; i < ContextVector::kFeatureCount; ++i) {
    double& v = *fields[i];
    const double clamped = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    if (clamped != v || std::isnan(v)) {
      ++counts.per_feature[i];
      v = clamped;
    }
  }
  return context;
}

}  // namespace seclend
