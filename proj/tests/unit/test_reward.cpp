#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "seclend/error.hpp"
#include "seclend/reward.hpp"

using namespace seclend;

namespace {

const SpoofConfig kSpoof{0.85, BenchmarkMode::MarketVwaf, std::nullopt};

// Written from the case analysis, not from the library.
double oracle_revenue(double bid, double ask, double delta, double benchmark, double mv) {
  if (ask > bid) return 0.0;
  if (bid == 0.0) return 0.0;
  if (bid < delta * benchmark) return 0.0;
  return mv * ask * ask / bid;
}

BookingRequest req(double bid, double mv) {
  BookingRequest r;
  r.security_id = "S";
  r.bid = bid;
  r.quantity = 100;
  r.market_value = mv;
  return r;
}

}  // namespace

TEST_CASE("booking preference examples") {
  CHECK(booking_preference(0.02, 0.01) == 0.5);
  CHECK(booking_preference(0.01, 0.02) == 0.0);
  CHECK(booking_preference(0.02, 0.02) == 1.0);
}

TEST_CASE("zero bid against zero ask is a degenerate quote with preference 0") {
  CHECK(booking_preference(0.0, 0.0) == 0.0);
  CHECK(is_degenerate_quote(0.0, 0.0));
  CHECK_FALSE(is_degenerate_quote(0.01, 0.0));
  CHECK(booking_preference(0.01, 0.0) == 0.0);
}

TEST_CASE("booking status examples") {
  CHECK(booking_status(0.02, 0.01, kSpoof, 0.02) == 1);
  // 0.015 < 0.85 * 0.02 = 0.017
  CHECK(booking_status(0.015, 0.01, kSpoof, 0.02) == 0);
  CHECK(booking_status(0.01, 0.02, kSpoof, 0.01) == 0);
  // threshold is inclusive: bid == delta * benchmark books
  CHECK(booking_status(0.017, 0.01, SpoofConfig{0.5}, 0.034) == 1);
}

TEST_CASE("revenue propensity examples") {
  CHECK(revenue_propensity(0.02, 0.01, kSpoof, 0.02) == 0.5);
  CHECK(revenue_propensity(0.015, 0.01, kSpoof, 0.02) == 0.0);
  CHECK(revenue_propensity(0.02, 0.02, kSpoof, 0.0) == 1.0);
}

TEST_CASE("expected revenue examples") {
  CHECK(expected_revenue(0.5, 1e6, 0.02) == doctest::Approx(10000.0).epsilon(1e-15));
  CHECK(expected_revenue(0.0, 123456.0, 0.07) == 0.0);
  CHECK(expected_revenue(1.0, 5e5, 0.04) == doctest::Approx(20000.0).epsilon(1e-15));
}

TEST_CASE("evaluate_reward composes the components") {
  const RewardComponents c = evaluate_reward(req(0.02, 1e6), 0.01, kSpoof, 0.02);
  CHECK(c.booking_preference == 0.5);
  CHECK(c.booking_status == 1);
  CHECK(c.revenue_propensity == 0.5);
  CHECK(c.expected_revenue == doctest::Approx(5000.0));
}

TEST_CASE("benchmark resolution") {
  VwafBook book{{"A", 0.02}};
  CHECK(resolve_benchmark("A", kSpoof, book) == 0.02);
  CHECK(resolve_benchmark("B", kSpoof, book) == 0.0);
  SpoofConfig fixed{0.85, BenchmarkMode::FixedValue, 0.01};
  CHECK(resolve_benchmark("A", fixed, book) == 0.01);
  SpoofConfig broken{0.85, BenchmarkMode::FixedValue, std::nullopt};
  CHECK_THROWS_AS(resolve_benchmark("A", broken, book), Error);
}

TEST_CASE("oracle arm worked example") {
  const ArmQuotes arms(0.01, 0.02, 0.03, 0.04);
  const OracleChoice o = oracle_arm(req(0.03, 1e6), arms, kSpoof, 0.0);
  CHECK(o.arm == ArmId::MarketVwaf);
  CHECK(o.revenue == doctest::Approx(30000.0).epsilon(1e-12));
}

TEST_CASE("oracle with every arm above the bid picks the cheapest arm at zero revenue") {
  const ArmQuotes arms(0.05, 0.06, 0.07, 0.08);
  const OracleChoice o = oracle_arm(req(0.01, 1e6), arms, kSpoof, 0.0);
  CHECK(o.arm == ArmId::OwnVwaf);
  CHECK(o.revenue == 0.0);
  // cheapest arm is not necessarily first in arm order
  const ArmQuotes unordered(0.07, 0.05, 0.08, 0.06);
  CHECK(oracle_arm(req(0.01, 1e6), unordered, kSpoof, 0.0).arm == ArmId::MlBased);
}

TEST_CASE("oracle equal prices tie-break by arm order") {
  const ArmQuotes arms(0.03, 0.02, 0.02, 0.04);
  CHECK(oracle_arm(req(0.025, 1e6), arms, kSpoof, 0.0).arm == ArmId::MlBased);
}

TEST_CASE("regret ledger") {
  RegretLedger ledger = regret_step({}, 30000.0, 10000.0);
  CHECK(ledger.cumulative_regret() == 20000.0);
  ledger = regret_step(ledger, 500.0, 500.0);
  CHECK(ledger.cumulative_regret() == 20000.0);
  CHECK(ledger.records().size() == 2);
  try {
    regret_step(ledger, 100.0, 200.0);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeRegretStep);
  }
}

TEST_CASE("property: preference shape as a function of bid for fixed ask") {
  for (double ask : {0.005, 0.02, 0.07}) {
    double prev = 2.0;
    for (int i = 0; i <= 400; ++i) {
      const double bid = 0.15 * i / 400.0;
      const double bp = booking_preference(bid, ask);
      if (bid < ask) {
        CHECK(bp == 0.0);
      } else {
        CHECK(bp == doctest::Approx(ask / bid));
        CHECK(bp <= prev);  // decays once matched
        prev = bp;
      }
    }
    CHECK(booking_preference(ask, ask) == 1.0);
  }
}

TEST_CASE("property: reward bounds and composition on random tuples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> fee(0.0, 0.12);
  std::uniform_real_distribution<double> delta(0.01, 1.0);
  std::uniform_real_distribution<double> mv(0.0, 5e6);
  for (int i = 0; i < 20000; ++i) {
    const double bid = fee(rng), ask = fee(rng), c = fee(rng), m = mv(rng);
    const SpoofConfig s{delta(rng)};
    const RewardComponents r = evaluate_reward(req(bid, m), ask, s, c);
    CHECK(r.booking_preference >= 0.0);
    CHECK(r.booking_preference <= 1.0);
    CHECK(r.revenue_propensity <= r.booking_preference);
    CHECK(r.revenue_propensity == r.booking_preference * r.booking_status);
    CHECK(r.expected_revenue >= 0.0);
    const double expect = oracle_revenue(bid, ask, s.delta, c, m);
    CHECK(r.expected_revenue == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("property: oracle dominates every arm and the matched arm nearest the bid wins") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> fee(0.005, 0.1);
  for (int i = 0; i < 5000; ++i) {
    PerArm<double> p{fee(rng), fee(rng), fee(rng), fee(rng)};
    std::sort(p.begin(), p.end());
    const ArmQuotes arms(p[0], p[1], p[2], p[3]);
    const double bid = fee(rng);
    const double bench = fee(rng);
    const BookingRequest r = req(bid, 1e6);
    const OracleChoice o = oracle_arm(r, arms, kSpoof, bench);
    for (ArmId arm : kAllArms) {
      CHECK(o.revenue >= evaluate_reward(r, arms.price(arm), kSpoof, bench).expected_revenue);
    }
    if (o.revenue > 0.0) {
      // highest price not above the bid
      double best = 0.0;
      for (double price : p) {
        if (price <= bid) best = std::max(best, price);
      }
      CHECK(arms.price(o.arm) == best);
    }
  }
}
