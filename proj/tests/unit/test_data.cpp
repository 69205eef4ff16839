#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "seclend/data.hpp"
#include "seclend/error.hpp"
#include "seclend/reward.hpp"

using namespace seclend;

namespace {

const char* kHeader =
    "timestamp,security_id,bid,quantity,market_value,own_vwaf,ml_rate,market_vwaf,rule_rate,"
    "utilization,market_share,alt_supply,return_signal\n";

ErrorCode ingest_error(const std::string& text, const IngestSchema& schema = {}) {
  try {
    ingest_text(text, schema);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

SyntheticConfig small_config(std::uint64_t seed = 42) {
  SyntheticConfig c;
  c.seed = seed;
  c.n_securities = 12;
  c.requests_per_day_min = 150;
  c.requests_per_day_max = 200;
  return c;
}

}  // namespace

// --- VWAF --------------------------------------------------------------------

TEST_CASE("vwaf examples") {
  const std::vector<Loan> equal = {{0.02, 100}, {0.04, 100}};
  CHECK(compute_vwaf(equal) == doctest::Approx(0.03).epsilon(1e-15));
  const std::vector<Loan> weighted = {{0.02, 300}, {0.04, 100}};
  CHECK(compute_vwaf(weighted) == doctest::Approx((0.02 * 300 + 0.04 * 100) / 400.0).epsilon(1e-15));
  CHECK(compute_vwaf(weighted) == doctest::Approx(0.025).epsilon(1e-15));
  const std::vector<Loan> single = {{0.037, 5}};
  CHECK(compute_vwaf(single) == 0.037);
}

TEST_CASE("vwaf errors") {
  CHECK_THROWS_AS(compute_vwaf(std::span<const Loan>{}), Error);
  try {
    compute_vwaf(std::span<const Loan>{});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPortfolio);
  }
  const std::vector<Loan> bad = {{0.02, 0.0}};
  CHECK_THROWS_AS(compute_vwaf(bad), Error);
}

TEST_CASE("property: vwaf lies between the smallest and largest fee") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> fee(0.0, 0.2);
  std::uniform_real_distribution<double> notional(1.0, 1e7);
  std::uniform_int_distribution<int> size(1, 30);
  for (int t = 0; t < 2000; ++t) {
    std::vector<Loan> loans(static_cast<std::size_t>(size(rng)));
    for (auto& l : loans) l = {fee(rng), notional(rng)};
    const auto [lo, hi] = std::minmax_element(loans.begin(), loans.end(),
                                              [](const Loan& a, const Loan& b) { return a.fee < b.fee; });
    const double v = compute_vwaf(loans);
    CHECK(v >= lo->fee * (1 - 1e-12));
    CHECK(v <= hi->fee * (1 + 1e-12));
  }
}

// --- Features ----------------------------------------------------------------

TEST_CASE("derive_features examples") {
  BookingRequest r;
  r.bid = 0.03;
  MarketSnapshot m;
  m.demand = 500;
  m.supply = 500;
  m.lender_supply = 0;
  m.market_supply = 1000;
  m.alternative_supply = 250;
  m.return_signal = 0.4;
  const ContextVector c = derive_features(r, m, 0.03);
  CHECK(c.utilization == 1.0);
  CHECK(c.market_share == 0.0);
  CHECK(c.alt_supply == 0.25);
  CHECK(c.return_signal == 0.4);
  CHECK(c.bid_signal_scaled == 1.0);

  m.demand = 1500;  // over-subscribed caps at 1
  CHECK(derive_features(r, m, 0.03).utilization == 1.0);
  CHECK(derive_features(r, m, 0.06).bid_signal_scaled == 0.5);
  CHECK(derive_features(r, m, 0.01).bid_signal_scaled == 1.0);  // capped
}

TEST_CASE("utilization falls back to the market-wide level without own supply") {
  BookingRequest r;
  r.bid = 0.02;
  MarketSnapshot m;
  m.demand = 10;
  m.market_utilization = 0.35;
  CHECK(derive_features(r, m, 0.02).utilization == 0.35);
}

TEST_CASE("bid EWMA uses the prior mean and decays by half over the half-life") {
  BidEwma e(2.0);
  CHECK(e.current("A", 0.05) == 0.05);
  e.observe("A", 0.04);
  CHECK(e.current("A", 0.9) == 0.04);
  e.observe("A", 0.08);
  e.observe("A", 0.08);
  // after two steps of a half-life-2 average, half the gap to 0.08 is closed
  CHECK(e.current("A", 0.0) == doctest::Approx(0.06).epsilon(1e-14));
  CHECK(e.current("B", 0.01) == 0.01);
  CHECK_THROWS_AS(BidEwma(0.0), Error);
}

TEST_CASE("clamp_context clamps and counts") {
  ClampCounts counts;
  const ContextVector c = clamp_context({1.2, -0.1, 0.5, 0.5, 1.0}, counts);
  CHECK(c.utilization == 1.0);
  CHECK(c.market_share == 0.0);
  CHECK(counts.per_feature[0] == 1);
  CHECK(counts.per_feature[1] == 1);
  CHECK(counts.total() == 2);
  clamp_context({std::nan(""), 0, 0, 0, 0}, counts);
  CHECK(counts.per_feature[0] == 2);
}

// --- Ingestion -------------------------------------------------------------

TEST_CASE("well-formed file is ingested and sorted by timestamp") {
  const std::string text = std::string(kHeader) +
                           "3000,B,0.03,100,1e6,0.02,0.025,0.03,0.04,0.5,0.5,0.5,0.5\n"
                           "1000,A,0.02,200,2e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n"
                           "2000,A,0.025,300,3e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n";
  const IngestResult r = ingest_text(text);
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0].request.timestamp_ms == 1000);
  CHECK(r.records[1].request.timestamp_ms == 2000);
  CHECK(r.records[2].request.timestamp_ms == 3000);
  CHECK(r.records[0].arms == ArmQuotes(0.015, 0.02, 0.025, 0.03));
  CHECK(r.records[0].context.return_signal == 0.6);
  // first sighting of a security scales to exactly 1
  CHECK(r.records[0].context.bid_signal_scaled == 1.0);
  // second A request: 0.025 against a prior mean of 0.02, capped
  CHECK(r.records[1].context.bid_signal_scaled == 1.0);
  CHECK(r.summary.bid_signal_capped == 1);
  CHECK(r.summary.rows_accepted == 3);
}

TEST_CASE("equal timestamps keep file order") {
  const std::string text = std::string(kHeader) +
                           "5,X,0.03,100,1e6,0.02,0.025,0.03,0.04,0.5,0.5,0.5,0.5\n"
                           "5,Y,0.03,100,1e6,0.02,0.025,0.03,0.04,0.5,0.5,0.5,0.5\n"
                           "1,Z,0.03,100,1e6,0.02,0.025,0.03,0.04,0.5,0.5,0.5,0.5\n";
  const IngestResult r = ingest_text(text);
  CHECK(r.records[0].request.security_id == "Z");
  CHECK(r.records[1].request.security_id == "X");
  CHECK(r.records[2].request.security_id == "Y");
}

TEST_CASE("unparsable bid: strict throws with a line number, lenient skips and counts") {
  const std::string text = std::string(kHeader) +
                           "1000,A,0.02,200,2e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n"
                           "2000,A,abc,200,2e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n";
  try {
    ingest_text(text);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  IngestSchema lenient;
  lenient.strict = false;
  const IngestResult r = ingest_text(text, lenient);
  CHECK(r.records.size() == 1);
  CHECK(r.summary.rows_rejected == 1);
  CHECK(r.summary.rejection_reasons.at("parse_error") == 1);
}

TEST_CASE("missing required column") {
  const std::string text =
      "timestamp,security_id,bid,quantity,own_vwaf,ml_rate,market_vwaf,rule_rate,utilization,market_share,"
      "alt_supply,return_signal\n1,A,0.02,1,0.01,0.02,0.03,0.04,0.1,0.1,0.1,0.1\n";
  try {
    ingest_text(text);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
    CHECK(std::string(e.what()).find("market_value") != std::string::npos);
  }
}

TEST_CASE("empty and header-only files") {
  CHECK(ingest_error("") == ErrorCode::EmptyFile);
  CHECK(ingest_error("\n\n") == ErrorCode::EmptyFile);
  CHECK(ingest_error(kHeader) == ErrorCode::EmptyFile);
}

TEST_CASE("rows violating request invariants are rejected") {
  const std::string text = std::string(kHeader) +
                           "1000,A,-0.02,200,2e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n"
                           "1000,A,0.02,0,2e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n"
                           "1000,A,0.02,10,2e6,0.015,,0.025,0.03,0.2,0.3,0.4,0.6\n"
                           "1000,A,0.02,10,2e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n";
  CHECK(ingest_error(text) == ErrorCode::NegativeBid);
  IngestSchema lenient;
  lenient.strict = false;
  const IngestResult r = ingest_text(text, lenient);
  CHECK(r.records.size() == 1);
  CHECK(r.summary.rejection_reasons.at("NegativeBid") == 1);
  CHECK(r.summary.rejection_reasons.at("NonPositiveQuantity") == 1);
  CHECK(r.summary.rejection_reasons.at("missing_arm_price") == 1);
}

TEST_CASE("out-of-range features are clamped and counted") {
  const std::string text = std::string(kHeader) +
                           "1000,A,0.02,200,2e6,0.015,0.02,0.025,0.03,1.4,0.3,-0.2,0.6\n";
  const IngestResult r = ingest_text(text);
  CHECK(r.records[0].context.utilization == 1.0);
  CHECK(r.records[0].context.alt_supply == 0.0);
  CHECK(r.summary.clamps.total() == 2);
}

TEST_CASE("GC names are filtered unless the filter is off") {
  const std::string text = std::string(kHeader) +
                           "1000,A,0.004,200,2e6,0.002,0.0025,0.0025,0.003,0.2,0.3,0.4,0.6\n"
                           "1001,B,0.02,200,2e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n";
  const IngestResult r = ingest_text(text);
  CHECK(r.records.size() == 1);
  CHECK(r.summary.gc_filtered == 1);
  IngestSchema keep;
  keep.gc_filter = false;
  CHECK(ingest_text(text, keep).records.size() == 2);
}

TEST_CASE("schema renames, tab delimiter and basis points") {
  const IngestSchema schema = IngestSchema::from_json(nlohmann::json::parse(R"({
    "delimiter": "\\t", "fee_units": "bp", "columns": {"bid": "BorrowerBid", "security_id": "cusip"}})"));
  CHECK(schema.delimiter == '\t');
  const std::string text =
      "timestamp\tcusip\tBorrowerBid\tquantity\tmarket_value\town_vwaf\tml_rate\tmarket_vwaf\trule_rate\t"
      "utilization\tmarket_share\talt_supply\treturn_signal\n"
      "1\tQ\t300\t10\t1e5\t150\t200\t250\t300\t0.1\t0.2\t0.3\t0.4\n";
  const IngestResult r = ingest_text(text, schema);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].request.security_id == "Q");
  CHECK(r.records[0].request.bid == doctest::Approx(0.03));
  CHECK(r.records[0].arms.price(ArmId::MarketVwaf) == doctest::Approx(0.025));
  CHECK_THROWS_AS(IngestSchema::from_json(nlohmann::json::parse(R"({"fee_units": "yen"})")), Error);
}

TEST_CASE("quoted fields") {
  const std::string text = std::string(kHeader) +
                           "1000,\"A,1\",0.02,200,2e6,0.015,0.02,0.025,0.03,0.2,0.3,0.4,0.6\n";
  CHECK(ingest_text(text).records[0].request.security_id == "A,1");
}

TEST_CASE("market vwaf and features derived from raw columns; logged arm from the offered rate") {
  const std::string text =
      "timestamp,security_id,bid,quantity,market_value,own_vwaf,ml_rate,market_vwaf,rule_rate,"
      "demand,supply,lender_supply,market_supply,alternative_supply,return_signal,offered_rate,accept_flag\n"
      "1,A,0.03,10,100,0.01,0.02,0.03,0.04,10,20,5,50,10,0.5,0.02,1\n"
      "2,A,0.05,10,300,0.01,0.02,,0.06,10,20,5,50,10,0.5,0.04,1\n"
      "3,A,0.05,10,100,0.01,0.02,,0.06,30,20,5,50,10,0.5,0.05,0\n"
      "4,B,0.05,10,100,0.01,0.02,,0.06,30,20,5,50,10,0.5,0.05,0\n";
  IngestSchema lenient;
  lenient.strict = false;
  const IngestResult r = ingest_text(text, lenient);
  REQUIRE(r.records.size() == 3);
  CHECK(r.summary.rejection_reasons.at("underivable_market_vwaf") == 1);
  CHECK(r.summary.derived_market_vwaf == 2);
  CHECK(r.records[1].arms.price(ArmId::MarketVwaf) == 0.02);
  // (0.02 * 100 + 0.04 * 300) / 400
  CHECK(r.records[2].arms.price(ArmId::MarketVwaf) == doctest::Approx(0.035));
  CHECK(r.records[0].context.utilization == 0.5);
  CHECK(r.records[2].context.utilization == 1.0);
  CHECK(r.records[0].context.market_share == 0.1);
  CHECK(r.records[0].context.alt_supply == 0.2);
  CHECK(r.summary.synthesized_logged_arms == 3);
  CHECK(*r.records[0].request.logged_arm == ArmId::MlBased);
  CHECK(*r.records[2].request.logged_arm == ArmId::RuleBased);
  CHECK(*r.records[2].request.logged_status == false);
}

TEST_CASE("ingest uses the running market utilization for a security without supply") {
  const std::string text =
      "timestamp,security_id,bid,quantity,market_value,own_vwaf,ml_rate,market_vwaf,rule_rate,"
      "demand,supply,market_share,alt_supply,return_signal\n"
      "1,A,0.03,10,100,0.01,0.02,0.03,0.04,10,40,0.1,0.1,0.5\n"
      "2,B,0.03,10,100,0.01,0.02,0.03,0.04,20,60,0.1,0.1,0.5\n"
      "3,C,0.03,10,100,0.01,0.02,0.03,0.04,5,0,0.1,0.1,0.5\n";
  const IngestResult r = ingest_text(text, IngestSchema{});
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0].context.utilization == 0.25);
  CHECK(r.records[1].context.utilization == 20.0 / 60.0);
  // (10 + 20 + 5) / (40 + 60)
  CHECK(r.records[2].context.utilization == doctest::Approx(0.35));
}

TEST_CASE("nearest arm ties go to the lower price") {
  // dyadic fees so the two distances are exactly equal
  const ArmQuotes arms(0.125, 0.25, 0.375, 0.5);
  CHECK(nearest_arm(arms, 0.3125) == ArmId::MlBased);
  CHECK(nearest_arm(arms, 0.3) == ArmId::MlBased);
  CHECK(nearest_arm(arms, 0.9) == ArmId::RuleBased);
  CHECK(nearest_arm(arms, 0.0) == ArmId::OwnVwaf);
  CHECK(nearest_arm(ArmQuotes(0.375, 0.125, 0.5, 0.625), 0.25) == ArmId::MlBased);
}

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e9, 1e9);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1e6)) == 1e6);
}

// --- Synthetic generator -----------------------------------------------------

TEST_CASE("synthetic config validation") {
  SyntheticConfig c;
  CHECK_NOTHROW(c.validate());
  c.spoof_rate = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SyntheticConfig{};
  c.specials_min = 0.2;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SyntheticConfig{};
  c.regime_shifts = {{9, {}}};
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_THROWS_AS(SyntheticConfig::from_json(nlohmann::json::parse(R"({"days": "x"})")), Error);
  const SyntheticConfig round = SyntheticConfig::from_json(SyntheticConfig{}.to_json());
  CHECK(round.to_json() == SyntheticConfig{}.to_json());
}

TEST_CASE("synthetic generation is deterministic under the seed") {
  const SyntheticLog a = generate_synthetic(small_config(9));
  const SyntheticLog b = generate_synthetic(small_config(9));
  const SyntheticLog c = generate_synthetic(small_config(10));
  CHECK(to_canonical_csv(a.records) == to_canonical_csv(b.records));
  CHECK(to_canonical_csv(a.records) != to_canonical_csv(c.records));
}

TEST_CASE("synthetic logs respect the domain invariants without clamps") {
  const SyntheticLog log = generate_synthetic(SyntheticConfig{});
  REQUIRE(log.records.size() >= 7 * 1200);
  ClampCounts counts;
  std::int64_t prev = 0;
  for (const LogRecord& r : log.records) {
    CHECK_NOTHROW(validate_request(r.request));
    CHECK(r.arms.is_aggressiveness_ordered());
    for (double p : r.arms.prices()) {
      CHECK(p >= 0.01);
      CHECK(p <= 0.10);
    }
    CHECK(r.request.timestamp_ms >= prev);
    prev = r.request.timestamp_ms;
    CHECK(clamp_context(r.context, counts) == r.context);
    CHECK(r.request.logged_arm.has_value());
    CHECK(r.offered_rate == r.arms.price(*r.request.logged_arm));
  }
  CHECK(counts.total() == 0);
}

TEST_CASE("injected spoof fraction tracks the configured rate") {
  SyntheticConfig c;
  c.days = 1;
  c.regime_shifts.clear();
  c.requests_per_day_min = c.requests_per_day_max = 10000;
  c.spoof_rate = 0.1;
  const SyntheticLog log = generate_synthetic(c);
  const auto spoofed = std::count(log.injected_spoof.begin(), log.injected_spoof.end(), true);
  CHECK(std::abs(spoofed / 1e4 - 0.1) <= 0.01);
  // spoof bids sit below the anti-spoofing threshold, so nothing books
  const SpoofConfig spoof{c.spoof_delta};
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    if (!log.injected_spoof[i]) continue;
    const LogRecord& r = log.records[i];
    CHECK(r.request.bid < c.spoof_delta * r.arms.price(ArmId::MarketVwaf));
    CHECK(oracle_arm(r.request, r.arms, spoof, r.arms.price(ArmId::MarketVwaf)).revenue == 0.0);
  }
}

TEST_CASE("regime shifts make different arms oracle-optimal") {
  const SyntheticLog log = generate_synthetic(SyntheticConfig{});
  const SpoofConfig spoof{};
  PerArm<std::size_t> wins{};
  std::set<std::size_t> regimes(log.regime.begin(), log.regime.end());
  CHECK(regimes.size() >= 2);
  for (const LogRecord& r : log.records) {
    ++wins[arm_index(oracle_arm(r.request, r.arms, spoof, r.arms.price(ArmId::MarketVwaf)).arm)];
  }
  int popular = 0;
  for (std::size_t w : wins) {
    if (w >= 0.2 * static_cast<double>(log.records.size())) ++popular;
  }
  CHECK(popular >= 2);
}

TEST_CASE("ingestion is idempotent on canonical output") {
  const SyntheticLog log = generate_synthetic(small_config());
  const std::string first = to_canonical_csv(log.records);
  const IngestResult once = ingest_text(first);
  CHECK(once.records == log.records);
  const std::string second = to_canonical_csv(once.records);
  CHECK(second == first);
  CHECK(ingest_text(second).records == once.records);

  const auto path = std::filesystem::temp_directory_path() / "seclend_idempotent.csv";
  write_canonical(path, once.records);
  CHECK(ingest(path).records == once.records);
  std::filesystem::remove(path);
}
