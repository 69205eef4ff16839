#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "seclend/data.hpp"
#include "seclend/error.hpp"
#include "seclend/reward.hpp"

namespace seclend {

namespace {

constexpr std::int64_t kDayMs = 86'400'000;
// US lending hours in UTC.
constexpr std::int64_t kSessionOpenMs = 13 * 3'600'000 + 30 * 60'000;
constexpr std::int64_t kSessionCloseMs = 20 * 3'600'000;

// Quote multipliers around the latent fair fee, least to most aggressive.
constexpr PerArm<double> kArmMultiplier = {0.90, 1.00, 1.08, 1.25};
constexpr double kBasePremium = -0.04;

struct SecurityState {
  std::string id;
  bool gc = false;
  double log_fair0 = 0.0;
  double log_fair = 0.0;
  double stock_price = 0.0;
  double market_supply = 0.0;
  double base_utilization = 0.0;
  double base_share = 0.0;
  double base_alt = 0.0;
  double utilization = 0.0;
  double share = 0.0;
  double alt = 0.0;
};

double mean_revert(double x, double target, double speed, double noise) {
  return std::clamp(x + speed * (target - x) + noise, 0.01, 0.99);
}

}  // namespace

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (n_securities == 0) fail("n_securities must be positive");
  if (days < 1) fail("days must be at least 1");
  if (requests_per_day_min == 0 || requests_per_day_min > requests_per_day_max) {
    fail("requests_per_day range must satisfy 0 < min <= max");
  }
  if (!(gc_floor > 0.0)) fail("gc_floor must be positive");
  if (!(specials_min > 0.0 && specials_min < specials_max)) fail("specials band must satisfy 0 < min < max");
  if (!(gc_fraction >= 0.0 && gc_fraction <= 1.0)) fail("gc_fraction must lie in [0, 1]");
  if (!(spoof_rate >= 0.0 && spoof_rate <= 1.0)) fail("spoof_rate must lie in [0, 1]");
  if (!(spoof_delta > 0.0 && spoof_delta <= 1.0)) fail("spoof_delta must lie in (0, 1]");
  if (!(bid_noise >= 0.0)) fail("bid_noise must be non-negative");
  for (const RegimeShift& shift : regime_shifts) {
    if (shift.day < 0 || shift.day >= days) fail("regime shift day " + std::to_string(shift.day) + " out of range");
  }
  if (!std::is_sorted(regime_shifts.begin(), regime_shifts.end(),
                      [](const RegimeShift& a, const RegimeShift& b) { return a.day < b.day; })) {
    fail("regime shifts must be ordered by day");
  }
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.n_securities = j.value("n_securities", c.n_securities);
    c.days = j.value("days", c.days);
    c.requests_per_day_min = j.value("requests_per_day_min", c.requests_per_day_min);
    c.requests_per_day_max = j.value("requests_per_day_max", c.requests_per_day_max);
    c.start_timestamp_ms = j.value("start_timestamp_ms", c.start_timestamp_ms);
    c.gc_floor = j.value("gc_floor", c.gc_floor);
    c.specials_min = j.value("specials_min", c.specials_min);
    c.specials_max = j.value("specials_max", c.specials_max);
    c.gc_fraction = j.value("gc_fraction", c.gc_fraction);
    c.spoof_rate = j.value("spoof_rate", c.spoof_rate);
    c.spoof_delta = j.value("spoof_delta", c.spoof_delta);
    c.bid_noise = j.value("bid_noise", c.bid_noise);
    if (j.contains("regime_shifts")) {
      c.regime_shifts.clear();
      for (const auto& s : j.at("regime_shifts")) {
        RegimeShift shift;
        shift.day = s.at("day").get<int>();
        const auto drift = s.at("drift").get<std::vector<double>>();
        if (drift.size() != shift.drift.size()) throw Error(ErrorCode::InvalidConfig, "drift needs 5 entries");
        std::copy(drift.begin(), drift.end(), shift.drift.begin());
        c.regime_shifts.push_back(shift);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json SyntheticConfig::to_json() const {
  nlohmann::json shifts = nlohmann::json::array();
  for (const RegimeShift& s : regime_shifts) shifts.push_back({{"day", s.day}, {"drift", s.drift}});
  return {{"seed", seed},
          {"n_securities", n_securities},
          {"days", days},
          {"requests_per_day_min", requests_per_day_min},
          {"requests_per_day_max", requests_per_day_max},
          {"start_timestamp_ms", start_timestamp_ms},
          {"gc_floor", gc_floor},
          {"specials_min", specials_min},
          {"specials_max", specials_max},
          {"gc_fraction", gc_fraction},
          {"regime_shifts", shifts},
          {"spoof_rate", spoof_rate},
          {"spoof_delta", spoof_delta},
          {"bid_noise", bid_noise}};
}

SyntheticConfig SyntheticConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "config not found: " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "synthetic config " + path.string() + ": " + e.what());
  }
}

SyntheticLog generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Keep every quote of a special inside the band.
  const double fair_lo = std::log(config.specials_min / kArmMultiplier[0]);
  const double fair_hi = std::log(config.specials_max / kArmMultiplier[kArmCount - 1]);

  std::vector<SecurityState> securities(config.n_securities);
  for (std::size_t i = 0; i < securities.size(); ++i) {
    SecurityState& s = securities[i];
    char id[32];
    std::snprintf(id, sizeof(id), "SEC%04zu", i + 1);
    s.id = id;
    s.gc = unit(rng) < config.gc_fraction;
    s.log_fair0 = s.gc ? std::log(config.gc_floor) : uniform(fair_lo, std::min(fair_hi, std::log(0.07)));
    s.log_fair = s.log_fair0;
    s.stock_price = uniform(5.0, 300.0);
    s.market_supply = uniform(5e5, 5e6);
    s.base_utilization = std::clamp(0.35 + 0.1 * normal(rng), 0.05, 0.9);
    s.base_share = uniform(0.1, 0.9);
    s.base_alt = uniform(0.1, 0.6);
    s.utilization = s.base_utilization;
    s.share = s.base_share;
    s.alt = s.base_alt;
  }

  SyntheticLog log;
  BidEwma ewma;
  std::uniform_int_distribution<std::size_t> per_day(config.requests_per_day_min, config.requests_per_day_max);
  std::uniform_int_distribution<std::size_t> pick_security(0, securities.size() - 1);
  std::uniform_int_distribution<std::int64_t> pick_time(kSessionOpenMs, kSessionCloseMs - 1);
  std::uniform_int_distribution<std::int64_t> pick_lots(1, 500);
  std::uniform_int_distribution<std::size_t> pick_arm(0, kArmCount - 1);
  SpoofConfig spoof{config.spoof_delta, BenchmarkMode::MarketVwaf, std::nullopt};

  std::size_t serial = 0;
  for (int day = 0; day < config.days; ++day) {
    std::array<double, 5> drift{};
    std::size_t regime = 0;
    for (std::size_t r = 0; r < config.regime_shifts.size(); ++r) {
      if (config.regime_shifts[r].day <= day) {
        drift = config.regime_shifts[r].drift;
        regime = r + 1;
      }
    }

    const std::size_t n = per_day(rng);
    std::vector<std::int64_t> times(n);
    for (auto& t : times) t = config.start_timestamp_ms + day * kDayMs + pick_time(rng);
    std::sort(times.begin(), times.end());

    for (std::int64_t ts : times) {
      SecurityState& s = securities[pick_security(rng)];
      s.utilization = mean_revert(s.utilization, s.base_utilization + drift[0], 0.1, 0.03 * normal(rng));
      s.share = mean_revert(s.share, s.base_share + drift[1], 0.1, 0.02 * normal(rng));
      s.alt = mean_revert(s.alt, s.base_alt + drift[2], 0.1, 0.02 * normal(rng));
      const double ret = std::clamp(0.5 + 0.9 * (s.utilization - 0.5) + drift[3] + 0.08 * normal(rng), 0.0, 1.0);
      s.log_fair += 0.05 * (s.log_fair0 - s.log_fair) + 0.02 * normal(rng);
      if (!s.gc) s.log_fair = std::clamp(s.log_fair, fair_lo, fair_hi);
      const double fair = std::exp(s.log_fair);

      PerArm<double> prices;
      for (std::size_t a = 0; a < kArmCount; ++a) prices[a] = fair * kArmMultiplier[a] * std::exp(0.02 * normal(rng));
      std::sort(prices.begin(), prices.end());
      if (!s.gc) {
        for (double& p : prices) p = std::clamp(p, config.specials_min, config.specials_max);
      }
      const ArmQuotes arms(prices[0], prices[1], prices[2], prices[3]);

      const double premium = kBasePremium + drift[4] + 0.35 * (s.utilization - 0.5) + 0.25 * (s.share - 0.5) -
                             0.20 * (s.alt - 0.5);
      double bid = fair * std::exp(premium + config.bid_noise * normal(rng));
      const bool spoofed = unit(rng) < config.spoof_rate;
      if (spoofed) bid = config.spoof_delta * arms.price(ArmId::MarketVwaf) * uniform(0.3, 0.95);

      LogRecord rec;
      BookingRequest& req = rec.request;
      char rid[24];
      std::snprintf(rid, sizeof(rid), "R%07zu", ++serial);
      req.request_id = rid;
      req.timestamp_ms = ts;
      req.security_id = s.id;
      req.bid = bid;
      req.quantity = 100 * pick_lots(rng);
      req.market_value = static_cast<double>(req.quantity) * s.stock_price;

      MarketSnapshot market;
      market.supply = s.market_supply;
      market.market_supply = s.market_supply;
      market.demand = s.utilization * s.market_supply;
      market.lender_supply = s.share * s.market_supply;
      market.alternative_supply = s.alt * s.market_supply;
      market.return_signal = ret;
      rec.context = derive_features(req, market, ewma.current(s.id, bid));
      ewma.observe(s.id, bid);

      const ArmId logged = kAllArms[pick_arm(rng)];
      req.logged_arm = logged;
      rec.offered_rate = arms.price(logged);
      req.logged_status =
          booking_status(bid, arms.price(logged), spoof, arms.price(ArmId::MarketVwaf)) == 1;
      rec.arms = arms;

      log.records.push_back(std::move(rec));
      log.injected_spoof.push_back(spoofed);
      log.regime.push_back(regime);
    }
  }
  return log;
}

}  // namespace seclend
