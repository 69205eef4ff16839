#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "seclend/domain.hpp"

namespace seclend {

// ---------------------------------------------------------------------------
// VWAF

struct Loan {
  double fee = 0.0;
  double notional = 0.0;
};

// Notional-weighted mean fee. Throws EmptyPortfolio on an empty book.
double compute_vwaf(std::span<const Loan> loans);

// ---------------------------------------------------------------------------
// Context features

// Raw per-security supply/demand quantities a context is derived from.
struct MarketSnapshot {
  double demand = 0.0;
  double supply = 0.0;
  double lender_supply = 0.0;
  double market_supply = 0.0;
  double alternative_supply = 0.0;
  double return_signal = 0.0;
  // Used for utilization when the security has no supply of its own.
  std::optional<double> market_utilization;
};

// Per-security exponentially weighted mean of bids, with a half-life counted in
// requests of that security.
class BidEwma {
 public:
  explicit BidEwma(double half_life = 20.0);

  // Current average for the security, or `bid` itself when it has not been seen.
  double current(const std::string& security_id, double bid) const;
  void observe(const std::string& security_id, double bid);

  double half_life() const noexcept { return half_life_; }

 private:
  double half_life_;
  double decay_;
  std::unordered_map<std::string, double> mean_;
};

// Features are not clamped here except bid_signal_scaled, which is capped to [0, 1].
ContextVector derive_features(const BookingRequest& request, const MarketSnapshot& market, double bid_ewma);

struct ClampCounts {
  std::array<std::size_t, ContextVector::kFeatureCount> per_feature{};
  std::size_t total() const noexcept;
};

// Clamps every feature into [0, 1], counting each adjustment.
ContextVector clamp_context(ContextVector context, ClampCounts& counts);

// ---------------------------------------------------------------------------
// Ingestion

enum class FeeUnits { Fraction, BasisPoints, Percent };

struct IngestSchema {
  char delimiter = ',';
  // Logical column -> header name in the file. Unlisted columns use their logical name.
  std::map<std::string, std::string> columns;
  bool strict = true;
  FeeUnits fee_units = FeeUnits::Fraction;
  bool gc_filter = true;
  double gc_threshold = 0.01;
  double ewma_half_life = 20.0;

  std::string column(const std::string& logical) const;
  static IngestSchema from_json(const nlohmann::json& j);
  static IngestSchema load(const std::filesystem::path& path);
};

struct IngestSummary {
  std::size_t rows_read = 0;
  std::size_t rows_accepted = 0;
  std::size_t rows_rejected = 0;
  std::size_t gc_filtered = 0;
  std::map<std::string, std::size_t> rejection_reasons;
  ClampCounts clamps;
  std::size_t bid_signal_capped = 0;
  std::size_t derived_market_vwaf = 0;
  std::size_t synthesized_logged_arms = 0;
};

struct IngestResult {
  std::vector<LogRecord> records;  // sorted by timestamp, stable
  IngestSummary summary;
};

IngestResult ingest(const std::filesystem::path& path, const IngestSchema& schema = {});
IngestResult ingest_text(const std::string& text, const IngestSchema& schema = {});

// Arm whose price is nearest the offered rate; ties go to the lower price.
ArmId nearest_arm(const ArmQuotes& arms, double offered_rate) noexcept;

// Canonical, fully populated form of a log: default column names, fractions
// per annum, shortest round-trip number formatting.
std::string to_canonical_csv(std::span<const LogRecord> records);
void write_canonical(const std::filesystem::path& path, std::span<const LogRecord> records);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Synthetic market

struct RegimeShift {
  int day = 0;
  // Offsets added to the latent means of utilization, market share, alternative
  // supply, return signal, and the log bid premium, from `day` onward.
  std::array<double, 5> drift{};
};

struct SyntheticConfig {
  std::uint64_t seed = 42;
  std::size_t n_securities = 40;
  int days = 7;
  std::size_t requests_per_day_min = 1200;
  std::size_t requests_per_day_max = 1600;
  std::int64_t start_timestamp_ms = 1682899200000;  // 2023-05-01T00:00:00Z
  double gc_floor = 0.0025;
  double specials_min = 0.01;
  double specials_max = 0.10;
  double gc_fraction = 0.0;
  std::vector<RegimeShift> regime_shifts = {
      {3, {0.30, 0.10, -0.15, 0.10, 0.20}},
      {5, {0.10, -0.15, 0.20, -0.05, 0.18}},
  };
  double spoof_rate = 0.05;
  double spoof_delta = 0.85;
  double bid_noise = 0.08;

  void validate() const;
  static SyntheticConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static SyntheticConfig load(const std::filesystem::path& path);
};

struct SyntheticLog {
  std::vector<LogRecord> records;
  std::vector<bool> injected_spoof;   // parallel to records
  std::vector<std::size_t> regime;    // parallel to records; 0 before the first shift
};

SyntheticLog generate_synthetic(const SyntheticConfig& config);

}  // namespace seclend
