#pragma once

// Offline replay of a request log against a set of pricing policies.
//
// For every request, in timestamp order: build the context, let each policy
// choose an arm, compute the realized reward of that arm from the logged bid,
// and feed it back to the policy when the update gate allows. Revenue, regret
// and selection statistics are aggregated over the test segment only.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seclend/domain.hpp"
#include "seclend/policies.hpp"

namespace seclend {

enum class FeedbackMode { FullFeedback, ReplayMatch };

std::string_view feedback_mode_name(FeedbackMode mode) noexcept;

struct ReplayConfig {
  FeedbackMode mode = FeedbackMode::FullFeedback;
  int train_days = 4;
  int test_days = 1;
  SpoofConfig spoof{};
  std::uint64_t seed = 42;
  std::vector<PolicyConfig> policies = default_policy_configs();
  bool freeze_test = false;
  bool include_bias = true;
  std::int64_t tz_offset_minutes = 0;
  std::size_t threads = 1;
  bool merge_rule_into_ml = false;
  // Snapshot document used to initialise every window instead of a cold start.
  std::optional<nlohmann::json> warm_start;

  static std::vector<PolicyConfig> default_policy_configs();

  void validate() const;
  static ReplayConfig from_json(const nlohmann::json& j);
  static ReplayConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct PolicyReport {
  std::string policy;
  double test_revenue = 0.0;
  double cumulative_regret = 0.0;
  PerArm<double> selection_ratios{};
  double match_rate = 0.0;        // test decisions equal to the logged arm
  double booking_hit_rate = 0.0;  // test decisions with booking status 1
  std::size_t test_decisions = 0;
  std::size_t explored = 0;
  // Whole window (train and test).
  std::size_t matches = 0;
  PerArm<std::size_t> updates_per_arm{};
  std::size_t non_converged_updates = 0;

  std::size_t total_updates() const noexcept;
};

struct ReplayReport {
  std::size_t window_index = 0;
  std::int64_t first_day = 0;  // days since epoch, after the timezone offset
  int train_days = 0;
  int test_days = 0;
  std::size_t train_requests = 0;
  std::size_t test_requests = 0;
  double oracle_revenue = 0.0;
  PerArm<double> oracle_selection_ratios{};
  std::size_t degenerate_quotes = 0;
  std::size_t ordering_violations = 0;
  std::vector<PolicyReport> policies;
};

// True when the chosen arm's realized reward may be fed back to the policy.
// FullFeedback always allows it; ReplayMatch only when the decision equals the
// logged arm (throws MissingLoggedArm if the request has none).
bool update_gate(FeedbackMode mode, const PolicyDecision& decision, const BookingRequest& request);

// Frequency of each arm. Throws EmptySequence on empty input.
PerArm<double> compute_selection_ratios(std::span<const ArmId> decisions);

struct RatioColumn {
  std::string label;
  double value = 0.0;
};

// Presentation order OwnVwaf, MarketVwaf, MlBased, RuleBased; with `merge` the
// last two collapse into a single "MlBased/RuleBased" column.
std::vector<RatioColumn> present_ratios(const PerArm<double>& ratios, bool merge);

std::int64_t day_index(std::int64_t timestamp_ms, std::int64_t tz_offset_minutes) noexcept;

struct WindowSlice {
  std::size_t index = 0;
  std::int64_t first_day = 0;
  std::span<const LogRecord> train;
  std::span<const LogRecord> test;
};

// Day-aligned windows of train_days + test_days stepping one day at a time.
// Throws InsufficientSpan when the log covers fewer days than one window.
std::vector<WindowSlice> plan_windows(std::span<const LogRecord> log, const ReplayConfig& config);

struct DecisionEvent {
  std::size_t window_index = 0;
  std::size_t policy_index = 0;
  std::size_t step = 0;
  bool in_test = false;
  const LogRecord* record = nullptr;
  PolicyDecision decision;
  bool updated = false;
};

using ReplayObserver = std::function<void(const DecisionEvent&)>;

struct WindowOptions {
  const ReplayObserver* observer = nullptr;
  // Receives the policies as they stand after the last request of the window.
  std::vector<std::unique_ptr<Policy>>* final_policies = nullptr;
};

// Throws EmptyWindow if either segment is empty, UnknownPolicy / InvalidConfig
// for bad policy configs.
ReplayReport run_window(const WindowSlice& window, const ReplayConfig& config, const WindowOptions& options = {});

// One report per window; windows are independent and run on up to
// config.threads threads.
std::vector<ReplayReport> sliding_windows(std::span<const LogRecord> log, const ReplayConfig& config,
                                          const ReplayObserver* observer = nullptr);

// Versioned warm-start document for a set of policies.
nlohmann::json snapshot_policies(std::span<const std::unique_ptr<Policy>> policies);
void restore_policies(std::span<const std::unique_ptr<Policy>> policies, const nlohmann::json& snapshot);

inline constexpr const char* kSnapshotFormat = "seclend-policy-snapshot";
inline constexpr int kSnapshotVersion = 1;

}  // namespace seclend
