#include "seclend/replay.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <mutex>

#include "seclend/data.hpp"
#include "seclend/error.hpp"
#include "seclend/reward.hpp"

namespace seclend {

using nlohmann::json;

namespace {

constexpr std::int64_t kDayMs = 86'400'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Rng policy_rng(std::uint64_t seed, std::size_t window, std::size_t policy) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(window), static_cast<std::uint32_t>(policy)};
  return Rng(seq);
}

SpoofConfig parse_benchmark(const std::string& spec, double delta) {
  SpoofConfig spoof;
  spoof.delta = delta;
  if (spec == "market-vwaf") {
    spoof.benchmark_mode = BenchmarkMode::MarketVwaf;
  } else if (spec.rfind("fixed:", 0) == 0) {
    spoof.benchmark_mode = BenchmarkMode::FixedValue;
    try {
      std::size_t used = 0;
      const std::string value = spec.substr(6);
      spoof.fixed_value = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "cannot parse benchmark '" + spec + "'");
    }
  } else if (spec == "fixed") {
    spoof.benchmark_mode = BenchmarkMode::FixedValue;
  } else {
    throw Error(ErrorCode::InvalidConfig, "benchmark must be market-vwaf or fixed:<value>, got '" + spec + "'");
  }
  return spoof;
}

std::string benchmark_text(const SpoofConfig& spoof) {
  if (spoof.benchmark_mode == BenchmarkMode::MarketVwaf) return "market-vwaf";
  return spoof.fixed_value ? "fixed:" + format_double(*spoof.fixed_value) : "fixed";
}

}  // namespace

std::string_view feedback_mode_name(FeedbackMode mode) noexcept {
  return mode == FeedbackMode::FullFeedback ? "full" : "replay-match";
}

std::vector<PolicyConfig> ReplayConfig::default_policy_configs() {
  std::vector<PolicyConfig> out;
  for (const auto& name : default_policy_names()) out.push_back(default_policy_config(name));
  return out;
}

void ReplayConfig::validate() const {
  if (train_days < 1 || test_days < 1) throw Error(ErrorCode::InvalidConfig, "train_days and test_days must be >= 1");
  spoof.validate();
  if (spoof.benchmark_mode == BenchmarkMode::FixedValue && !spoof.fixed_value) {
    throw Error(ErrorCode::MissingFixedValue, "benchmark mode is fixed but no value is configured");
  }
  if (policies.empty()) throw Error(ErrorCode::InvalidConfig, "no policies configured");
  if (threads == 0) throw Error(ErrorCode::InvalidConfig, "threads must be >= 1");
  for (std::size_t i = 0; i < policies.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (policies[i].name == policies[j].name) {
        throw Error(ErrorCode::InvalidConfig, "duplicate policy name '" + policies[i].name + "'");
      }
    }
  }
}

ReplayConfig ReplayConfig::from_json(const json& j) {
  ReplayConfig c;
  try {
    const auto mode = j.value("mode", std::string("full"));
    if (mode == "full") {
      c.mode = FeedbackMode::FullFeedback;
    } else if (mode == "replay-match") {
      c.mode = FeedbackMode::ReplayMatch;
    } else {
      throw Error(ErrorCode::InvalidConfig, "mode must be full or replay-match");
    }
    c.train_days = j.value("train_days", c.train_days);
    c.test_days = j.value("test_days", c.test_days);
    c.spoof = parse_benchmark(j.value("benchmark", std::string("market-vwaf")), j.value("delta", c.spoof.delta));
    c.seed = j.value("seed", c.seed);
    if (j.contains("policies")) {
      c.policies.clear();
      for (const auto& p : j.at("policies")) c.policies.push_back(parse_policy_config(p));
    }
    c.freeze_test = j.value("freeze_test", c.freeze_test);
    c.include_bias = j.value("include_bias", c.include_bias);
    c.tz_offset_minutes = j.value("tz_offset_minutes", c.tz_offset_minutes);
    c.threads = j.value("threads", c.threads);
    c.merge_rule_into_ml = j.value("merge_rule_into_ml", c.merge_rule_into_ml);
    if (j.contains("warm_start")) c.warm_start = j.at("warm_start");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("replay config: ") + e.what());
  }
  c.validate();
  return c;
}

ReplayConfig ReplayConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "config not found: " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "replay config " + path.string() + ": " + e.what());
  }
}

json ReplayConfig::to_json() const {
  json policy_list = json::array();
  for (const auto& p : policies) policy_list.push_back(policy_config_to_json(p));
  json j = {{"mode", feedback_mode_name(mode)},
            {"train_days", train_days},
            {"test_days", test_days},
            {"delta", spoof.delta},
            {"benchmark", benchmark_text(spoof)},
            {"seed", seed},
            {"policies", policy_list},
            {"freeze_test", freeze_test},
            {"include_bias", include_bias},
            {"tz_offset_minutes", tz_offset_minutes},
            {"merge_rule_into_ml", merge_rule_into_ml}};
  if (warm_start) j["warm_start"] = *warm_start;
  return j;
}

std::size_t PolicyReport::total_updates() const noexcept {
  std::size_t n = 0;
  for (std::size_t u : updates_per_arm) n += u;
  return n;
}

bool update_gate(FeedbackMode mode, const PolicyDecision& decision, const BookingRequest& request) {
  if (mode == FeedbackMode::FullFeedback) return true;
  if (!request.logged_arm) {
    throw Error(ErrorCode::MissingLoggedArm, "request '" + request.request_id + "' has no logged arm");
  }
  return decision.chosen_arm == *request.logged_arm;
}

PerArm<double> compute_selection_ratios(std::span<const ArmId> decisions) {
  if (decisions.empty()) throw Error(ErrorCode::EmptySequence, "no decisions to compute selection ratios from");
  PerArm<std::size_t> counts{};
  for (ArmId arm : decisions) ++counts[arm_index(arm)];
  PerArm<double> ratios{};
  const auto n = static_cast<double>(decisions.size());
  for (std::size_t i = 0; i < kArmCount; ++i) ratios[i] = static_cast<double>(counts[i]) / n;
  return ratios;
}

std::vector<RatioColumn> present_ratios(const PerArm<double>& ratios, bool merge) {
  const auto at = [&](ArmId arm) { return ratios[arm_index(arm)]; };
  std::vector<RatioColumn> out = {{"OwnVwaf", at(ArmId::OwnVwaf)}, {"MarketVwaf", at(ArmId::MarketVwaf)}};
  if (merge) {
    out.push_back({"MlBased/RuleBased", at(ArmId::MlBased) + at(ArmId::RuleBased)});
  } else {
    out.push_back({"MlBased", at(ArmId::MlBased)});
    out.push_back({"RuleBased", at(ArmId::RuleBased)});
  }
  return out;
}

std::int64_t day_index(std::int64_t timestamp_ms, std::int64_t tz_offset_minutes) noexcept {
  return floor_div(timestamp_ms + tz_offset_minutes * 60'000, kDayMs);
}

std::vector<WindowSlice> plan_windows(std::span<const LogRecord> log, const ReplayConfig& config) {
  const std::int64_t span_needed = config.train_days + config.test_days;
  if (log.empty()) throw Error(ErrorCode::InsufficientSpan, "log is empty");
  const std::int64_t first = day_index(log.front().request.timestamp_ms, config.tz_offset_minutes);
  const std::int64_t last = day_index(log.back().request.timestamp_ms, config.tz_offset_minutes);
  const std::int64_t span = last - first + 1;
  if (span < span_needed) {
    throw Error(ErrorCode::InsufficientSpan, "log spans " + std::to_string(span) + " days, a window needs " +
                                                 std::to_string(span_needed));
  }

  // Index of the first record on or after a given day.
  auto lower = [&](std::int64_t day) {
    return static_cast<std::size_t>(std::partition_point(log.begin(), log.end(), [&](const LogRecord& r) {
                                      return day_index(r.request.timestamp_ms, config.tz_offset_minutes) < day;
                                    }) -
                                    log.begin());
  };

  std::vector<WindowSlice> windows;
  for (std::int64_t start = first; start + span_needed - 1 <= last; ++start) {
    const std::size_t a = lower(start);
    const std::size_t b = lower(start + config.train_days);
    const std::size_t c = lower(start + span_needed);
    windows.push_back({windows.size(), start, log.subspan(a, b - a), log.subspan(b, c - b)});
  }
  return windows;
}

json snapshot_policies(std::span<const std::unique_ptr<Policy>> policies) {
  json list = json::array();
  for (const auto& p : policies) list.push_back(p->snapshot());
  return {{"format", kSnapshotFormat}, {"version", kSnapshotVersion}, {"policies", list}};
}

void restore_policies(std::span<const std::unique_ptr<Policy>> policies, const json& snapshot) {
  try {
    if (snapshot.at("format").get<std::string>() != kSnapshotFormat ||
        snapshot.at("version").get<int>() != kSnapshotVersion) {
      throw Error(ErrorCode::InvalidSnapshot, "unsupported snapshot format or version");
    }
    for (const auto& entry : snapshot.at("policies")) {
      const auto name = entry.at("name").get<std::string>();
      for (const auto& p : policies) {
        if (p->name() == name) p->restore(entry);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSnapshot, e.what());
  }
}

ReplayReport run_window(const WindowSlice& window, const ReplayConfig& config, const WindowOptions& options) {
  config.validate();
  if (window.train.empty()) throw Error(ErrorCode::EmptyWindow, "train segment has no requests");
  if (window.test.empty()) throw Error(ErrorCode::EmptyWindow, "test segment has no requests");

  const std::size_t dim = context_dimension(config.include_bias);
  std::vector<std::unique_ptr<Policy>> policies;
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < config.policies.size(); ++i) {
    policies.push_back(make_policy(config.policies[i], dim));
    rngs.push_back(policy_rng(config.seed, window.index, i));
  }
  if (config.warm_start) restore_policies(policies, *config.warm_start);

  const std::size_t n_policies = policies.size();
  std::vector<RegretLedger> ledgers(n_policies);
  std::vector<PerArm<std::size_t>> selections(n_policies);
  std::vector<std::size_t> test_matches(n_policies, 0);
  std::vector<std::size_t> hits(n_policies, 0);
  std::vector<double> revenue(n_policies, 0.0);

  ReplayReport report;
  report.window_index = window.index;
  report.first_day = window.first_day;
  report.train_days = config.train_days;
  report.test_days = config.test_days;
  report.train_requests = window.train.size();
  report.test_requests = window.test.size();
  report.policies.resize(n_policies);
  for (std::size_t i = 0; i < n_policies; ++i) report.policies[i].policy = policies[i]->name();

  PerArm<std::size_t> oracle_counts{};
  VwafBook vwaf;
  std::size_t step = 0;

  auto process = [&](const LogRecord& record, bool in_test) {
    ++step;
    const BookingRequest& req = record.request;
    vwaf[req.security_id] = record.arms.price(ArmId::MarketVwaf);
    const double benchmark = resolve_benchmark(req.security_id, config.spoof, vwaf);
    const Eigen::VectorXd x = record.context.to_vector(config.include_bias);
    const DecisionInput input{x, req, record.arms, step};

    if (!record.arms.is_aggressiveness_ordered()) ++report.ordering_violations;
    OracleChoice oracle;
    if (in_test) {
      oracle = oracle_arm(req, record.arms, config.spoof, benchmark);
      report.oracle_revenue += oracle.revenue;
      ++oracle_counts[arm_index(oracle.arm)];
      for (ArmId arm : kAllArms) {
        if (is_degenerate_quote(req.bid, record.arms.price(arm))) ++report.degenerate_quotes;
      }
    }

    for (std::size_t i = 0; i < n_policies; ++i) {
      const PolicyDecision decision = policies[i]->select(input, rngs[i]);
      const double price = record.arms.price(decision.chosen_arm);
      const RewardComponents reward = evaluate_reward(req, price, config.spoof, benchmark);
      PolicyReport& pr = report.policies[i];

      const bool matched = req.logged_arm && *req.logged_arm == decision.chosen_arm;
      if (matched) ++pr.matches;
      if (in_test) {
        revenue[i] += reward.expected_revenue;
        ledgers[i].push({oracle.arm, decision.chosen_arm, oracle.revenue, reward.expected_revenue});
        ++selections[i][arm_index(decision.chosen_arm)];
        if (matched) ++test_matches[i];
        if (reward.booking_status == 1) ++hits[i];
        if (decision.explored) ++pr.explored;
      }

      bool updated = false;
      if (update_gate(config.mode, decision, req) && !(in_test && config.freeze_test)) {
        policies[i]->update(decision.chosen_arm, input, {reward.booking_status, reward.expected_revenue});
        ++pr.updates_per_arm[arm_index(decision.chosen_arm)];
        updated = true;
      }
      if (options.observer) {
        (*options.observer)(DecisionEvent{window.index, i, step, in_test, &record, decision, updated});
      }
    }
  };

  for (const LogRecord& r : window.train) process(r, false);
  for (const LogRecord& r : window.test) process(r, true);

  const auto n_test = static_cast<double>(window.test.size());
  for (std::size_t a = 0; a < kArmCount; ++a) {
    report.oracle_selection_ratios[a] = static_cast<double>(oracle_counts[a]) / n_test;
  }
  for (std::size_t i = 0; i < n_policies; ++i) {
    PolicyReport& pr = report.policies[i];
    pr.test_revenue = revenue[i];
    pr.cumulative_regret = ledgers[i].cumulative_regret();
    pr.test_decisions = window.test.size();
    for (std::size_t a = 0; a < kArmCount; ++a) {
      pr.selection_ratios[a] = static_cast<double>(selections[i][a]) / n_test;
    }
    pr.match_rate = static_cast<double>(test_matches[i]) / n_test;
    pr.booking_hit_rate = static_cast<double>(hits[i]) / n_test;
    pr.non_converged_updates = policies[i]->non_converged_updates();
  }
  if (options.final_policies) *options.final_policies = std::move(policies);
  return report;
}

std::vector<ReplayReport> sliding_windows(std::span<const LogRecord> log, const ReplayConfig& config,
                                          const ReplayObserver* observer) {
  config.validate();
  const auto windows = plan_windows(log, config);
  std::vector<ReplayReport> reports(windows.size());

  std::mutex observer_mutex;
  ReplayObserver serialized;
  if (observer) {
    serialized = [&](const DecisionEvent& e) {
      const std::lock_guard lock(observer_mutex);
      (*observer)(e);
    };
  }
  WindowOptions options;
  options.observer = observer ? &serialized : nullptr;

  const std::size_t workers = std::min(config.threads, windows.size());
  if (workers <= 1) {
    for (std::size_t w = 0; w < windows.size(); ++w) reports[w] = run_window(windows[w], config, options);
    return reports;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t t = 0; t < workers; ++t) {
    jobs.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t w = t; w < windows.size(); w += workers) reports[w] = run_window(windows[w], config, options);
    }));
  }
  for (auto& job : jobs) job.get();
  return reports;
}

}  // namespace seclend
