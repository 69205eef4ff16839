#include "seclend/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "seclend/data.hpp"
#include "seclend/error.hpp"
#include "seclend/replay.hpp"
#include "seclend/report.hpp"

namespace seclend::cli {

namespace {

namespace fs = std::filesystem;

std::int64_t latest_timestamp(std::span<const LogRecord> records) {
  std::int64_t latest = 0;
  for (const auto& r : records) latest = std::max(latest, r.request.timestamp_ms);
  return latest;
}

ReplayConfig build_replay_config(const ReplayOptions& options) {
  ReplayConfig config = options.config ? ReplayConfig::load(*options.config) : ReplayConfig{};
  if (options.mode) {
    if (*options.mode == "full") {
      config.mode = FeedbackMode::FullFeedback;
    } else if (*options.mode == "replay-match") {
      config.mode = FeedbackMode::ReplayMatch;
    } else {
      throw Error(ErrorCode::InvalidConfig, "--mode must be full or replay-match");
    }
  }
  if (options.seed) config.seed = *options.seed;
  if (options.delta || options.benchmark) {
    nlohmann::json j = config.to_json();
    if (options.delta) j["delta"] = *options.delta;
    if (options.benchmark) j["benchmark"] = *options.benchmark;
    const ReplayConfig parsed = ReplayConfig::from_json(j);
    config.spoof = parsed.spoof;
  }
  if (options.freeze_test) config.freeze_test = true;
  if (options.merge_rule_into_ml) config.merge_rule_into_ml = true;
  if (options.policies) {
    config.policies.clear();
    for (const auto& name : *options.policies) config.policies.push_back(parse_policy_config(name));
  }
  if (options.threads) config.threads = *options.threads;
  if (options.warm_start) {
    std::ifstream in(*options.warm_start);
    if (!in) throw Error(ErrorCode::Io, "warm-start snapshot not found: " + options.warm_start->string());
    try {
      config.warm_start = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidSnapshot, e.what());
    }
  }
  config.validate();
  return config;
}

}  // namespace

int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (!fs::exists(options.config)) {
      err << "config not found: " << options.config.string() << '\n';
      return kGenerateFailure;
    }
    const SyntheticConfig config = SyntheticConfig::load(options.config);
    const SyntheticLog log = generate_synthetic(config);
    const std::string csv = to_canonical_csv(log.records);
    write_file(options.out, csv);

    RunManifest manifest;
    manifest.command = "generate";
    manifest.config_hash = sha256_hex(config.to_json().dump());
    manifest.seed = config.seed;
    manifest.input_digest = sha256_file(options.config);
    manifest.artifact_version = artifact_version();
    manifest.timestamp = format_timestamp(latest_timestamp(log.records));
    manifest.outputs.emplace_back(options.out.filename().string(), sha256_hex(csv));
    fs::path manifest_path = options.out;
    manifest_path += ".manifest.json";
    write_file(manifest_path, manifest.to_json().dump(2) + "\n");

    out << "wrote " << log.records.size() << " requests to " << options.out.string() << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "generate failed: " << e.what() << '\n';
    return kGenerateFailure;
  }
}

int cmd_replay(const ReplayOptions& options, std::ostream& out, std::ostream& err) {
  ReplayConfig config;
  try {
    config = build_replay_config(options);
  } catch (const std::exception& e) {
    err << "replay failed: " << e.what() << '\n';
    return kReplayFailure;
  }

  IngestResult ingested;
  std::string schema_digest = "default";
  try {
    IngestSchema schema;
    if (options.schema) {
      schema = IngestSchema::load(*options.schema);
      schema_digest = sha256_file(*options.schema);
    }
    ingested = ingest(options.log, schema);
  } catch (const std::exception& e) {
    err << "ingestion failed: " << e.what() << '\n';
    return kIngestFailure;
  }

  std::vector<ReplayReport> reports;
  nlohmann::json snapshot;
  try {
    reports = sliding_windows(ingested.records, config);
    if (options.save_snapshot) {
      const auto windows = plan_windows(ingested.records, config);
      std::vector<std::unique_ptr<Policy>> final_policies;
      WindowOptions window_options;
      window_options.final_policies = &final_policies;
      run_window(windows.back(), config, window_options);
      snapshot = snapshot_policies(final_policies);
    }
  } catch (const std::exception& e) {
    err << "replay failed: " << e.what() << '\n';
    return kReplayFailure;
  }

  try {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + options.out_dir.string() + ": " + ec.message());

    const std::string jsonl = reports_to_jsonl(reports);
    const std::string revenue = revenue_table(reports);
    const std::string ratios = ratio_table(reports, config.merge_rule_into_ml);
    write_file(options.out_dir / kReports, jsonl);
    write_file(options.out_dir / kRevenueTable, revenue);
    write_file(options.out_dir / kRatioTable, ratios);

    RunManifest manifest;
    manifest.command = "replay";
    manifest.config_hash = sha256_hex(config.to_json().dump() + "\n" + schema_digest);
    manifest.seed = config.seed;
    manifest.input_digest = sha256_file(options.log);
    manifest.artifact_version = artifact_version();
    manifest.timestamp = format_timestamp(latest_timestamp(ingested.records));
    manifest.outputs = {{kReports, sha256_hex(jsonl)},
                        {kRevenueTable, sha256_hex(revenue)},
                        {kRatioTable, sha256_hex(ratios)}};
    if (options.save_snapshot) {
      const std::string text = snapshot.dump(2) + "\n";
      write_file(*options.save_snapshot, text);
      manifest.outputs.emplace_back(options.save_snapshot->filename().string(), sha256_hex(text));
    }
    write_file(options.out_dir / kManifest, manifest.to_json().dump(2) + "\n");

    out << reports.size() << " window(s), " << config.policies.size() << " policies, "
        << ingested.records.size() << " requests\n"
        << revenue;
    return kOk;
  } catch (const std::exception& e) {
    err << "output failed: " << e.what() << '\n';
    return kIoFailure;
  }
}

int cmd_inspect(const InspectOptions& options, std::ostream& out, std::ostream& err) {
  IngestResult ingested;
  try {
    const IngestSchema schema = options.schema ? IngestSchema::load(*options.schema) : IngestSchema{};
    ingested = ingest(options.log, schema);
  } catch (const std::exception& e) {
    err << "ingestion failed: " << e.what() << '\n';
    return kIngestFailure;
  }

  const IngestSummary& s = ingested.summary;
  const auto& records = ingested.records;
  out << "rows: " << s.rows_read << '\n'
      << "accepted: " << s.rows_accepted << '\n'
      << "rejected: " << s.rows_rejected << '\n';
  for (const auto& [reason, count] : s.rejection_reasons) out << "  " << reason << ": " << count << '\n';
  out << "gc_filtered: " << s.gc_filtered << '\n'
      << "derived_market_vwaf: " << s.derived_market_vwaf << '\n'
      << "synthesized_logged_arms: " << s.synthesized_logged_arms << '\n';

  if (!records.empty()) {
    const std::int64_t first = day_index(records.front().request.timestamp_ms, 0);
    const std::int64_t last = day_index(records.back().request.timestamp_ms, 0);
    out << "date_span: " << format_day(first) << " .. " << format_day(last) << " (" << (last - first + 1)
        << " days)\n";
  }

  out << "features (min / mean / max):\n";
  for (std::size_t f = 0; f < ContextVector::kFeatureCount; ++f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    for (const auto& r : records) {
      const double v = r.context.features()[f];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    char line[160];
    if (records.empty()) {
      std::snprintf(line, sizeof(line), "  %-18s n/a\n", std::string(kFeatureNames[f]).c_str());
    } else {
      std::snprintf(line, sizeof(line), "  %-18s %.4f / %.4f / %.4f\n", std::string(kFeatureNames[f]).c_str(), lo,
                    sum / static_cast<double>(records.size()), hi);
    }
    out << line;
  }

  out << "clamps:";
  for (std::size_t f = 0; f < ContextVector::kFeatureCount; ++f) {
    out << ' ' << kFeatureNames[f] << '=' << s.clamps.per_feature[f];
  }
  out << " total=" << s.clamps.total() << '\n'
      << "bid_signal_capped: " << s.bid_signal_capped << '\n';

  // Fee bands by market VWAF: GC, the specials range split in three, then above it.
  static constexpr const char* kLabels[] = {"<1%", "1-2%", "2-5%", "5-10%", ">10%"};
  std::array<std::size_t, 5> histogram{};
  for (const auto& r : records) {
    const double fee = r.arms.price(ArmId::MarketVwaf);
    const std::size_t bucket = fee < 0.01 ? 0 : fee < 0.02 ? 1 : fee < 0.05 ? 2 : fee <= 0.10 ? 3 : 4;
    ++histogram[bucket];
  }
  out << "fee_bands (market_vwaf):";
  for (std::size_t b = 0; b < histogram.size(); ++b) out << ' ' << kLabels[b] << '=' << histogram[b];
  out << '\n';
  return kOk;
}

}  // namespace seclend::cli
