#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seclend/replay.hpp"

namespace seclend {

// YYYY-MM-DD for a day count since 1970-01-01.
std::string format_day(std::int64_t days_since_epoch);
// YYYY-MM-DDTHH:MM:SS.mmmZ
std::string format_timestamp(std::int64_t timestamp_ms);

// "first..last" day of the window's test segment, e.g. "2023-05-05".
std::string window_label(const ReplayReport& report);

// One JSON object per (window, policy), newline separated, exact values.
std::string reports_to_jsonl(std::span<const ReplayReport> reports);
nlohmann::json policy_record(const ReplayReport& report, const PolicyReport& policy);

// Rows = policies, columns = windows; revenue rounded to cents.
std::string revenue_table(std::span<const ReplayReport> reports);

// Rows = (window, policy); arm ratios written exactly so each row sums to 1.
std::string ratio_table(std::span<const ReplayReport> reports, bool merge_rule_into_ml);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string input_digest;
  std::string artifact_version;
  // Derived from the data (latest request time), so identical inputs give identical manifests.
  std::string timestamp;
  std::vector<std::pair<std::string, std::string>> outputs;  // file name, sha256

  nlohmann::json to_json() const;
};

std::string artifact_version();

// Writes `bytes` to `path`, throwing Io on failure.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace seclend
