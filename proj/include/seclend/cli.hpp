#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace seclend::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kGenerateFailure = 1;
inline constexpr int kIngestFailure = 2;
inline constexpr int kReplayFailure = 3;
inline constexpr int kIoFailure = 4;

struct GenerateOptions {
  std::filesystem::path config;
  std::filesystem::path out;
};

// Writes the canonical log to `out` and its manifest to `<out>.manifest.json`.
int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err);

struct ReplayOptions {
  std::filesystem::path log;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> schema;
  std::filesystem::path out_dir;
  std::optional<std::string> mode;       // full | replay-match
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  std::optional<std::string> benchmark;  // market-vwaf | fixed:<v>
  bool freeze_test = false;
  bool merge_rule_into_ml = false;
  std::optional<std::vector<std::string>> policies;
  std::optional<std::size_t> threads;
  std::optional<std::filesystem::path> warm_start;
  std::optional<std::filesystem::path> save_snapshot;
};

// Writes reports.jsonl, revenue_table.csv, ratio_table.csv and manifest.json into out_dir.
int cmd_replay(const ReplayOptions& options, std::ostream& out, std::ostream& err);

struct InspectOptions {
  std::filesystem::path log;
  std::optional<std::filesystem::path> schema;
};

int cmd_inspect(const InspectOptions& options, std::ostream& out, std::ostream& err);

inline constexpr const char* kReports = "reports.jsonl";
inline constexpr const char* kRevenueTable = "revenue_table.csv";
inline constexpr const char* kRatioTable = "ratio_table.csv";
inline constexpr const char* kManifest = "manifest.json";

}  // namespace seclend::cli
