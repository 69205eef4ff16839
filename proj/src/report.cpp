#include "seclend/report.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>

#include <openssl/evp.h>

#include "seclend/data.hpp"
#include "seclend/error.hpp"

#ifndef SECLEND_VERSION
#define SECLEND_VERSION "0.0.0"
#endif

namespace seclend {

using nlohmann::json;

std::string artifact_version() { return std::string("seclend ") + SECLEND_VERSION; }

std::string format_day(std::int64_t days_since_epoch) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{days_since_epoch}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(std::int64_t timestamp_ms) {
  const std::int64_t day_ms = 86'400'000;
  std::int64_t day = timestamp_ms / day_ms;
  std::int64_t rem = timestamp_ms % day_ms;
  if (rem < 0) {
    rem += day_ms;
    --day;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%sT%02lld:%02lld:%02lld.%03lldZ", format_day(day).c_str(),
                static_cast<long long>(rem / 3'600'000), static_cast<long long>(rem / 60'000 % 60),
                static_cast<long long>(rem / 1000 % 60), static_cast<long long>(rem % 1000));
  return buf;
}

std::string window_label(const ReplayReport& report) {
  const std::int64_t test_first = report.first_day + report.train_days;
  const std::int64_t test_last = test_first + report.test_days - 1;
  if (test_first == test_last) return format_day(test_first);
  return format_day(test_first) + ".." + format_day(test_last);
}

json policy_record(const ReplayReport& report, const PolicyReport& p) {
  json ratios = json::object();
  json updates = json::object();
  json oracle_ratios = json::object();
  for (ArmId arm : kAllArms) {
    const std::string name(arm_name(arm));
    ratios[name] = p.selection_ratios[arm_index(arm)];
    updates[name] = p.updates_per_arm[arm_index(arm)];
    oracle_ratios[name] = report.oracle_selection_ratios[arm_index(arm)];
  }
  return {{"window", report.window_index},
          {"window_start", format_day(report.first_day)},
          {"test_label", window_label(report)},
          {"train_requests", report.train_requests},
          {"test_requests", report.test_requests},
          {"policy", p.policy},
          {"test_revenue", p.test_revenue},
          {"oracle_revenue", report.oracle_revenue},
          {"cumulative_regret", p.cumulative_regret},
          {"selection_ratios", ratios},
          {"oracle_selection_ratios", oracle_ratios},
          {"match_rate", p.match_rate},
          {"booking_hit_rate", p.booking_hit_rate},
          {"explored", p.explored},
          {"matches", p.matches},
          {"updates_per_arm", updates},
          {"non_converged_updates", p.non_converged_updates},
          {"degenerate_quotes", report.degenerate_quotes},
          {"ordering_violations", report.ordering_violations}};
}

std::string reports_to_jsonl(std::span<const ReplayReport> reports) {
  std::string out;
  for (const ReplayReport& r : reports) {
    for (const PolicyReport& p : r.policies) {
      out += policy_record(r, p).dump();
      out += '\n';
    }
  }
  return out;
}

std::string revenue_table(std::span<const ReplayReport> reports) {
  std::string out = "policy";
  for (const ReplayReport& r : reports) out += ',' + window_label(r);
  out += '\n';
  if (reports.empty()) return out;
  for (std::size_t i = 0; i < reports.front().policies.size(); ++i) {
    out += reports.front().policies[i].policy;
    for (const ReplayReport& r : reports) {
      char cell[64];
      std::snprintf(cell, sizeof(cell), ",%.2f", r.policies[i].test_revenue);
      out += cell;
    }
    out += '\n';
  }
  return out;
}

std::string ratio_table(std::span<const ReplayReport> reports, bool merge_rule_into_ml) {
  std::string out = "window,policy";
  for (const auto& col : present_ratios(PerArm<double>{}, merge_rule_into_ml)) out += ',' + col.label;
  out += '\n';
  for (const ReplayReport& r : reports) {
    for (const PolicyReport& p : r.policies) {
      out += window_label(r) + ',' + p.policy;
      for (const auto& col : present_ratios(p.selection_ratios, merge_rule_into_ml)) {
        out += ',' + format_double(col.value);
      }
      out += '\n';
    }
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

json RunManifest::to_json() const {
  json files = json::object();
  for (const auto& [name, digest] : outputs) files[name] = digest;
  return {{"command", command},           {"config_hash", config_hash}, {"seed", seed},
          {"input_digest", input_digest}, {"artifact_version", artifact_version},
          {"timestamp", timestamp},       {"outputs", files}};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace seclend
