#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seclend/data.hpp"
#include "seclend/error.hpp"

namespace seclend {

namespace {

constexpr std::array<const char*, 4> kArmColumns = {"own_vwaf", "ml_rate", "market_vwaf", "rule_rate"};
constexpr std::array<const char*, 4> kFeatureColumns = {"utilization", "market_share", "alt_supply",
                                                        "return_signal"};

std::vector<std::string> split_row(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

std::optional<bool> parse_flag(std::string_view text) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "accept" || text == "accepted") return true;
  if (text == "0" || text == "false" || text == "reject" || text == "rejected") return false;
  return std::nullopt;
}

// Reject-or-throw signal carried out of the row parser.
struct RowRejected {
  ErrorCode code;
  std::string reason;  // short key for the summary
  std::string detail;
};

struct ParsedRow {
  std::size_t line = 0;
  BookingRequest request;
  PerArm<std::optional<double>> arms;
  std::array<std::optional<double>, 4> features;  // utilization .. return_signal
  std::optional<double> bid_signal_scaled;
  std::optional<double> offered_rate;
  MarketSnapshot raw;
  std::array<bool, 3> raw_available{};  // utilization, market_share, alt_supply derivable
};

class ColumnMap {
 public:
  ColumnMap(const std::vector<std::string>& header, const IngestSchema& schema) : schema_(schema) {
    for (std::size_t i = 0; i < header.size(); ++i) index_.emplace(std::string(trim(header[i])), i);
  }

  std::optional<std::size_t> find(const std::string& logical) const {
    const auto it = index_.find(schema_.column(logical));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(const std::string& logical) const {
    if (const auto i = find(logical)) return *i;
    throw Error(ErrorCode::MissingColumn, "column '" + schema_.column(logical) + "' (" + logical + ") not found");
  }

 private:
  const IngestSchema& schema_;
  std::unordered_map<std::string, std::size_t> index_;
};

double fee_scale(FeeUnits units) {
  switch (units) {
    case FeeUnits::Fraction: return 1.0;
    case FeeUnits::BasisPoints: return 1e-4;
    case FeeUnits::Percent: return 1e-2;
  }
  return 1.0;
}

}  // namespace

std::string IngestSchema::column(const std::string& logical) const {
  const auto it = columns.find(logical);
  return it == columns.end() ? logical : it->second;
}

IngestSchema IngestSchema::from_json(const nlohmann::json& j) {
  IngestSchema s;
  try {
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d == "\\t" || d == "tab") {
        s.delimiter = '\t';
      } else if (d.size() == 1) {
        s.delimiter = d[0];
      } else {
        throw Error(ErrorCode::InvalidConfig, "delimiter must be a single character");
      }
    }
    if (j.contains("columns")) s.columns = j.at("columns").get<std::map<std::string, std::string>>();
    s.strict = j.value("strict", s.strict);
    s.gc_filter = j.value("gc_filter", s.gc_filter);
    s.gc_threshold = j.value("gc_threshold", s.gc_threshold);
    s.ewma_half_life = j.value("ewma_half_life", s.ewma_half_life);
    const auto units = j.value("fee_units", std::string("fraction"));
    if (units == "fraction") {
      s.fee_units = FeeUnits::Fraction;
    } else if (units == "bp") {
      s.fee_units = FeeUnits::BasisPoints;
    } else if (units == "percent") {
      s.fee_units = FeeUnits::Percent;
    } else {
      throw Error(ErrorCode::InvalidConfig, "fee_units must be fraction, bp or percent");
    }
    if (!(s.ewma_half_life > 0.0)) throw Error(ErrorCode::InvalidConfig, "ewma_half_life must be positive");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("schema config: ") + e.what());
  }
  return s;
}

IngestSchema IngestSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open schema config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "schema config " + path.string() + ": " + e.what());
  }
}

ArmId nearest_arm(const ArmQuotes& arms, double offered_rate) noexcept {
  ArmId best = kAllArms[0];
  double best_distance = std::abs(arms.price(best) - offered_rate);
  for (ArmId arm : kAllArms) {
    const double distance = std::abs(arms.price(arm) - offered_rate);
    if (distance < best_distance || (distance == best_distance && arms.price(arm) < arms.price(best))) {
      best = arm;
      best_distance = distance;
    }
  }
  return best;
}

IngestResult ingest(const std::filesystem::path& path, const IngestSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open log " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ingest_text(buffer.str(), schema);
}

IngestResult ingest_text(const std::string& text, const IngestSchema& schema) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::EmptyFile, "log has no header");
  if (lines.size() == 1) throw Error(ErrorCode::EmptyFile, "log has a header but no rows");

  const auto header = split_row(lines[0], schema.delimiter);
  const ColumnMap cols(header, schema);

  const std::size_t c_timestamp = cols.require("timestamp");
  const std::size_t c_security = cols.require("security_id");
  const std::size_t c_bid = cols.require("bid");
  const std::size_t c_quantity = cols.require("quantity");
  const std::size_t c_mv = cols.require("market_value");
  const auto c_request_id = cols.find("request_id");
  const auto c_offered = cols.find("offered_rate");
  const auto c_accept = cols.find("accept_flag");
  const auto c_logged_arm = cols.find("logged_arm");
  const auto c_bid_signal = cols.find("bid_signal_scaled");

  PerArm<std::optional<std::size_t>> c_arms;
  for (std::size_t a = 0; a < kArmCount; ++a) {
    if (a == arm_index(ArmId::MarketVwaf)) {
      c_arms[a] = cols.find(kArmColumns[a]);
      if (!c_arms[a] && !(c_offered && c_accept)) cols.require(kArmColumns[a]);
    } else {
      c_arms[a] = cols.require(kArmColumns[a]);
    }
  }

  const auto c_demand = cols.find("demand");
  const auto c_supply = cols.find("supply");
  const auto c_lender_supply = cols.find("lender_supply");
  const auto c_market_supply = cols.find("market_supply");
  const auto c_alternative = cols.find("alternative_supply");
  std::array<std::optional<std::size_t>, 4> c_features;
  const std::array<bool, 3> derivable = {c_demand && c_supply, c_lender_supply && c_market_supply,
                                         c_alternative && c_market_supply};
  for (std::size_t f = 0; f < kFeatureColumns.size(); ++f) {
    c_features[f] = cols.find(kFeatureColumns[f]);
    if (!c_features[f] && (f == 3 || !derivable[f])) cols.require(kFeatureColumns[f]);
  }

  IngestResult result;
  IngestSummary& summary = result.summary;
  const double scale = fee_scale(schema.fee_units);

  auto reject = [&](std::size_t line, const RowRejected& r) {
    if (schema.strict) throw Error(r.code, "line " + std::to_string(line) + ": " + r.detail);
    ++summary.rows_rejected;
    ++summary.rejection_reasons[r.reason];
  };

  std::vector<ParsedRow> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (trim(lines[li]).empty()) continue;
    ++summary.rows_read;
    try {
      const auto fields = split_row(lines[li], schema.delimiter);
      if (fields.size() != header.size()) {
        throw RowRejected{ErrorCode::ParseError, "field_count",
                          "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(fields.size())};
      }
      auto cell = [&](std::size_t c) { return trim(fields[c]); };
      auto number = [&](std::size_t c, const char* name) {
        const auto v = parse_number<double>(cell(c));
        if (!v || !std::isfinite(*v)) {
          throw RowRejected{ErrorCode::ParseError, "parse_error",
                            std::string("column '") + name + "': cannot parse '" + std::string(cell(c)) + "'"};
        }
        return *v;
      };
      auto optional_number = [&](const std::optional<std::size_t>& c, const char* name) -> std::optional<double> {
        if (!c || cell(*c).empty()) return std::nullopt;
        return number(*c, name);
      };

      ParsedRow row;
      row.line = line_no;
      BookingRequest& req = row.request;
      const auto ts = parse_number<std::int64_t>(cell(c_timestamp));
      if (!ts) {
        throw RowRejected{ErrorCode::ParseError, "parse_error",
                          "column 'timestamp': cannot parse '" + std::string(cell(c_timestamp)) + "'"};
      }
      req.timestamp_ms = *ts;
      req.security_id = std::string(cell(c_security));
      if (req.security_id.empty()) throw RowRejected{ErrorCode::ParseError, "parse_error", "empty security_id"};
      req.request_id = c_request_id && !cell(*c_request_id).empty() ? std::string(cell(*c_request_id))
                                                                    : "L" + std::to_string(line_no);
      req.bid = number(c_bid, "bid") * scale;
      const auto qty = parse_number<std::int64_t>(cell(c_quantity));
      if (!qty) {
        throw RowRejected{ErrorCode::ParseError, "parse_error",
                          "column 'quantity': cannot parse '" + std::string(cell(c_quantity)) + "'"};
      }
      req.quantity = *qty;
      req.market_value = number(c_mv, "market_value");

      for (std::size_t a = 0; a < kArmCount; ++a) {
        if (c_arms[a] && !cell(*c_arms[a]).empty()) {
          row.arms[a] = number(*c_arms[a], kArmColumns[a]) * scale;
          if (*row.arms[a] < 0.0) {
            throw RowRejected{ErrorCode::MissingArmPrice, "negative_arm_price",
                              std::string("column '") + kArmColumns[a] + "' is negative"};
          }
        } else if (a != arm_index(ArmId::MarketVwaf) || !(c_offered && c_accept)) {
          throw RowRejected{ErrorCode::MissingArmPrice, "missing_arm_price",
                            std::string("no value for '") + kArmColumns[a] + "'"};
        }
      }
      for (std::size_t f = 0; f < kFeatureColumns.size(); ++f) {
        row.features[f] = optional_number(c_features[f], kFeatureColumns[f]);
      }
      row.bid_signal_scaled = optional_number(c_bid_signal, "bid_signal_scaled");
      row.offered_rate = optional_number(c_offered, "offered_rate");
      if (row.offered_rate) *row.offered_rate *= scale;

      if (c_accept && !cell(*c_accept).empty()) {
        const auto flag = parse_flag(cell(*c_accept));
        if (!flag) {
          throw RowRejected{ErrorCode::ParseError, "parse_error",
                            "column 'accept_flag': cannot parse '" + std::string(cell(*c_accept)) + "'"};
        }
        req.logged_status = *flag;
      }
      if (c_logged_arm && !cell(*c_logged_arm).empty()) {
        const auto arm = parse_arm(cell(*c_logged_arm));
        if (!arm) {
          throw RowRejected{ErrorCode::ParseError, "parse_error",
                            "column 'logged_arm': unknown arm '" + std::string(cell(*c_logged_arm)) + "'"};
        }
        req.logged_arm = *arm;
      }

      auto raw = [&](const std::optional<std::size_t>& c, const char* name) {
        return c ? optional_number(c, name).value_or(0.0) : 0.0;
      };
      row.raw.demand = raw(c_demand, "demand");
      row.raw.supply = raw(c_supply, "supply");
      row.raw.lender_supply = raw(c_lender_supply, "lender_supply");
      row.raw.market_supply = raw(c_market_supply, "market_supply");
      row.raw.alternative_supply = raw(c_alternative, "alternative_supply");
      row.raw_available = derivable;

      try {
        validate_request(req);
      } catch (const Error& e) {
        throw RowRejected{e.code(), std::string(error_code_name(e.code())), e.what()};
      }
      rows.push_back(std::move(row));
    } catch (const RowRejected& r) {
      reject(line_no, r);
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const ParsedRow& a, const ParsedRow& b) {
    return a.request.timestamp_ms < b.request.timestamp_ms;
  });

  // Chronological pass: running VWAF of booked loans and per-security bid EWMA.
  std::unordered_map<std::string, std::vector<Loan>> booked;
  BidEwma ewma(schema.ewma_half_life);
  double market_demand = 0.0;
  double market_supply = 0.0;
  for (ParsedRow& row : rows) {
    BookingRequest& req = row.request;
    try {
      auto& market_vwaf = row.arms[arm_index(ArmId::MarketVwaf)];
      if (!market_vwaf) {
        const auto it = booked.find(req.security_id);
        if (it == booked.end() || it->second.empty()) {
          throw RowRejected{ErrorCode::MissingArmPrice, "underivable_market_vwaf",
                            "no booked loans to derive market_vwaf for '" + req.security_id + "'"};
        }
        market_vwaf = compute_vwaf(it->second);
        ++summary.derived_market_vwaf;
      }
      if (c_offered && c_accept && row.offered_rate && req.logged_status && *req.logged_status &&
          req.market_value > 0.0) {
        booked[req.security_id].push_back({*row.offered_rate, req.market_value});
      }

      if (schema.gc_filter && *market_vwaf < schema.gc_threshold) {
        ++summary.gc_filtered;
        continue;
      }

      // Market-wide utilization so far, for securities without supply of their own.
      market_demand += row.raw.demand;
      market_supply += row.raw.supply;
      if (market_supply > 0.0) row.raw.market_utilization = std::min(1.0, market_demand / market_supply);

      ContextVector ctx;
      const double prior_mean = ewma.current(req.security_id, req.bid);
      const ContextVector derived = derive_features(req, row.raw, prior_mean);
      double* targets[] = {&ctx.utilization, &ctx.market_share, &ctx.alt_supply, &ctx.return_signal};
      const double derived_values[] = {derived.utilization, derived.market_share, derived.alt_supply, 0.0};
      for (std::size_t f = 0; f < 4; ++f) {
        if (row.features[f]) {
          *targets[f] = *row.features[f];
        } else if (f < 3 && row.raw_available[f]) {
          *targets[f] = derived_values[f];
        } else {
          throw RowRejected{ErrorCode::MissingColumn, "missing_feature",
                            std::string("no value for '") + kFeatureColumns[f] + "'"};
        }
      }
      if (row.bid_signal_scaled) {
        ctx.bid_signal_scaled = *row.bid_signal_scaled;
      } else {
        ctx.bid_signal_scaled = derived.bid_signal_scaled;
        if (prior_mean > 0.0 && req.bid / prior_mean > 1.0) ++summary.bid_signal_capped;
      }
      ewma.observe(req.security_id, req.bid);

      LogRecord rec;
      rec.context = clamp_context(ctx, summary.clamps);
      for (ArmId arm : kAllArms) rec.arms[arm] = *row.arms[arm_index(arm)];
      rec.offered_rate = row.offered_rate;
      if (!req.logged_arm && row.offered_rate) {
        req.logged_arm = nearest_arm(rec.arms, *row.offered_rate);
        ++summary.synthesized_logged_arms;
      }
      rec.request = std::move(req);
      result.records.push_back(std::move(rec));
    } catch (const RowRejected& r) {
      reject(row.line, r);
    }
  }
  summary.rows_accepted = result.records.size();
  return result;
}

// ---------------------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string to_canonical_csv(std::span<const LogRecord> records) {
  std::string out =
      "request_id,timestamp,security_id,bid,quantity,market_value,own_vwaf,ml_rate,market_vwaf,rule_rate,"
      "utilization,market_share,alt_supply,return_signal,bid_signal_scaled,offered_rate,accept_flag,logged_arm\n";
  for (const LogRecord& r : records) {
    const BookingRequest& q = r.request;
    out += q.request_id;
    out += ',' + std::to_string(q.timestamp_ms);
    out += ',' + q.security_id;
    out += ',' + format_double(q.bid);
    out += ',' + std::to_string(q.quantity);
    out += ',' + format_double(q.market_value);
    for (ArmId arm : kAllArms) out += ',' + format_double(r.arms.price(arm));
    for (double f : r.context.features()) out += ',' + format_double(f);
    out += ',';
    if (r.offered_rate) out += format_double(*r.offered_rate);
    out += ',';
    if (q.logged_status) out += *q.logged_status ? "1" : "0";
    out += ',';
    if (q.logged_arm) out += arm_name(*q.logged_arm);
    out += '\n';
  }
  return out;
}

void write_canonical(const std::filesystem::path& path, std::span<const LogRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_canonical_csv(records);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace seclend
