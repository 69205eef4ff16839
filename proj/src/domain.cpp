#include "seclend/domain.hpp"

#include "seclend/error.hpp"

namespace seclend {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NegativeBid: return "NegativeBid";
    case ErrorCode::NonPositiveQuantity: return "NonPositiveQuantity";
    case ErrorCode::NegativeMarketValue: return "NegativeMarketValue";
    case ErrorCode::MissingArmPrice: return "MissingArmPrice";
    case ErrorCode::InvalidSpoofConfig: return "InvalidSpoofConfig";
    case ErrorCode::MissingFixedValue: return "MissingFixedValue";
    case ErrorCode::NegativeRegretStep: return "NegativeRegretStep";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::MissingLoggedArm: return "MissingLoggedArm";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::InsufficientSpan: return "InsufficientSpan";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::EmptyPortfolio: return "EmptyPortfolio";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownPolicy: return "UnknownPolicy";
    case ErrorCode::InvalidSnapshot: return "InvalidSnapshot";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string_view arm_name(ArmId arm) noexcept {
  switch (arm) {
    case ArmId::OwnVwaf: return "OwnVwaf";
    case ArmId::MlBased: return "MlBased";
    case ArmId::MarketVwaf: return "MarketVwaf";
    case ArmId::RuleBased: return "RuleBased";
  }
  return "?";
}

std::optional<ArmId> parse_arm(std::string_view name) noexcept {
  for (ArmId arm : kAllArms) {
    if (arm_name(arm) == name) return arm;
  }
  return std::nullopt;
}

bool ArmQuotes::is_aggressiveness_ordered() const noexcept {
  for (std::size_t i = 1; i < kArmCount; ++i) {
    if (prices_[i - 1] > prices_[i]) return false;
  }
  return true;
}

Eigen::VectorXd ContextVector::to_vector(bool with_bias) const {
  Eigen::VectorXd x(context_dimension(with_bias));
  const auto f = features();
  for (std::size_t i = 0; i < f.size(); ++i) x[static_cast<Eigen::Index>(i)] = f[i];
  if (with_bias) x[static_cast<Eigen::Index>(kFeatureCount)] = 1.0;
  return x;
}

void SpoofConfig::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw Error(ErrorCode::InvalidSpoofConfig, "delta must lie in (0, 1], got " + std::to_string(delta));
  }
}

BookingRequest validate_request(BookingRequest request) {
  if (!(request.bid >= 0.0)) {
    throw Error(ErrorCode::NegativeBid, "bid = " + std::to_string(request.bid) + " in request '" +
                                            request.request_id + "'");
  }
  if (request.quantity <= 0) {
    throw Error(ErrorCode::NonPositiveQuantity, "quantity = " + std::to_string(request.quantity) +
                                                    " in request '" + request.request_id + "'");
  }
  if (!(request.market_value >= 0.0)) {
    throw Error(ErrorCode::NegativeMarketValue, "market_value = " +
                                                    std::to_string(request.market_value) +
                                                    " in request '" + request.request_id + "'");
  }
  return request;
}

}  // namespace seclend
