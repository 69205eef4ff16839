#include "seclend/policies.hpp"

#include <algorithm>

#include "seclend/error.hpp"

namespace seclend {

using nlohmann::json;

double EpsilonSchedule::at(std::size_t step) const noexcept {
  double eps = epsilon0;
  if (decay == EpsilonDecay::InverseT) eps = epsilon0 / static_cast<double>(std::max<std::size_t>(step, 1));
  return std::clamp(eps, floor, epsilon0);
}

void EpsilonSchedule::validate() const {
  if (!(epsilon0 > 0.0 && epsilon0 <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "epsilon0 must lie in (0, 1]");
  }
  if (!(floor >= 0.0 && floor < 1.0) || floor > epsilon0) {
    throw Error(ErrorCode::InvalidConfig, "epsilon floor must lie in [0, epsilon0]");
  }
}

PolicyDecision eg_select(PolicyDecision greedy, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, kArmCount - 1);
    greedy.chosen_arm = kAllArms[pick(rng)];
    greedy.explored = true;
  } else {
    greedy.explored = false;
  }
  return greedy;
}

PolicyDecision baseline_select(ArmId policy_arm, const ArmQuotes& arms) noexcept {
  PolicyDecision decision;
  decision.chosen_arm = policy_arm;
  decision.estimated_reward[arm_index(policy_arm)] = arms.price(policy_arm);
  return decision;
}

// ---------------------------------------------------------------------------

std::string_view policy_kind_name(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::LinUcb: return "LinUCB";
    case PolicyKind::LrUcb: return "LRUCB";
    case PolicyKind::LrTs: return "LRTS";
    case PolicyKind::EpsilonGreedy: return "EG";
    case PolicyKind::Baseline: return "Baseline";
  }
  return "?";
}

namespace {

std::optional<PolicyKind> parse_kind(std::string_view s) {
  for (PolicyKind k : {PolicyKind::LinUcb, PolicyKind::LrUcb, PolicyKind::LrTs, PolicyKind::EpsilonGreedy,
                       PolicyKind::Baseline}) {
    if (policy_kind_name(k) == s) return k;
  }
  return std::nullopt;
}

ArmId arm_from_json(const json& j, std::string_view what) {
  const auto arm = parse_arm(j.get<std::string>());
  if (!arm) throw Error(ErrorCode::InvalidConfig, std::string(what) + ": unknown arm '" + j.get<std::string>() + "'");
  return *arm;
}

json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j, std::size_t dim) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != dim) throw Error(ErrorCode::InvalidSnapshot, "vector dimension mismatch");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::size_t snapshot_dim(const json& j, PolicyKind kind, const std::string& name, Eigen::Index expected) {
  if (j.at("kind").get<std::string>() != policy_kind_name(kind)) {
    throw Error(ErrorCode::InvalidSnapshot, "snapshot kind does not match policy '" + name + "'");
  }
  if (j.at("arms").size() != kArmCount) throw Error(ErrorCode::InvalidSnapshot, "snapshot needs four arms");
  const auto dim = j.at("dim").get<std::size_t>();
  if (dim != static_cast<std::size_t>(expected)) {
    throw Error(ErrorCode::InvalidSnapshot, "snapshot dimension " + std::to_string(dim) + " does not match policy '" +
                                                name + "'");
  }
  return dim;
}

}  // namespace

const std::vector<std::string>& default_policy_names() {
  static const std::vector<std::string> names = {"MlBased", "RuleBased", "LinUCB",     "LRUCB",
                                                 "EG",      "LRTS",      "MarketVwaf", "OwnVwaf"};
  return names;
}

PolicyConfig default_policy_config(const std::string& name) {
  PolicyConfig config;
  config.name = name;
  if (name == "LinUCB") {
    config.kind = PolicyKind::LinUcb;
  } else if (name == "LRUCB") {
    config.kind = PolicyKind::LrUcb;
  } else if (name == "LRTS") {
    config.kind = PolicyKind::LrTs;
  } else if (name == "EG") {
    config.kind = PolicyKind::EpsilonGreedy;
  } else if (const auto arm = parse_arm(name)) {
    config.kind = PolicyKind::Baseline;
    config.baseline_arm = *arm;
  } else {
    throw Error(ErrorCode::UnknownPolicy, "unknown policy '" + name + "'");
  }
  return config;
}

PolicyConfig parse_policy_config(const json& j) {
  try {
    if (j.is_string()) return default_policy_config(j.get<std::string>());
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "policy entry must be a name or an object");

    const auto name = j.at("name").get<std::string>();
    PolicyConfig config;
    if (j.contains("kind")) {
      const auto kind_name = j.at("kind").get<std::string>();
      const auto kind = parse_kind(kind_name);
      if (!kind) throw Error(ErrorCode::UnknownPolicy, "unknown policy kind '" + kind_name + "' for '" + name + "'");
      config.name = name;
      config.kind = *kind;
    } else {
      config = default_policy_config(name);
    }

    config.alpha = j.value("alpha", config.alpha);
    config.lambda = j.value("lambda", config.lambda);
    if (!(config.alpha >= 0.0)) throw Error(ErrorCode::InvalidConfig, name + ": alpha must be >= 0");
    if (!(config.lambda > 0.0)) throw Error(ErrorCode::InvalidConfig, name + ": lambda must be > 0");
    if (j.contains("arm_alpha")) {
      for (const auto& [arm_key, value] : j.at("arm_alpha").items()) {
        const auto arm = parse_arm(arm_key);
        if (!arm) throw Error(ErrorCode::InvalidConfig, name + ": unknown arm '" + arm_key + "'");
        config.arm_alpha[arm_index(*arm)] = value.get<double>();
      }
    }
    if (j.contains("q_semantics")) {
      const auto s = j.at("q_semantics").get<std::string>();
      if (s == "precision") {
        config.q_semantics = QSemantics::Precision;
      } else if (s == "variance") {
        config.q_semantics = QSemantics::Variance;
      } else {
        throw Error(ErrorCode::InvalidConfig, name + ": q_semantics must be precision or variance");
      }
    }
    if (j.contains("epsilon")) {
      const auto& e = j.at("epsilon");
      config.epsilon.epsilon0 = e.value("epsilon0", config.epsilon.epsilon0);
      config.epsilon.floor = e.value("floor", config.epsilon.floor);
      const auto decay = e.value("decay", std::string("constant"));
      if (decay == "constant") {
        config.epsilon.decay = EpsilonDecay::Constant;
      } else if (decay == "inverse_t") {
        config.epsilon.decay = EpsilonDecay::InverseT;
      } else {
        throw Error(ErrorCode::InvalidConfig, name + ": epsilon decay must be constant or inverse_t");
      }
      config.epsilon.validate();
    }
    if (j.contains("arm")) config.baseline_arm = arm_from_json(j.at("arm"), name);
    return config;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("policy config: ") + e.what());
  }
}

json policy_config_to_json(const PolicyConfig& config) {
  json j;
  j["name"] = config.name;
  j["kind"] = std::string(policy_kind_name(config.kind));
  switch (config.kind) {
    case PolicyKind::Baseline:
      j["arm"] = std::string(arm_name(config.baseline_arm));
      break;
    case PolicyKind::EpsilonGreedy:
      j["epsilon"] = {{"epsilon0", config.epsilon.epsilon0},
                      {"decay", config.epsilon.decay == EpsilonDecay::Constant ? "constant" : "inverse_t"},
                      {"floor", config.epsilon.floor}};
      [[fallthrough]];
    case PolicyKind::LrUcb:
    case PolicyKind::LrTs:
      j["lambda"] = config.lambda;
      j["q_semantics"] = config.q_semantics == QSemantics::Precision ? "precision" : "variance";
      [[fallthrough]];
    case PolicyKind::LinUcb: {
      j["alpha"] = config.alpha;
      json overrides = json::object();
      for (ArmId arm : kAllArms) {
        if (const auto& a = config.arm_alpha[arm_index(arm)]) overrides[std::string(arm_name(arm))] = *a;
      }
      if (!overrides.empty()) j["arm_alpha"] = overrides;
      break;
    }
  }
  return j;
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, std::size_t dim) {
  switch (config.kind) {
    case PolicyKind::LinUcb:
      return std::make_unique<LinUcbPolicy>(config.name, dim, config.alpha, config.arm_alpha);
    case PolicyKind::LrUcb:
    case PolicyKind::LrTs:
    case PolicyKind::EpsilonGreedy:
      return std::make_unique<LogisticPolicy>(config.name, config.kind, dim, config);
    case PolicyKind::Baseline:
      return std::make_unique<BaselinePolicy>(config.name, config.baseline_arm);
  }
  throw Error(ErrorCode::UnknownPolicy, config.name);
}

// ---------------------------------------------------------------------------
// LinUcbPolicy

LinUcbPolicy::LinUcbPolicy(std::string name, std::size_t dim, double alpha,
                           const PerArm<std::optional<double>>& arm_alpha)
    : Policy(std::move(name)) {
  for (ArmId arm : kAllArms) {
    arms_[arm_index(arm)] = LinUcbArmState::fresh(dim, arm_alpha[arm_index(arm)].value_or(alpha));
  }
}

PolicyDecision LinUcbPolicy::select(const DecisionInput& input, Rng&) const {
  return linucb_select(arms_, input.context);
}

void LinUcbPolicy::update(ArmId arm, const DecisionInput& input, const Feedback& feedback) {
  linucb_update(arms_[arm_index(arm)], input.context, feedback.revenue);
}

json LinUcbPolicy::snapshot() const {
  json arms = json::array();
  for (const auto& s : arms_) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < s.a.rows(); ++r) rows.push_back(vector_to_json(s.a.row(r).transpose()));
    arms.push_back({{"A", rows}, {"b", vector_to_json(s.b)}, {"alpha", s.alpha}});
  }
  return {{"name", name()}, {"kind", policy_kind_name(kind())}, {"dim", arms_[0].b.size()}, {"arms", arms}};
}

void LinUcbPolicy::restore(const json& j) {
  try {
    const std::size_t dim = snapshot_dim(j, kind(), name(), arms_[0].b.size());
    PerArm<LinUcbArmState> restored;
    for (std::size_t i = 0; i < kArmCount; ++i) {
      const auto& a = j.at("arms")[i];
      const auto& rows = a.at("A");
      if (rows.size() != dim) throw Error(ErrorCode::InvalidSnapshot, "LinUCB matrix dimension mismatch");
      auto& s = restored[i];
      s.a.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
      for (std::size_t r = 0; r < dim; ++r) s.a.row(static_cast<Eigen::Index>(r)) = vector_from_json(rows[r], dim);
      s.b = vector_from_json(a.at("b"), dim);
      s.alpha = a.at("alpha").get<double>();
    }
    arms_ = std::move(restored);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSnapshot, e.what());
  }
}

// ---------------------------------------------------------------------------
// LogisticPolicy

LogisticPolicy::LogisticPolicy(std::string name, PolicyKind kind, std::size_t dim, const PolicyConfig& config)
    : Policy(std::move(name)), kind_(kind), epsilon_(config.epsilon) {
  for (ArmId arm : kAllArms) {
    arms_[arm_index(arm)] = LogisticArmState::fresh(dim, config.lambda,
                                                    config.arm_alpha[arm_index(arm)].value_or(config.alpha),
                                                    config.q_semantics);
  }
}

PolicyDecision LogisticPolicy::select(const DecisionInput& input, Rng& rng) const {
  const EstimateMode mode = kind_ == PolicyKind::LrUcb  ? EstimateMode::Ucb
                            : kind_ == PolicyKind::LrTs ? EstimateMode::ThompsonSampling
                                                        : EstimateMode::Greedy;
  PolicyDecision decision;
  for (ArmId arm : kAllArms) {
    const double status = estimate_booking_status(arms_[arm_index(arm)], input.context, mode, &rng);
    decision.estimated_reward[arm_index(arm)] =
        cb_score_arm(status, input.request.bid, input.arms.price(arm), input.request.market_value);
  }
  decision.chosen_arm = argmax_arm(decision.estimated_reward);
  if (kind_ == PolicyKind::EpsilonGreedy) return eg_select(decision, epsilon_.at(input.step), rng);
  return decision;
}

void LogisticPolicy::update(ArmId arm, const DecisionInput& input, const Feedback& feedback) {
  if (!logistic_update(arms_[arm_index(arm)], input.context, feedback.booking_status).converged) {
    ++non_converged_;
  }
}

json LogisticPolicy::snapshot() const {
  json arms = json::array();
  for (const auto& s : arms_) {
    arms.push_back({{"m", vector_to_json(s.m)}, {"q", vector_to_json(s.q)}, {"alpha", s.alpha}, {"lambda", s.lambda}});
  }
  return {{"name", name()}, {"kind", policy_kind_name(kind())}, {"dim", arms_[0].m.size()}, {"arms", arms}};
}

void LogisticPolicy::restore(const json& j) {
  try {
    const std::size_t dim = snapshot_dim(j, kind(), name(), arms_[0].m.size());
    PerArm<LogisticArmState> restored;
    for (std::size_t i = 0; i < kArmCount; ++i) {
      const auto& a = j.at("arms")[i];
      restored[i] = {vector_from_json(a.at("m"), dim), vector_from_json(a.at("q"), dim), a.at("alpha").get<double>(),
                     a.at("lambda").get<double>()};
      if ((restored[i].q.array() <= 0.0).any()) throw Error(ErrorCode::InvalidSnapshot, "precision must be positive");
    }
    arms_ = std::move(restored);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSnapshot, e.what());
  }
}

// ---------------------------------------------------------------------------
// BaselinePolicy

PolicyDecision BaselinePolicy::select(const DecisionInput& input, Rng&) const {
  return baseline_select(arm_, input.arms);
}

json BaselinePolicy::snapshot() const {
  return {{"name", name()}, {"kind", policy_kind_name(kind())}, {"arm", arm_name(arm_)}};
}

void BaselinePolicy::restore(const json& j) {
  try {
    if (j.at("kind").get<std::string>() != policy_kind_name(kind()) ||
        j.at("arm").get<std::string>() != arm_name(arm_)) {
      throw Error(ErrorCode::InvalidSnapshot, "snapshot does not match baseline '" + name() + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSnapshot, e.what());
  }
}

}  // namespace seclend
