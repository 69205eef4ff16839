#pragma once

// Pricing policies: disjoint-arm LinUCB on revenue, the logistic booking-status
// backbone shared by LRUCB / LRTS / epsilon-greedy, and the four fixed-price
// baselines. Every policy is used through the Policy interface by the replay
// engine.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "seclend/domain.hpp"

namespace seclend {

using Rng = std::mt19937_64;

struct PolicyDecision {
  ArmId chosen_arm = ArmId::OwnVwaf;
  PerArm<double> estimated_reward{};
  bool explored = false;
};

// First arm (in kAllArms order) attaining the maximum score.
ArmId argmax_arm(const PerArm<double>& scores) noexcept;

// ---------------------------------------------------------------------------
// LinUCB

struct LinUcbArmState {
  Eigen::MatrixXd a;  // ridge Gram matrix, identity at start
  Eigen::VectorXd b;
  double alpha = 1.0;

  static LinUcbArmState fresh(std::size_t dim, double alpha);
};

// theta'x + alpha * sqrt(x' A^-1 x) with theta = A^-1 b. Throws SingularMatrix
// if A has lost positive definiteness.
double linucb_score(const LinUcbArmState& state, const Eigen::VectorXd& x);

PolicyDecision linucb_select(const PerArm<LinUcbArmState>& states, const Eigen::VectorXd& x);

void linucb_update(LinUcbArmState& state, const Eigen::VectorXd& x, double reward);

// ---------------------------------------------------------------------------
// Logistic booking-status backbone

// How q is read. Precision (default): sampling variance is 1/q and q starts at
// lambda. Variance: q starts at 1/lambda so the initial variance equals lambda.
// q is stored as a precision either way.
enum class QSemantics { Precision, Variance };

struct LogisticArmState {
  Eigen::VectorXd m;  // parameter means
  Eigen::VectorXd q;  // per-coordinate precisions
  double alpha = 1.0;
  double lambda = 1.0;

  static LogisticArmState fresh(std::size_t dim, double lambda, double alpha,
                                QSemantics semantics = QSemantics::Precision);
};

double sigmoid(double z) noexcept;

double logistic_predict_mean(const LogisticArmState& state, const Eigen::VectorXd& x);

enum class EstimateMode { Ucb, ThompsonSampling, Greedy };

// Booking-status estimate in [0, 1]. The UCB bonus alpha * sqrt(sum x_i^2 / q_i)
// is added in logit space. Thompson sampling draws p_i ~ N(m_i, 1/q_i) and
// needs `rng`.
double estimate_booking_status(const LogisticArmState& state, const Eigen::VectorXd& x, EstimateMode mode,
                               Rng* rng = nullptr);

// status * booking_preference(bid, price) * market_value * price.
double cb_score_arm(double status_estimate, double bid, double price, double market_value) noexcept;

struct LogisticUpdateResult {
  bool converged = true;
  int iterations = 0;
};

inline constexpr int kLogisticMaxNewtonIterations = 20;
inline constexpr double kLogisticGradientTolerance = 1e-6;

// Laplace-approximation online update with diagonal precision: m moves to the
// minimiser of 0.5 * sum q_i (w_i - m_i)^2 + log(1 + exp(-(2y-1) w'x)) by damped
// Newton, then q_i += x_i^2 p (1 - p) with p = sigmoid(m'x) at the new mean.
// When Newton does not converge the last iterate is kept.
LogisticUpdateResult logistic_update(LogisticArmState& state, const Eigen::VectorXd& x, int y);

// ---------------------------------------------------------------------------
// Epsilon-greedy

enum class EpsilonDecay { Constant, InverseT };

struct EpsilonSchedule {
  double epsilon0 = 0.1;
  EpsilonDecay decay = EpsilonDecay::Constant;
  double floor = 0.0;

  // Effective epsilon at 1-based step t, always within [floor, epsilon0].
  double at(std::size_t step) const noexcept;
  void validate() const;
};

PolicyDecision eg_select(PolicyDecision greedy, double epsilon, Rng& rng);

// ---------------------------------------------------------------------------
// Fixed-price baselines

PolicyDecision baseline_select(ArmId policy_arm, const ArmQuotes& arms) noexcept;

// ---------------------------------------------------------------------------
// Common interface

struct DecisionInput {
  const Eigen::VectorXd& context;
  const BookingRequest& request;
  const ArmQuotes& arms;
  std::size_t step = 1;  // 1-based position within the current window
};

struct Feedback {
  int booking_status = 0;
  double revenue = 0.0;
};

enum class PolicyKind { LinUcb, LrUcb, LrTs, EpsilonGreedy, Baseline };

struct PolicyConfig {
  std::string name;
  PolicyKind kind = PolicyKind::Baseline;
  double alpha = 1.0;
  PerArm<std::optional<double>> arm_alpha{};
  double lambda = 1.0;
  QSemantics q_semantics = QSemantics::Precision;
  EpsilonSchedule epsilon{};
  ArmId baseline_arm = ArmId::OwnVwaf;
};

// Canonical names: LinUCB, LRUCB, LRTS, EG, OwnVwaf, MlBased, MarketVwaf, RuleBased.
const std::vector<std::string>& default_policy_names();

// Default configuration for a canonical name; throws UnknownPolicy otherwise.
PolicyConfig default_policy_config(const std::string& name);

// Accepts either a bare name or an object {"name": ..., "kind": ..., params...}.
PolicyConfig parse_policy_config(const nlohmann::json& j);
nlohmann::json policy_config_to_json(const PolicyConfig& config);

class Policy {
 public:
  explicit Policy(std::string name) : name_(std::move(name)) {}
  virtual ~Policy() = default;

  const std::string& name() const noexcept { return name_; }
  virtual PolicyKind kind() const noexcept = 0;

  // Read-only with respect to the learned state; randomness comes from `rng`.
  virtual PolicyDecision select(const DecisionInput& input, Rng& rng) const = 0;
  virtual void update(ArmId arm, const DecisionInput& input, const Feedback& feedback) = 0;

  virtual nlohmann::json snapshot() const = 0;
  virtual void restore(const nlohmann::json& snapshot) = 0;

  // Updates that failed to converge (logistic policies only).
  virtual std::size_t non_converged_updates() const noexcept { return 0; }

 private:
  std::string name_;
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, std::size_t dim);

class LinUcbPolicy final : public Policy {
 public:
  LinUcbPolicy(std::string name, std::size_t dim, double alpha, const PerArm<std::optional<double>>& arm_alpha);

  PolicyKind kind() const noexcept override { return PolicyKind::LinUcb; }
  PolicyDecision select(const DecisionInput& input, Rng& rng) const override;
  void update(ArmId arm, const DecisionInput& input, const Feedback& feedback) override;
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& snapshot) override;

  const PerArm<LinUcbArmState>& arms() const noexcept { return arms_; }

 private:
  PerArm<LinUcbArmState> arms_;
};

class LogisticPolicy final : public Policy {
 public:
  LogisticPolicy(std::string name, PolicyKind kind, std::size_t dim, const PolicyConfig& config);

  PolicyKind kind() const noexcept override { return kind_; }
  PolicyDecision select(const DecisionInput& input, Rng& rng) const override;
  void update(ArmId arm, const DecisionInput& input, const Feedback& feedback) override;
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& snapshot) override;
  std::size_t non_converged_updates() const noexcept override { return non_converged_; }

  const PerArm<LogisticArmState>& arms() const noexcept { return arms_; }

 private:
  PolicyKind kind_;
  EpsilonSchedule epsilon_;
  PerArm<LogisticArmState> arms_;
  std::size_t non_converged_ = 0;
};

class BaselinePolicy final : public Policy {
 public:
  BaselinePolicy(std::string name, ArmId arm) : Policy(std::move(name)), arm_(arm) {}

  PolicyKind kind() const noexcept override { return PolicyKind::Baseline; }
  PolicyDecision select(const DecisionInput& input, Rng& rng) const override;
  void update(ArmId, const DecisionInput&, const Feedback&) override {}
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& snapshot) override;

  ArmId arm() const noexcept { return arm_; }

 private:
  ArmId arm_;
};

std::string_view policy_kind_name(PolicyKind kind) noexcept;

}  // namespace seclend
