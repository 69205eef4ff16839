#include <algorithm>
#include <cmath>

#include "seclend/policies.hpp"
#include "seclend/reward.hpp"

namespace seclend {

namespace {

// log(1 + exp(u)) without overflow.
double softplus(double u) noexcept { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

struct Objective {
  const Eigen::VectorXd& m;
  const Eigen::VectorXd& q;
  const Eigen::VectorXd& x;
  double sign;  // +1 for a booking, -1 otherwise

  double value(const Eigen::VectorXd& w) const {
    return 0.5 * (q.array() * (w - m).array().square()).sum() + softplus(-sign * w.dot(x));
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const {
    return (q.array() * (w - m).array()).matrix() - sign * sigmoid(-sign * w.dot(x)) * x;
  }

  // (diag(q) + c x x')^-1 g by Sherman-Morrison, c = p (1 - p).
  Eigen::VectorXd newton_direction(const Eigen::VectorXd& w, const Eigen::VectorXd& g) const {
    const double p = sigmoid(w.dot(x));
    const double c = p * (1.0 - p);
    const Eigen::VectorXd d_inv_g = g.array() / q.array();
    const Eigen::VectorXd d_inv_x = x.array() / q.array();
    const double denom = 1.0 + c * x.dot(d_inv_x);
    return d_inv_g - (c * x.dot(d_inv_g) / denom) * d_inv_x;
  }
};

}  // namespace

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LogisticArmState LogisticArmState::fresh(std::size_t dim, double lambda, double alpha, QSemantics semantics) {
  const auto d = static_cast<Eigen::Index>(dim);
  const double q0 = semantics == QSemantics::Precision ? lambda : 1.0 / lambda;
  return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Constant(d, q0), alpha, lambda};
}

double logistic_predict_mean(const LogisticArmState& state, const Eigen::VectorXd& x) {
  return sigmoid(state.m.dot(x));
}

double estimate_booking_status(const LogisticArmState& state, const Eigen::VectorXd& x, EstimateMode mode,
                               Rng* rng) {
  switch (mode) {
    case EstimateMode::Greedy:
      return sigmoid(state.m.dot(x));
    case EstimateMode::Ucb: {
      const double width = std::sqrt((x.array().square() / state.q.array()).sum());
      return std::clamp(sigmoid(state.m.dot(x) + state.alpha * width), 0.0, 1.0);
    }
    case EstimateMode::ThompsonSampling: {
      std::normal_distribution<double> normal(0.0, 1.0);
      double z = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double draw = state.m[i] + normal(*rng) / std::sqrt(state.q[i]);
        z += draw * x[i];
      }
      return sigmoid(z);
    }
  }
  return 0.0;
}

double cb_score_arm(double status_estimate, double bid, double price, double market_value) noexcept {
  return status_estimate * booking_preference(bid, price) * market_value * price;
}

LogisticUpdateResult logistic_update(LogisticArmState& state, const Eigen::VectorXd& x, int y) {
  const Objective objective{state.m, state.q, x, y != 0 ? 1.0 : -1.0};
  Eigen::VectorXd w = state.m;
  LogisticUpdateResult result{false, 0};

  for (int iter = 0; iter <= kLogisticMaxNewtonIterations; ++iter) {
    const Eigen::VectorXd g = objective.gradient(w);
    if (g.norm() < kLogisticGradientTolerance) {
      result = {true, iter};
      break;
    }
    if (iter == kLogisticMaxNewtonIterations) {
      result = {false, iter};
      break;
    }
    const Eigen::VectorXd step = objective.newton_direction(w, g);
    const double f0 = objective.value(w);
    const double slope = g.dot(step);
    // Armijo backtracking.
    double t = 1.0;
    Eigen::VectorXd candidate = w - step;
    while (objective.value(candidate) > f0 - 1e-4 * t * slope && t > 1e-10) {
      t *= 0.5;
      candidate = w - t * step;
    }
    w = candidate;
  }

  state.m = w;
  const double p = sigmoid(state.m.dot(x));
  state.q.array() += x.array().square() * (p * (1.0 - p));
  return result;
}

}  // namespace seclend
