#include <cmath>

#include <Eigen/Cholesky>

#include "seclend/error.hpp"
#include "seclend/policies.hpp"

namespace seclend {

ArmId argmax_arm(const PerArm<double>& scores) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kArmCount; ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return kAllArms[best];
}

LinUcbArmState LinUcbArmState::fresh(std::size_t dim, double alpha) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d), alpha};
}

double linucb_score(const LinUcbArmState& state, const Eigen::VectorXd& x) {
  // d is at most six here, so a fresh Cholesky per call is cheaper than
  // keeping an inverse in sync.
  const Eigen::LLT<Eigen::MatrixXd> llt(state.a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, "LinUCB ridge matrix is not positive definite");
  }
  const Eigen::VectorXd theta = llt.solve(state.b);
  const Eigen::VectorXd a_inv_x = llt.solve(x);
  const double width = std::sqrt(std::max(0.0, x.dot(a_inv_x)));
  return theta.dot(x) + state.alpha * width;
}

PolicyDecision linucb_select(const PerArm<LinUcbArmState>& states, const Eigen::VectorXd& x) {
  PolicyDecision decision;
  for (ArmId arm : kAllArms) {
    decision.estimated_reward[arm_index(arm)] = linucb_score(states[arm_index(arm)], x);
  }
  decision.chosen_arm = argmax_arm(decision.estimated_reward);
  return decision;
}

void linucb_update(LinUcbArmState& state, const Eigen::VectorXd& x, double reward) {
  state.a.noalias() += x * x.transpose();
  state.b += reward * x;
}

}  // namespace seclend
