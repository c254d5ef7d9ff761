#include "klent/returns.hpp"

#include <stdexcept>

namespace klent::returns {

double state_value_estimate(const regopt::ActionDistribution& policy, const regopt::QValues& q) {
  if (policy.mask.bits != q.mask.bits) throw std::invalid_argument("legal masks differ");
  double v = 0.0;
  for (int a : policy.mask.legal) {
    v += policy.probs[static_cast<size_t>(a)] * q.q[static_cast<size_t>(a)];
  }
  return v;
}

ReturnTargets lambda_returns(const std::vector<TrajectoryStep>& traj, double lambda, double gamma) {
  if (traj.empty()) throw std::invalid_argument("lambda_returns: empty trajectory");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0, 1]");
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in (0, 1]");

  const size_t len = traj.size();
  ReturnTargets out;
  out.g_lambda.assign(len, 0.0);

  // G_t = R_t - gamma * ((1-lambda) * vhat_{t+1} + lambda * G_{t+1}); the
  // minus sign moves the tail from the opponent's frame into the mover's.
  out.g_lambda[len - 1] = traj[len - 1].reward;
  for (size_t i = len - 1; i-- > 0;) {
    const double tail = (1.0 - lambda) * traj[i + 1].vhat + lambda * out.g_lambda[i + 1];
    out.g_lambda[i] = traj[i].reward - gamma * tail;
  }
  return out;
}

}  // namespace klent::returns
