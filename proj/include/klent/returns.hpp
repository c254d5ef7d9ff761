#pragma once

#include <string>
#include <vector>

#include "klent/regopt.hpp"

namespace klent::returns {

// One ply of a finished self-play episode. All scalar quantities are in the
// frame of the player who moved at this step.
struct TrajectoryStep {
  std::string state_key;
  std::vector<double> features;
  games::LegalMask mask;
  int action = 0;
  double reward = 0.0;  // nonzero only on the final step
  regopt::ActionDistribution target_policy;  // pi' at this state
  double vhat = 0.0;
  int mover = 0;
};

struct ReturnTargets {
  std::vector<double> g_lambda;  // one per step, in that step's mover frame
};

// sum_a policy(a) * q(a) over legal actions.
double state_value_estimate(const regopt::ActionDistribution& policy, const regopt::QValues& q);

// Lambda-return targets for a complete episode under the negamax convention:
// in the frame of the mover at t, the reward at step u contributes
// (-1)^(u-t) * gamma^(u-t) * R_u and the bootstrap value v_{t+n} contributes
// (-1)^n * gamma^n * vhat_{t+n}, with the terminal state's value defined as 0.
// Computed by an O(T) backward recursion.
ReturnTargets lambda_returns(const std::vector<TrajectoryStep>& traj, double lambda, double gamma);

}  // namespace klent::returns
