#include "klent/acting.hpp"

#include <cmath>
#include <stdexcept>

namespace klent {

double default_lambda() { return std::exp(-0.125); }

void Hyperparameters::validate() const {
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("alpha and beta must be non-negative");
  if (alpha + beta <= 0.0) throw std::invalid_argument("alpha + beta must be positive");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0, 1]");
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in (0, 1]");
}

namespace acting {

approx::StateInput observe(const games::GameState& state) {
  return {games::state_key(state), games::encode(state), games::legal_actions(state)};
}

Evaluation evaluate(const approx::Parameters& params, const approx::StateInput& input,
                    regopt::RegWeights w) {
  Evaluation ev;
  ev.net = forward(params, input);
  ev.prior = regopt::masked_softmax(ev.net.policy_logits, input.mask);
  ev.improved = regopt::improved_policy(ev.net.q, ev.prior, w);
  ev.vhat = returns::state_value_estimate(ev.improved, ev.net.q);
  return ev;
}

}  // namespace acting
}  // namespace klent
