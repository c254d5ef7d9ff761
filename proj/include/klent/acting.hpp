#pragma once

#include "klent/approx.hpp"
#include "klent/returns.hpp"

namespace klent {

// lambda = exp(-1/8), the default return-mixing constant.
double default_lambda();

// The regularization and return-target knobs shared by training, search and
// measurement.
struct Hyperparameters {
  double alpha = 0.03;
  double beta = 0.1;
  double lambda = 0.8824969025845955;  // exp(-1/8)
  double gamma = 1.0;

  regopt::RegWeights reg() const { return {alpha, beta}; }
  void validate() const;  // throws std::invalid_argument
};

namespace acting {

approx::StateInput observe(const games::GameState& state);

// Everything action selection needs at one state: the network heads, the
// masked prior, the closed-form improved policy and its expected value.
struct Evaluation {
  approx::NetOutput net;
  regopt::ActionDistribution prior;
  regopt::ActionDistribution improved;
  double vhat = 0.0;
};

Evaluation evaluate(const approx::Parameters& params, const approx::StateInput& input,
                    regopt::RegWeights w);

}  // namespace acting
}  // namespace klent
