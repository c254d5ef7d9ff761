#pragma once

#include <vector>

#include "klent/games.hpp"

namespace klent::regopt {

using games::LegalMask;

// Probability vector over the full action space; zero on illegal actions.
struct ActionDistribution {
  std::vector<double> probs;
  LegalMask mask;

  void validate(double tol = 1e-9) const;  // throws std::invalid_argument
};

// Estimated action values; entries at illegal actions are never read.
struct QValues {
  std::vector<double> q;
  LegalMask mask;
};

struct RegWeights {
  double alpha = 0.03;  // entropy weight
  double beta = 0.1;    // KL weight
};

ActionDistribution uniform_over(const LegalMask& mask);

// Softmax of `logits` restricted to legal actions (max-subtracted); illegal
// entries are exactly zero.
ActionDistribution masked_softmax(const std::vector<double>& logits, const LegalMask& mask);

// Closed-form maximizer of  E_p[q] - beta*KL(p||prior) + alpha*H(p)  over the
// legal simplex:  p(a) proportional to exp((q(a) + beta*log prior(a)) / (alpha+beta)).
// Legal prior probabilities are floored at 1e-12 and renormalized before the log.
ActionDistribution improved_policy(const QValues& q, const ActionDistribution& prior, RegWeights w);

// -sum p log p over legal actions, nats; 0*log 0 = 0.
double entropy(const ActionDistribution& p);

// sum p log(p/q) over legal actions; p = 0 terms contribute 0.
double kl_divergence(const ActionDistribution& p, const ActionDistribution& q);

// E_{A~candidate}[q(A)] - beta*KL(candidate||prior) + alpha*H(candidate)
double objective(const ActionDistribution& candidate, const QValues& q,
                 const ActionDistribution& prior, RegWeights w);

}  // namespace klent::regopt
