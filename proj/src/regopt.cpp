#include "klent/regopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace klent::regopt {

namespace {

constexpr double kPriorFloor = 1e-12;

void require_same_mask(const LegalMask& a, const LegalMask& b) {
  if (a.bits != b.bits) throw std::invalid_argument("legal masks differ");
}

}  // namespace

void ActionDistribution::validate(double tol) const {
  if (probs.size() != mask.bits.size()) throw std::invalid_argument("distribution size mismatch");
  double sum = 0.0;
  for (size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] < 0.0) throw std::invalid_argument("negative probability");
    if (!mask.bits[a] && probs[a] != 0.0) throw std::invalid_argument("mass on illegal action");
    sum += probs[a];
  }
  if (std::abs(sum - 1.0) > tol) throw std::invalid_argument("probabilities do not sum to 1");
}

ActionDistribution uniform_over(const LegalMask& mask) {
  ActionDistribution d;
  d.mask = mask;
  d.probs.assign(mask.bits.size(), 0.0);
  if (mask.legal.empty()) throw std::invalid_argument("uniform_over: no legal actions");
  const double p = 1.0 / static_cast<double>(mask.legal.size());
  for (int a : mask.legal) d.probs[static_cast<size_t>(a)] = p;
  return d;
}

ActionDistribution masked_softmax(const std::vector<double>& logits, const LegalMask& mask) {
  if (logits.size() != mask.bits.size()) throw std::invalid_argument("logit size mismatch");
  if (mask.legal.empty()) throw std::invalid_argument("masked_softmax: no legal actions");
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int a : mask.legal) max_logit = std::max(max_logit, logits[static_cast<size_t>(a)]);
  ActionDistribution d;
  d.mask = mask;
  d.probs.assign(logits.size(), 0.0);
  double z = 0.0;
  for (int a : mask.legal) {
    const double e = std::exp(logits[static_cast<size_t>(a)] - max_logit);
    d.probs[static_cast<size_t>(a)] = e;
    z += e;
  }
  for (int a : mask.legal) d.probs[static_cast<size_t>(a)] /= z;
  return d;
}

ActionDistribution improved_policy(const QValues& q, const ActionDistribution& prior, RegWeights w) {
  require_same_mask(q.mask, prior.mask);
  if (w.alpha < 0.0 || w.beta < 0.0) throw std::invalid_argument("regularization weights must be non-negative");
  const double denom = w.alpha + w.beta;
  if (denom <= 0.0) throw std::invalid_argument("alpha + beta must be positive");

  // floor and renormalize the prior so log stays finite
  double floored_sum = 0.0;
  std::vector<double> floored(prior.probs.size(), 0.0);
  for (int a : prior.mask.legal) {
    floored[static_cast<size_t>(a)] = std::max(prior.probs[static_cast<size_t>(a)], kPriorFloor);
    floored_sum += floored[static_cast<size_t>(a)];
  }

  std::vector<double> exponent(prior.probs.size(), 0.0);
  for (int a : prior.mask.legal) {
    const double log_prior = std::log(floored[static_cast<size_t>(a)] / floored_sum);
    exponent[static_cast<size_t>(a)] = (q.q[static_cast<size_t>(a)] + w.beta * log_prior) / denom;
  }
  return masked_softmax(exponent, prior.mask);
}

double entropy(const ActionDistribution& p) {
  double h = 0.0;
  for (int a : p.mask.legal) {
    const double v = p.probs[static_cast<size_t>(a)];
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double kl_divergence(const ActionDistribution& p, const ActionDistribution& q) {
  require_same_mask(p.mask, q.mask);
  double kl = 0.0;
  for (int a : p.mask.legal) {
    const double pv = p.probs[static_cast<size_t>(a)];
    if (pv == 0.0) continue;
    const double qv = q.probs[static_cast<size_t>(a)];
    if (qv <= 0.0) throw std::invalid_argument("kl_divergence: q has zero mass where p > 0");
    kl += pv * std::log(pv / qv);
  }
  return kl;
}

double objective(const ActionDistribution& candidate, const QValues& q,
                 const ActionDistribution& prior, RegWeights w) {
  require_same_mask(candidate.mask, q.mask);
  double expected_q = 0.0;
  for (int a : candidate.mask.legal) {
    expected_q += candidate.probs[static_cast<size_t>(a)] * q.q[static_cast<size_t>(a)];
  }
  return expected_q - w.beta * kl_divergence(candidate, prior) + w.alpha * entropy(candidate);
}

}  // namespace klent::regopt
