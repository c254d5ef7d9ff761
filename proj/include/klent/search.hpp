#pragma once

#include <vector>

#include "klent/acting.hpp"

namespace klent::search {

struct SearchConfig {
  int simulations = 0;    // 0 = greedy policy head, no tree
  double c_puct = 1.25;
};

struct SearchResult {
  int action = 0;
  std::vector<int> visit_counts;    // per action; sums to cfg.simulations
  std::vector<double> root_values;  // mean backed-up value per action, 0 if unvisited
};

// Test-time PUCT over the learned policy and action-value heads. Node priors
// are the improved policy; leaf values are the policy-weighted mean of the
// action values (clipped to [-1, 1]); terminal edges back up the true
// outcome with negamax sign flips. Most-visited action wins, ties going to
// the lowest index.
SearchResult search(const games::GameState& state, const approx::Parameters& params,
                    regopt::RegWeights w, const SearchConfig& cfg);

}  // namespace klent::search
