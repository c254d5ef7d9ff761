#include "klent/search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace klent::search {

namespace {

struct Node {
  games::GameState state;
  regopt::ActionDistribution prior;
  double leaf_value = 0.0;  // policy-weighted clipped q, mover frame
  int visits = 1;           // own evaluation plus one per selection pass
  std::vector<int> n;
  std::vector<double> w;
  std::vector<int> child;          // node index, -1 unexplored
  std::vector<uint8_t> edge_done;  // edge leads to a terminal state
  std::vector<double> edge_reward;
};

struct Tree {
  const approx::Parameters& params;
  regopt::RegWeights reg;
  double c_puct;
  std::vector<Node> nodes;

  int expand(games::GameState state) {
    const auto input = acting::observe(state);
    const auto ev = acting::evaluate(params, input, reg);
    Node nd;
    nd.state = std::move(state);
    nd.prior = ev.improved;
    double v = 0.0;
    for (int a : input.mask.legal) {
      const double q = std::clamp(ev.net.q.q[static_cast<size_t>(a)], -1.0, 1.0);
      v += ev.improved.probs[static_cast<size_t>(a)] * q;
    }
    nd.leaf_value = v;
    const size_t actions = input.mask.bits.size();
    nd.n.assign(actions, 0);
    nd.w.assign(actions, 0.0);
    nd.child.assign(actions, -1);
    nd.edge_done.assign(actions, 0);
    nd.edge_reward.assign(actions, 0.0);
    nodes.push_back(std::move(nd));
    return static_cast<int>(nodes.size()) - 1;
  }

  int select(const Node& nd) const {
    const double sqrt_total = std::sqrt(static_cast<double>(nd.visits));
    int best = -1;
    double best_score = 0.0;
    for (int a : nd.prior.mask.legal) {
      const size_t ai = static_cast<size_t>(a);
      const double q_bar = nd.n[ai] > 0 ? nd.w[ai] / nd.n[ai] : 0.0;
      const double score = q_bar + c_puct * nd.prior.probs[ai] * sqrt_total / (1.0 + nd.n[ai]);
      if (best < 0 || score > best_score) {
        best = a;
        best_score = score;
      }
    }
    return best;
  }

  // One simulation from `idx`; returns the backed-up value in the frame of
  // the player to move at that node.
  double simulate(int idx) {
    const int a = select(nodes[idx]);
    const size_t ai = static_cast<size_t>(a);
    double value;
    if (nodes[idx].edge_done[ai]) {
      value = nodes[idx].edge_reward[ai];
    } else if (nodes[idx].child[ai] < 0) {
      auto [next, reward] = games::step(nodes[idx].state, a);
      if (next.terminal) {
        nodes[idx].edge_done[ai] = 1;
        nodes[idx].edge_reward[ai] = reward;
        value = reward;
      } else {
        const int child = expand(std::move(next));
        nodes[idx].child[ai] = child;
        value = -nodes[child].leaf_value;
      }
    } else {
      value = -simulate(nodes[idx].child[ai]);
    }
    nodes[idx].n[ai] += 1;
    nodes[idx].w[ai] += value;
    nodes[idx].visits += 1;
    return value;
  }
};

}  // namespace

SearchResult search(const games::GameState& state, const approx::Parameters& params,
                    regopt::RegWeights w, const SearchConfig& cfg) {
  if (state.terminal) throw std::logic_error("search called on a terminal state");
  if (cfg.simulations < 0) throw std::invalid_argument("simulations must be >= 0");

  SearchResult result;
  result.visit_counts.assign(static_cast<size_t>(state.spec.action_count()), 0);
  result.root_values.assign(static_cast<size_t>(state.spec.action_count()), 0.0);
  if (cfg.simulations == 0) {
    result.action = approx::greedy_action(params, acting::observe(state));
    return result;
  }

  Tree tree{params, w, cfg.c_puct, {}};
  const int root = tree.expand(state);
  for (int i = 0; i < cfg.simulations; ++i) tree.simulate(root);

  const Node& nd = tree.nodes[static_cast<size_t>(root)];
  int best = nd.prior.mask.legal.at(0);
  for (int a : nd.prior.mask.legal) {
    const size_t ai = static_cast<size_t>(a);
    result.visit_counts[ai] = nd.n[ai];
    if (nd.n[ai] > 0) result.root_values[ai] = nd.w[ai] / nd.n[ai];
    if (nd.n[ai] > nd.n[static_cast<size_t>(best)]) best = a;
  }
  result.action = best;
  return result;
}

}  // namespace klent::search
