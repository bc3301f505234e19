#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hierdec/errors.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"
#include "hierdec/prediction.hpp"

namespace hierdec {

// Admission threshold for the hF_beta search space plus the worst-case size
// of that space. The threshold uses the tree-wide deepest leaf: a variant
// with the per-subtree deepest leaf over-prunes (a shallow high-mass leaf
// can be the unique optimum while failing its subtree-local bound), so the
// tree-wide form is the one every node is screened against.
struct HFBetaContext {
  double beta = 1.0;
  std::vector<double> q_threshold;  // 1 / (1 + beta^2 (d_max + 1)), per node
  double n_max = 0.0;               // (1 + beta^2 (d_max+1)) (d_max+1)

  static HFBetaContext make(const Hierarchy& h, double beta) {
    if (!(beta > 0.0)) fail(ErrorKind::InvalidParam, "beta must be positive");
    HFBetaContext ctx;
    ctx.beta = beta;
    double b2 = beta * beta;
    double threshold = 1.0 / (1.0 + b2 * (h.max_depth() + 1));
    ctx.q_threshold.assign(h.node_count(), threshold);
    ctx.n_max = (1.0 + b2 * (h.max_depth() + 1)) * (h.max_depth() + 1);
    return ctx;
  }
};

namespace detail {

// Collects {n : p(n) >= threshold(n)} by a pruned DFS. Valid whenever the
// thresholds never decrease walking down the tree, since p never increases.
template <class ThresholdFn>
std::vector<NodeId> admitted_nodes(const Hierarchy& h, const NodeScores& p,
                                   ThresholdFn&& threshold) {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{h.root()};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    if (p[n] < threshold(n)) continue;
    out.push_back(n);
    auto ch = h.children(n);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Q(p): the nodes worth considering for the optimal set prediction,
// {n : p(n) >= 1/(1+beta^2(d_max+1))}. The root always qualifies and the set
// is ancestor-closed. |Q(p)| <= n_max. Returned sorted by id.
inline std::vector<NodeId> q_set(const Hierarchy& h, const NodeScores& p,
                                 double beta) {
  HFBetaContext ctx = HFBetaContext::make(h, beta);
  return detail::admitted_nodes(
      h, p, [&](NodeId n) { return ctx.q_threshold[n]; });
}

// Delta_k(n) = sum over leaves of n of p(l) (1+beta^2) / (k + beta^2(d(l)+1)),
// the marginal utility of including n in a size-k augmented prediction.
// One bottom-up traversal per k.
inline DenseMatrix delta_table(const Hierarchy& h, const LeafDistribution& dist,
                               double beta, int k_max) {
  if (!(beta > 0.0)) fail(ErrorKind::InvalidParam, "beta must be positive");
  if (k_max < 1) fail(ErrorKind::InvalidParam, "k_max must be at least 1");
  double b2 = beta * beta;
  DenseMatrix table(k_max, h.node_count());
  for (int k = 1; k <= k_max; ++k) {
    for (NodeId n = h.node_count() - 1; n >= 0; --n) {
      if (h.is_leaf(n)) {
        table.at(k - 1, n) = dist[h.leaf_index(n)] * (1.0 + b2) /
                             (k + b2 * (h.depth(n) + 1));
      } else {
        double s = 0.0;
        for (NodeId c : h.children(n)) s += table.at(k - 1, c);
        table.at(k - 1, n) = s;
      }
    }
  }
  return table;
}

// The expected hF_beta of the optimal set prediction is at least the root's
// utility against the deepest leaf.
inline double hfbeta_utility_lower_bound(const Hierarchy& h, double beta) {
  double b2 = beta * beta;
  return (1.0 + b2) / (1.0 + b2 * (h.max_depth() + 1));
}

struct HFBetaDecode {
  Prediction prediction;
  double utility = 0.0;  // expected hF_beta of the returned set
  int k = 0;             // |h_aug| of the winner
  int q_size = 0;        // size of the searched candidate set
};

// Optimal decision rule for hF_beta.
//
// Candidate screening: every non-root member n of the optimal augmented set
// satisfies
//
//   p(n) >= (2 + beta^2 (d_min(n)+1)) / ((1+beta^2(D+1)) (2+beta^2(D+1)))
//
// with d_min(n) the shallowest leaf depth under n and D the tree-wide
// deepest leaf depth. Sketch: removing the optimum's overlap with n's
// subtree (s nodes, k = |h_aug|) must not raise the utility, which forces
// Delta_k(n) >= U_opt/(k+beta^2(D+1)); combined with U_opt at least the
// root's utility floor and Delta_k(n) <= (1+beta^2) p(n)/(k+beta^2(d_min(n)+1)),
// and the resulting bound growing in k, the k=2 form above is the weakest
// case. On uniform-leaf-depth trees it reduces to the Q(p) threshold.
//
// For each candidate size k, the best ancestor-closed set of size k is the
// top-k of Delta_k within the screened set; ties are broken ancestor-first
// (depth, then id) so the selection stays closed even under exact Delta
// ties. Equal-utility sizes resolve toward the smaller k. Never returns the
// empty set.
inline HFBetaDecode decode_hfbeta_detailed(const Hierarchy& h,
                                           const LeafDistribution& dist,
                                           double beta) {
  if (!(beta > 0.0)) fail(ErrorKind::InvalidParam, "beta must be positive");
  NodeScores p = aggregate(h, dist);
  double b2 = beta * beta;
  double big = 1.0 + b2 * (h.max_depth() + 1);
  std::vector<NodeId> q = detail::admitted_nodes(h, p, [&](NodeId n) {
    if (n == h.root()) return 0.0;
    return (2.0 + b2 * (h.subtree_min_leaf_depth(n) + 1)) / (big * (1.0 + big));
  });
  int q_size = static_cast<int>(q.size());

  std::vector<char> chosen(h.node_count(), 0);
  std::vector<double> prefix(h.leaf_count() + 1, 0.0);
  std::vector<double> delta(q_size, 0.0);
  std::vector<int> order(q_size);

  double best_utility = -1.0;
  int best_k = 0;
  std::vector<NodeId> best_set;

  for (int k = 1; k <= q_size; ++k) {
    for (int li = 0; li < h.leaf_count(); ++li) {
      NodeId l = h.leaf_at(li);
      prefix[li + 1] =
          prefix[li] + dist[li] * (1.0 + b2) / (k + b2 * (h.depth(l) + 1));
    }
    for (int i = 0; i < q_size; ++i) {
      auto [lo, hi] = h.leaf_span(q[i]);
      delta[i] = prefix[hi] - prefix[lo];
      order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (delta[a] != delta[b]) return delta[a] > delta[b];
      if (h.depth(q[a]) != h.depth(q[b])) return h.depth(q[a]) < h.depth(q[b]);
      return q[a] < q[b];
    });
    double utility = 0.0;
    for (int i = 0; i < k; ++i) utility += delta[order[i]];
    if (utility > best_utility) {
      best_utility = utility;
      best_k = k;
      best_set.clear();
      for (int i = 0; i < k; ++i) best_set.push_back(q[order[i]]);
      std::sort(best_set.begin(), best_set.end());
    }
  }

  // The top-k set must be ancestor-closed (Delta of a parent dominates its
  // child's); anything else indicates a broken tie rule.
  for (NodeId n : best_set) chosen[n] = 1;
  for (NodeId n : best_set)
    if (n != h.root() && !chosen[h.parent(n)])
      fail(ErrorKind::Internal, "top-k selection is not ancestor-closed");

  std::vector<NodeId> antichain;
  for (NodeId n : best_set) {
    bool has_child = false;
    for (NodeId c : h.children(n))
      if (chosen[c]) { has_child = true; break; }
    if (!has_child) antichain.push_back(n);
  }

  HFBetaDecode out;
  out.prediction = Prediction::node_set(h, std::move(antichain));
  out.utility = best_utility;
  out.k = best_k;
  out.q_size = q_size;
  return out;
}

inline Prediction decode_hfbeta(const Hierarchy& h, const LeafDistribution& dist,
                                double beta) {
  return decode_hfbeta_detailed(h, dist, beta).prediction;
}

}  // namespace hierdec
