#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "hierdec/errors.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"

namespace hierdec::oracle {

// Brute-force reference implementations used to validate the fast decoders.
// Metric formulas are applied directly here (parent walks, explicit set
// unions) and deliberately share nothing with the pruned decoding paths.

inline constexpr int kAntichainGuard = 25;

inline NodeId walk_lca(const Hierarchy& h, NodeId a, NodeId b) {
  while (a != b) {
    if (h.depth(a) < h.depth(b)) std::swap(a, b);
    a = h.parent(a);
  }
  return a;
}

inline int leaves_below(const Hierarchy& h, NodeId n) {
  if (h.is_leaf(n)) return 1;
  int total = 0;
  for (NodeId c : h.children(n)) total += leaves_below(h, c);
  return total;
}

inline int deepest_leaf_below(const Hierarchy& h, NodeId n) {
  if (h.is_leaf(n)) return h.depth(n);
  int deepest = 0;
  for (NodeId c : h.children(n))
    deepest = std::max(deepest, deepest_leaf_below(h, c));
  return deepest;
}

inline double pair_value(const MetricKind& m, const Hierarchy& h, NodeId cand,
                         NodeId y) {
  switch (m.tag) {
    case MetricKind::Tag::Top1:
      return cand == y ? 0.0 : 1.0;
    case MetricKind::Tag::EtaLCA: {
      NodeId c = walk_lca(h, cand, y);
      return static_cast<double>(deepest_leaf_below(h, c) - h.depth(c));
    }
    case MetricKind::Tag::DL:
    case MetricKind::Tag::DLc: {
      // Edge count of the path, stepping both ends toward each other.
      NodeId a = cand, b = y;
      int steps = 0;
      while (a != b) {
        if (h.depth(a) < h.depth(b)) std::swap(a, b);
        a = h.parent(a);
        ++steps;
      }
      double dl = steps;
      if (m.tag == MetricKind::Tag::DLc) dl += m.param * h.depth(cand);
      return dl;
    }
    case MetricKind::Tag::WuPalmer: {
      double denom = h.depth(cand) + h.depth(y);
      if (denom == 0.0) return 1.0;
      return 2.0 * h.depth(walk_lca(h, cand, y)) / denom;
    }
    case MetricKind::Tag::Zhao: {
      double total = h.leaf_count();
      auto inf = [&](NodeId v) { return std::log(total / leaves_below(h, v)); };
      double denom = inf(cand) + inf(y);
      if (denom == 0.0) return 1.0;
      return 2.0 * inf(walk_lca(h, cand, y)) / denom;
    }
    default:
      fail(ErrorKind::SpaceMismatch, m.name() + " is set-valued");
  }
}

struct NodeBrute {
  NodeId node = kNoNode;
  double value = 0.0;  // expected metric value, native orientation
};

// Exact arg-best of the expected pair cost over every node, O(|N|*|L|).
// Ties go to the smallest id. No reasonableness assumptions.
inline NodeBrute brute_force_node(const CostModel& model, const Hierarchy& h,
                                  const LeafDistribution& dist) {
  if (model.space() != CandidateSpace::Nodes)
    fail(ErrorKind::SpaceMismatch, "brute_force_node needs a node-space model");
  double sign = model.orientation() == Orientation::Gain ? -1.0 : 1.0;
  NodeId best = kNoNode;
  double best_cost = std::numeric_limits<double>::infinity();
  for (NodeId n = 0; n < h.node_count(); ++n) {
    double risk = 0.0;
    for (int li = 0; li < h.leaf_count(); ++li) {
      NodeId l = h.leaf_at(li);
      double v = model.has_matrix() ? model.value(h, n, l)
                                    : pair_value(model.kind(), h, n, l);
      risk += dist[li] * sign * v;
    }
    if (risk < best_cost) {
      best_cost = risk;
      best = n;
    }
  }
  return {best, sign * best_cost};
}

// Streams every nonempty antichain (mutually exclusive node set) exactly
// once, members sorted by id. Recursive product construction: the antichains
// within a subtree are {n} itself plus every combination of child
// contributions with at least one child contributing.
inline void for_each_antichain(
    const Hierarchy& h, const std::function<void(const std::vector<NodeId>&)>& fn) {
  if (h.node_count() > kAntichainGuard)
    fail(ErrorKind::TooLarge,
         "antichain enumeration capped at " + std::to_string(kAntichainGuard) +
             " nodes");
  std::vector<NodeId> cur;
  std::function<void(NodeId, const std::function<void()>&)> below =
      [&](NodeId n, const std::function<void()>& done) {
        cur.push_back(n);
        done();
        cur.pop_back();
        if (h.is_leaf(n)) return;
        auto ch = h.children(n);
        std::function<void(std::size_t, bool)> combine = [&](std::size_t i,
                                                             bool any) {
          if (i == ch.size()) {
            if (any) done();
            return;
          }
          combine(i + 1, any);
          below(ch[i], [&] { combine(i + 1, true); });
        };
        combine(0, false);
      };
  below(h.root(), [&] { fn(cur); });
}

inline std::vector<std::vector<NodeId>> collect_antichains(const Hierarchy& h) {
  std::vector<std::vector<NodeId>> out;
  for_each_antichain(h, [&](const std::vector<NodeId>& a) { out.push_back(a); });
  return out;
}

// Closed-form count of the same family: count(n) = 1 + (prod_c (count(c)+1) - 1).
inline std::uint64_t count_antichains(const Hierarchy& h, NodeId n = 0) {
  if (h.is_leaf(n)) return 1;
  std::uint64_t combos = 1;
  for (NodeId c : h.children(n)) combos *= count_antichains(h, c) + 1;
  return 1 + (combos - 1);
}

// Ancestor chain of n, sorted by id (root included).
inline std::vector<NodeId> chain_of(const Hierarchy& h, NodeId n) {
  std::vector<NodeId> chain;
  for (NodeId v = n; v != kNoNode; v = h.parent(v)) chain.push_back(v);
  std::sort(chain.begin(), chain.end());
  return chain;
}

inline std::vector<NodeId> augment(const Hierarchy& h,
                                   const std::vector<NodeId>& nodes) {
  std::vector<NodeId> aug;
  for (NodeId n : nodes)
    for (NodeId v = n; v != kNoNode; v = h.parent(v)) aug.push_back(v);
  std::sort(aug.begin(), aug.end());
  aug.erase(std::unique(aug.begin(), aug.end()), aug.end());
  return aug;
}

inline double set_value(const MetricKind& m, const Hierarchy& h,
                        const std::vector<NodeId>& nodes, NodeId y) {
  std::vector<NodeId> h_aug = augment(h, nodes);
  std::vector<NodeId> y_aug = chain_of(h, y);
  double inter = 0;
  for (NodeId v : h_aug)
    if (std::binary_search(y_aug.begin(), y_aug.end(), v)) ++inter;
  double hs = h_aug.size(), ys = y_aug.size();
  switch (m.tag) {
    case MetricKind::Tag::HFBeta: {
      double pr = inter / hs, re = inter / ys;
      if (inter == 0) return 0.0;  // unreachable: both sets hold the root
      double b2 = m.param * m.param;
      return (1.0 + b2) / (b2 / re + 1.0 / pr);
    }
    case MetricKind::Tag::Hamming:
      return (hs - inter + ys - inter) / ys;
    case MetricKind::Tag::Jaccard:
      return inter / (hs + ys - inter);
    default:
      fail(ErrorKind::SpaceMismatch, m.name() + " is not set-valued");
  }
}

inline double expected_set_value(const MetricKind& m, const Hierarchy& h,
                                 const std::vector<NodeId>& nodes,
                                 const LeafDistribution& dist) {
  double total = 0.0;
  for (int li = 0; li < h.leaf_count(); ++li)
    total += dist[li] * set_value(m, h, nodes, h.leaf_at(li));
  return total;
}

struct SetBrute {
  std::vector<NodeId> antichain;
  double value = 0.0;
};

// Exact expected-score optimum over every nonempty antichain: argmax for the
// gain metrics, argmin for Hamming. First enumerated wins exact ties.
inline SetBrute brute_force_set(const MetricKind& m, const Hierarchy& h,
                                const LeafDistribution& dist) {
  if (!m.is_set_metric())
    fail(ErrorKind::SpaceMismatch, m.name() + " is not set-valued");
  double sign = m.orientation() == Orientation::Gain ? -1.0 : 1.0;
  SetBrute best;
  double best_cost = std::numeric_limits<double>::infinity();
  for_each_antichain(h, [&](const std::vector<NodeId>& a) {
    double v = expected_set_value(m, h, a, dist);
    if (sign * v < best_cost) {
      best_cost = sign * v;
      best.antichain = a;
      best.value = v;
    }
  });
  return best;
}

// Checks that antichain -> augmented subtree -> subtree leaves is the
// identity on every enumerated antichain and that distinct antichains map to
// distinct subtrees.
inline bool phi_roundtrip_check(const Hierarchy& h) {
  bool ok = true;
  std::set<std::vector<NodeId>> images;
  std::uint64_t count = 0;
  for_each_antichain(h, [&](const std::vector<NodeId>& a) {
    ++count;
    std::vector<NodeId> aug = augment(h, a);
    images.insert(aug);
    // Members of the subtree with no child inside it.
    std::vector<NodeId> frontier;
    for (NodeId n : aug) {
      bool has_child = false;
      for (NodeId c : h.children(n))
        if (std::binary_search(aug.begin(), aug.end(), c)) {
          has_child = true;
          break;
        }
      if (!has_child) frontier.push_back(n);
    }
    if (frontier != a) ok = false;
  });
  return ok && images.size() == count;
}

}  // namespace hierdec::oracle
