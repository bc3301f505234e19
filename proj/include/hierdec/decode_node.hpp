#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hierdec/errors.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"
#include "hierdec/prediction.hpp"

namespace hierdec {

// Strict: the away-from-truth condition holds for every out-of-subtree leaf.
// Rooted: it holds only where the pair meets below the root; costs are equal
// across root-level mismatches, and the pruning bounds gain a factor p(a_n)
// where a_n is the shallowest non-root ancestor of n.
enum class Variant { Strict, Rooted };

// Dense matrices are preferred for risk evaluation up to this many entries;
// beyond it the built-in closed forms are evaluated on the fly.
inline constexpr std::size_t kMatrixEntryBudget = 200'000'000;

// Per-node pruning bounds. For a (rooted-)reasonable cost, a node n is
// sub-optimal when p(n) < q_min(n) (times p(a_n) in the rooted variant), and
// its parent is sub-optimal when p(n) > q_max(n) (likewise scaled).
//
// Nodes whose restricted out-of-subtree leaf set is empty (children of the
// root in the rooted variant, and chains covering every leaf) have no
// defined bound constants; they get q_min = q_max = 0, meaning: the parent
// is removable as soon as p(n) > 0 (its cost ties n's on every outside leaf
// and strictly loses inside), and n itself is never pruned. Such entries are
// excluded from the positive floor used for subtree pruning.
struct Thresholds {
  Variant variant = Variant::Strict;
  std::vector<double> q_min, q_max;  // per node, root entries unused (0)
  std::vector<char> degenerate;      // 1 where the bounds are the 0-convention
  double q_min_floor = 0.0;          // min over non-root nodes, zeros included
  double q_min_floor_pos = 0.0;      // min over non-degenerate nodes, 0 if none
};

namespace detail {

// Signed pair-cost accessor: gains are negated once here so that every
// decoding path below is a plain argmin.
struct CostView {
  const CostModel* model;
  const Hierarchy* h;
  double sign;

  CostView(const CostModel& m, const Hierarchy& hier)
      : model(&m), h(&hier),
        sign(m.orientation() == Orientation::Gain ? -1.0 : 1.0) {}

  double cost(NodeId cand, NodeId y) const {
    return sign * model->value(*h, cand, y);
  }
};

}  // namespace detail

// One-time O(|N|*|L|) scan deriving the pruning bounds from the node-parent
// cost differences. Doubles as the reasonableness precondition check: a
// constant with the wrong sign raises NotReasonable with the offending pair.
// DL and DL_c short-circuit to their closed-form bounds (1+c)/2.
inline Thresholds compute_thresholds(const CostModel& model, const Hierarchy& h,
                                     Variant variant) {
  if (model.space() != CandidateSpace::Nodes)
    fail(ErrorKind::SpaceMismatch, "thresholds need a node-space cost model");
  int n_nodes = h.node_count();
  Thresholds t;
  t.variant = variant;
  t.q_min.assign(n_nodes, 0.0);
  t.q_max.assign(n_nodes, 0.0);
  t.degenerate.assign(n_nodes, 0);

  if (!model.has_matrix() && (model.kind().tag == MetricKind::Tag::DL ||
                              model.kind().tag == MetricKind::Tag::DLc)) {
    double q = (1.0 + model.kind().param) / 2.0;
    if (q > 1.0)
      fail(ErrorKind::NotReasonable,
           model.kind().name() + ": (1+c)/2 > 1 leaves no admissible node");
    std::fill(t.q_min.begin() + 1, t.q_min.end(), q);
    std::fill(t.q_max.begin() + 1, t.q_max.end(), q);
    t.q_min_floor = t.q_min_floor_pos = q;
    return t;
  }

  detail::CostView view(model, h);
  t.q_min_floor = 1.0;
  t.q_min_floor_pos = 1.0;
  bool any_positive = false;
  for (NodeId n = 1; n < n_nodes; ++n) {
    NodeId up = h.parent(n);
    auto [lo, hi] = h.leaf_span(n);
    auto [alo, ahi] = h.leaf_span(h.anchor(n));
    double in_max = -std::numeric_limits<double>::infinity();
    double in_min = std::numeric_limits<double>::infinity();
    double out_max = -std::numeric_limits<double>::infinity();
    double out_min = std::numeric_limits<double>::infinity();
    bool out_seen = false;
    for (int li = 0; li < h.leaf_count(); ++li) {
      NodeId l = h.leaf_at(li);
      double delta = view.cost(n, l) - view.cost(up, l);
      if (std::abs(delta) < kStrictTol) delta = 0.0;
      if (li >= lo && li < hi) {
        in_max = std::max(in_max, delta);
        in_min = std::min(in_min, delta);
      } else if (variant == Variant::Rooted && !(li >= alo && li < ahi)) {
        // Meets only at the root: the rooted conditions demand equality.
        if (std::abs(delta) > kRootEqualityTol)
          fail(ErrorKind::NotReasonable,
               "cost not equal across root split at (" + h.name(n) + ", " +
                   h.name(l) + ")");
      } else {
        out_max = std::max(out_max, delta);
        out_min = std::min(out_min, delta);
        out_seen = true;
      }
    }
    if (!(in_max < 0.0))
      fail(ErrorKind::NotReasonable,
           "no strict improvement toward the truth at node " + h.name(n));
    if (out_seen && !(out_min > 0.0))
      fail(ErrorKind::NotReasonable,
           "no strict degradation away from the truth at node " + h.name(n));
    if (!out_seen) {
      t.degenerate[n] = 1;
      t.q_min_floor = 0.0;
      continue;
    }
    double m_small = -in_max;        // m_n
    double m_big = -in_min;          // M_n
    double q_min = out_min / (out_min + m_big);
    double q_max = out_max / (out_max + m_small);
    t.q_min[n] = q_min;
    t.q_max[n] = q_max;
    t.q_min_floor = std::min(t.q_min_floor, q_min);
    t.q_min_floor_pos = std::min(t.q_min_floor_pos, q_min);
    any_positive = true;
  }
  if (!any_positive) t.q_min_floor_pos = 0.0;
  return t;
}

// Bound-based candidate selection. Starts from all nodes, removes nodes ruled
// out by the bounds, and skips whole subtrees once p drops below the positive
// floor (p only decreases downward while the floor lower-bounds every q_min
// underneath, so everything skipped would have been removed anyway). Both
// rules back off by kStrictTol so that float noise at an exact boundary
// p(n) = q keeps the node rather than removing a risk-tied optimum. The
// returned set provably contains the risk minimizer.
inline std::vector<NodeId> find_candidate_set(const Hierarchy& h,
                                              const NodeScores& p,
                                              const Thresholds& t) {
  int n_nodes = h.node_count();
  std::vector<char> in_set(n_nodes, 1);
  bool rooted = t.variant == Variant::Rooted;

  std::vector<NodeId> stack{h.root()};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    double anchor_mass = 1.0;
    if (n != h.root()) {
      if (rooted) anchor_mass = p[h.anchor(n)];
      if (p[n] > t.q_max[n] * anchor_mass + kStrictTol) in_set[h.parent(n)] = 0;
      if (p[n] < t.q_min[n] * anchor_mass - kStrictTol) in_set[n] = 0;
      if (rooted && p[n] == 0.0) {
        // Zero-mass nodes never strictly beat their parent; drop the subtree.
        std::fill(in_set.begin() + n, in_set.begin() + h.subtree_end(n), 0);
        continue;
      }
    }
    if (h.is_leaf(n)) continue;
    if (n != h.root() && t.q_min_floor_pos > 0.0 &&
        p[n] < t.q_min_floor_pos * anchor_mass - kStrictTol) {
      std::fill(in_set.begin() + n + 1, in_set.begin() + h.subtree_end(n), 0);
      continue;
    }
    for (NodeId c : h.children(n)) stack.push_back(c);
  }

  std::vector<NodeId> out;
  for (NodeId n = 0; n < n_nodes; ++n)
    if (in_set[n]) out.push_back(n);
  return out;
}

struct NodeDecode {
  NodeId node = kNoNode;
  double value = 0.0;  // expected metric value, native orientation
  int candidate_count = 0;
};

// Restricted brute force over the candidate set: exact argmin of the
// conditional risk (argmax of expected gain), ties to the smallest id.
inline NodeDecode decode_reasonable_detailed(const CostModel& model,
                                             const Hierarchy& h,
                                             const LeafDistribution& dist,
                                             const Thresholds& t) {
  NodeScores p = aggregate(h, dist);
  std::vector<NodeId> cands = find_candidate_set(h, p, t);
  if (cands.empty()) fail(ErrorKind::Internal, "empty candidate set");

  detail::CostView view(model, h);
  NodeId best = kNoNode;
  double best_cost = std::numeric_limits<double>::infinity();
  for (NodeId n : cands) {
    double risk = 0.0;
    for (int li = 0; li < h.leaf_count(); ++li)
      risk += dist[li] * view.cost(n, h.leaf_at(li));
    if (risk < best_cost) {
      best_cost = risk;
      best = n;
    }
  }
  return {best, view.sign * best_cost, static_cast<int>(cands.size())};
}

inline Prediction decode_reasonable(const CostModel& model, const Hierarchy& h,
                                    const LeafDistribution& dist,
                                    const Thresholds& t) {
  return Prediction::single_node(decode_reasonable_detailed(model, h, dist, t).node);
}

// Deepest node with p(n) > tau; the root is the fallback. For tau >= 1/2 at
// most one node per depth can qualify, so the qualifying set is a chain.
inline Prediction decode_threshold_closed_form(const Hierarchy& h,
                                               const LeafDistribution& dist,
                                               double tau) {
  if (!(tau >= 0.5))
    fail(ErrorKind::InvalidTau, "tau must be at least 1/2");
  NodeScores p = aggregate(h, dist);
  NodeId best = h.root();
  for (NodeId n = 1; n < h.node_count(); ++n)
    if (p[n] > tau && h.depth(n) > h.depth(best)) best = n;
  return Prediction::single_node(best);
}

// Bayes decoding over the leaf candidate set. Top1 reduces to argmax;
// eta-lca takes the argmax shortcut when one leaf holds a majority and
// otherwise falls back to the O(|L|^2) risk scan.
inline Prediction decode_leaf_bayes(const CostModel& model, const Hierarchy& h,
                                    const LeafDistribution& dist) {
  if (model.space() != CandidateSpace::Leaves)
    fail(ErrorKind::SpaceMismatch, "decode_leaf_bayes needs a leaf-space model");

  int argmax = 0;
  for (int li = 1; li < h.leaf_count(); ++li)
    if (dist[li] > dist[argmax]) argmax = li;

  if (!model.has_matrix()) {
    if (model.kind().tag == MetricKind::Tag::Top1)
      return Prediction::leaf(h.leaf_at(argmax));
    if (model.kind().tag == MetricKind::Tag::EtaLCA && dist[argmax] > 0.5)
      return Prediction::leaf(h.leaf_at(argmax));
  }

  detail::CostView view(model, h);
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int ci = 0; ci < h.leaf_count(); ++ci) {
    NodeId cand = h.leaf_at(ci);
    double risk = 0.0;
    for (int li = 0; li < h.leaf_count(); ++li)
      risk += dist[li] * view.cost(cand, h.leaf_at(li));
    if (risk < best_cost) {
      best_cost = risk;
      best = ci;
    }
  }
  return Prediction::leaf(h.leaf_at(best));
}

// Node-space model for repeated decoding: materializes the dense matrix when
// it fits the entry budget, otherwise evaluates the closed form per query.
inline CostModel decoding_model(const MetricKind& kind, const Hierarchy& h,
                                std::size_t budget = kMatrixEntryBudget) {
  std::size_t entries =
      static_cast<std::size_t>(h.node_count()) * h.leaf_count();
  if (entries <= budget) return build_cost_matrix(kind, h, CandidateSpace::Nodes);
  return CostModel::builtin(kind, CandidateSpace::Nodes);
}

}  // namespace hierdec
