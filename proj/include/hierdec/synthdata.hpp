#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hierdec/errors.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"

namespace hierdec {

// Synthetic hierarchies and probability vectors shared by the benchmark
// harness, the verify command and the test suites.

namespace detail {
inline std::string node_label(int i) { return "n" + std::to_string(i); }
}

// Random tree grown by repeatedly expanding a random leaf with a batch of
// children. With min_children >= 2 every internal node keeps at least two
// children, which several structural bounds assume.
inline Hierarchy random_tree(std::mt19937_64& rng, int max_nodes,
                             int min_children = 2, int max_children = 3) {
  if (max_nodes < 1 + min_children)
    fail(ErrorKind::InvalidParam, "max_nodes too small for one expansion");
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<int> leaves{0};
  int next = 1;
  while (next + min_children <= max_nodes + 0) {
    int budget = max_nodes - next;
    if (budget < min_children) break;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(leaves.size()) - 1);
    int slot = pick(rng);
    int node = leaves[slot];
    leaves[slot] = leaves.back();
    leaves.pop_back();
    std::uniform_int_distribution<int> width(min_children,
                                             std::min(max_children, budget));
    int k = width(rng);
    for (int i = 0; i < k; ++i) {
      edges.emplace_back(detail::node_label(node), detail::node_label(next));
      leaves.push_back(next);
      ++next;
    }
  }
  return Hierarchy::from_edges(edges);
}

// Random tree with an exact number of leaves.
inline Hierarchy random_tree_with_leaves(std::mt19937_64& rng, int target_leaves,
                                         int min_children = 2,
                                         int max_children = 3) {
  if (target_leaves < 2)
    fail(ErrorKind::InvalidParam, "need at least two leaves");
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<int> leaves{0};
  int next = 1;
  int leaf_count = 1;
  while (leaf_count < target_leaves) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(leaves.size()) - 1);
    int slot = pick(rng);
    int node = leaves[slot];
    leaves[slot] = leaves.back();
    leaves.pop_back();
    int cap = std::min(max_children, target_leaves - leaf_count + 1);
    std::uniform_int_distribution<int> width(min_children, std::max(min_children, cap));
    int k = std::min(width(rng), cap);
    for (int i = 0; i < k; ++i) {
      edges.emplace_back(detail::node_label(node), detail::node_label(next));
      leaves.push_back(next);
      ++next;
    }
    leaf_count += k - 1;
  }
  return Hierarchy::from_edges(edges);
}

// Complete tree with the given branching factor and depth.
inline Hierarchy balanced_tree(int branching, int depth) {
  if (branching < 2 || depth < 1)
    fail(ErrorKind::InvalidParam, "balanced_tree needs branching >= 2, depth >= 1");
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<int> level{0};
  int next = 1;
  for (int d = 0; d < depth; ++d) {
    std::vector<int> below;
    for (int node : level)
      for (int i = 0; i < branching; ++i) {
        edges.emplace_back(detail::node_label(node), detail::node_label(next));
        below.push_back(next);
        ++next;
      }
    level = std::move(below);
  }
  return Hierarchy::from_edges(edges);
}

// Deterministic tree hitting exact (node count, leaf count, max depth)
// statistics: a spine of the requested depth, side internals each carrying
// two leaves, and the remaining leaves attached at the deepest level.
inline Hierarchy shaped_tree(int node_count, int leaf_count, int depth) {
  int internal = node_count - leaf_count;
  int side_internal = internal - depth;
  int rest = leaf_count - 1 - 2 * side_internal;
  if (depth < 2 || side_internal < 0 || rest < 0)
    fail(ErrorKind::InvalidParam, "unreachable shape statistics");
  std::vector<std::pair<std::string, std::string>> edges;
  auto spine = [](int d) { return "s" + std::to_string(d); };
  for (int d = 1; d <= depth; ++d) edges.emplace_back(spine(d - 1), spine(d));
  int next = 0;
  for (int i = 0; i < side_internal; ++i) {
    std::string inner = "m" + std::to_string(i);
    edges.emplace_back(spine(1), inner);
    edges.emplace_back(inner, detail::node_label(next++));
    edges.emplace_back(inner, detail::node_label(next++));
  }
  for (int i = 0; i < rest; ++i)
    edges.emplace_back(spine(depth - 1), detail::node_label(next++));
  return Hierarchy::from_edges(edges);
}

// One draw from a symmetric Dirichlet(alpha).
inline std::vector<double> dirichlet_row(std::mt19937_64& rng, int dim,
                                         double alpha) {
  if (!(alpha > 0.0)) fail(ErrorKind::InvalidAlpha, "alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> row(dim);
  double sum = 0.0;
  for (double& x : row) {
    x = gamma(rng);
    sum += x;
  }
  if (sum <= 0.0) {
    // Underflow for very small alpha: fall back to a point mass.
    std::uniform_int_distribution<int> pick(0, dim - 1);
    row.assign(dim, 0.0);
    row[pick(rng)] = 1.0;
    return row;
  }
  for (double& x : row) x /= sum;
  return row;
}

inline LeafDistribution random_distribution(std::mt19937_64& rng,
                                            const Hierarchy& h, double alpha) {
  return make_distribution(h, dirichlet_row(rng, h.leaf_count(), alpha));
}

// Random strictly-reasonable node-space cost matrix: child costs are the
// parent's shifted up on out-of-subtree leaves and down on leaf descendants,
// with margins bounded away from the tolerance.
inline CostModel random_strict_reasonable_matrix(std::mt19937_64& rng,
                                                 const Hierarchy& h) {
  std::uniform_real_distribution<double> base(1.0, 2.0);
  std::uniform_real_distribution<double> margin(0.1, 1.0);
  DenseMatrix m(h.node_count(), h.leaf_count());
  for (int li = 0; li < h.leaf_count(); ++li) m.at(0, li) = base(rng);
  for (NodeId n = 1; n < h.node_count(); ++n) {
    auto [lo, hi] = h.leaf_span(n);
    for (int li = 0; li < h.leaf_count(); ++li) {
      bool inside = li >= lo && li < hi;
      double step = margin(rng);
      m.at(n, li) = m.at(h.parent(n), li) + (inside ? -step : step);
    }
  }
  return CostModel::from_matrix(std::move(m), Orientation::Cost,
                                CandidateSpace::Nodes);
}

}  // namespace hierdec
