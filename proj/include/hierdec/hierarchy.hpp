#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hierdec/errors.hpp"

namespace hierdec {

// Dense node index, assigned in depth-first pre-order with the root at 0.
// Pre-order guarantees every descendant of n has an index strictly greater
// than n and that each subtree occupies a contiguous index range.
using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

// Tolerances of the leaf-distribution validation policy: entries below
// -kProbNegativeTol are rejected, sums outside 1 +/- kProbSumTol are
// rejected, anything milder is clamped and renormalized.
inline constexpr double kProbNegativeTol = 1e-12;
inline constexpr double kProbSumTol = 1e-6;

class Hierarchy;

// Probability vector over leaves, in leaf order. Construct through
// make_distribution so that the validation policy is applied exactly once.
struct LeafDistribution {
  std::vector<double> p;

  int size() const { return static_cast<int>(p.size()); }
  double operator[](int leaf_index) const { return p[leaf_index]; }
};

// Per-node reals, usually the bottom-up aggregation of a LeafDistribution.
struct NodeScores {
  std::vector<double> v;

  double operator[](NodeId n) const { return v[n]; }
};

// Immutable rooted tree with the derived structure every decoder needs:
// depths, contiguous leaf spans, subtree-deepest-leaf depths, information
// content and O(log n) lca queries (binary lifting). Safe for shared
// unsynchronized reads after construction.
class Hierarchy {
 public:
  Hierarchy() = default;  // empty placeholder; build through from_edges

  static Hierarchy from_edges(
      const std::vector<std::pair<std::string, std::string>>& edges);

  // UTF-8 text, one `parent<TAB>child` edge per line, `#` starts a comment
  // line. The root is the unique name never appearing as a child.
  static Hierarchy from_file(const std::string& path);

  int node_count() const { return static_cast<int>(parent_.size()); }
  int leaf_count() const { return static_cast<int>(leaf_nodes_.size()); }
  NodeId root() const { return 0; }

  NodeId parent(NodeId n) const { return parent_[n]; }
  std::span<const NodeId> children(NodeId n) const {
    return {children_.data() + child_begin_[n],
            static_cast<std::size_t>(child_begin_[n + 1] - child_begin_[n])};
  }
  bool is_leaf(NodeId n) const { return child_begin_[n] == child_begin_[n + 1]; }
  int depth(NodeId n) const { return depth_[n]; }
  int max_depth() const { return max_depth_; }
  int min_leaf_depth() const { return min_leaf_depth_; }

  // Half-open interval into the leaf ordering holding exactly L(n).
  std::pair<int, int> leaf_span(NodeId n) const {
    return {leaf_lo_[n], leaf_hi_[n]};
  }
  int leaf_descendant_count(NodeId n) const { return leaf_hi_[n] - leaf_lo_[n]; }

  // d_max(n): depth of the deepest leaf descendant of n.
  int subtree_max_leaf_depth(NodeId n) const { return subtree_max_leaf_depth_[n]; }
  int subtree_min_leaf_depth(NodeId n) const { return subtree_min_leaf_depth_[n]; }

  // I(n) = log(|L| / |L(n)|), natural log; zero at the root.
  double info(NodeId n) const { return info_[n]; }

  const std::string& name(NodeId n) const { return names_[n]; }
  NodeId find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? kNoNode : it->second;
  }

  NodeId leaf_at(int leaf_index) const { return leaf_nodes_[leaf_index]; }
  int leaf_index(NodeId leaf) const { return leaf_index_[leaf]; }
  const std::vector<NodeId>& leaves() const { return leaf_nodes_; }

  // One past the last pre-order id of n's subtree.
  NodeId subtree_end(NodeId n) const { return subtree_end_[n]; }
  bool is_ancestor(NodeId a, NodeId d) const {  // inclusive
    return a <= d && d < subtree_end_[a];
  }

  NodeId lca(NodeId a, NodeId b) const;

  // Shallowest non-root ancestor (inclusive: children of the root anchor to
  // themselves). kNoNode for the root.
  NodeId anchor(NodeId n) const { return anchor_[n]; }

  // Ancestors of n from n up to the root, inclusive.
  std::vector<NodeId> ancestors(NodeId n) const {
    std::vector<NodeId> chain;
    for (NodeId v = n; v != kNoNode; v = parent_[v]) chain.push_back(v);
    return chain;
  }

  // New hierarchy with one extra leaf child (name suffixed "#stop") appended
  // under each listed internal node. Existing nodes keep their relative order.
  Hierarchy augment_with_stop_nodes(const std::vector<NodeId>& internal) const;

 private:
  void build_derived();

  std::vector<NodeId> parent_;
  std::vector<NodeId> children_;      // flattened, ordered
  std::vector<int> child_begin_;      // node_count + 1 offsets into children_
  std::vector<int> depth_;
  std::vector<NodeId> subtree_end_;
  std::vector<int> leaf_lo_, leaf_hi_;
  std::vector<int> subtree_max_leaf_depth_;
  std::vector<int> subtree_min_leaf_depth_;
  std::vector<double> info_;
  std::vector<NodeId> anchor_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> by_name_;
  std::vector<NodeId> leaf_nodes_;
  std::vector<int> leaf_index_;
  std::vector<std::vector<NodeId>> lift_;  // binary lifting table
  int max_depth_ = 0;
  int min_leaf_depth_ = 0;
};

inline Hierarchy Hierarchy::from_edges(
    const std::vector<std::pair<std::string, std::string>>& edges) {
  if (edges.empty()) fail(ErrorKind::FormatError, "empty edge list");

  std::unordered_map<std::string, int> ids;
  std::vector<std::string> names;
  auto intern = [&](const std::string& s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(names.size());
    ids.emplace(s, id);
    names.push_back(s);
    return id;
  };

  std::vector<int> raw_parent;
  std::vector<std::vector<int>> raw_children;
  auto grow = [&](int id) {
    if (id >= static_cast<int>(raw_parent.size())) {
      raw_parent.resize(id + 1, -1);
      raw_children.resize(id + 1);
    }
  };

  for (const auto& [pname, cname] : edges) {
    int p = intern(pname), c = intern(cname);
    grow(std::max(p, c));
    if (p == c) fail(ErrorKind::CycleDetected, "self edge at node " + cname);
    if (raw_parent[c] == p)
      fail(ErrorKind::DuplicateChildEdge,
           "edge " + pname + " -> " + cname + " listed twice");
    if (raw_parent[c] != -1)
      fail(ErrorKind::DuplicateChildEdge,
           "node " + cname + " has more than one parent");
    raw_parent[c] = p;
    raw_children[p].push_back(c);
  }

  int n = static_cast<int>(names.size());
  int root = -1;
  for (int i = 0; i < n; ++i) {
    if (raw_parent[i] == -1) {
      if (root != -1)
        fail(ErrorKind::MultipleRoots,
             "both " + names[root] + " and " + names[i] + " lack a parent");
      root = i;
    }
  }
  if (root == -1)
    fail(ErrorKind::CycleDetected, "every node has a parent, e.g. " + names[0]);

  // Pre-order renumbering; also detects unreachable nodes.
  std::vector<NodeId> order(n, kNoNode);  // raw id -> pre-order id
  std::vector<int> visit_stack{root};
  std::vector<int> preorder;
  preorder.reserve(n);
  while (!visit_stack.empty()) {
    int v = visit_stack.back();
    visit_stack.pop_back();
    preorder.push_back(v);
    const auto& ch = raw_children[v];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) visit_stack.push_back(*it);
  }
  if (static_cast<int>(preorder.size()) != n) {
    std::vector<char> seen(n, 0);
    for (int v : preorder) seen[v] = 1;
    for (int i = 0; i < n; ++i) {
      if (seen[i]) continue;
      // Every unreachable node has a parent, so its parent chain revisits
      // itself (a cycle) unless it somehow escapes into the reachable part.
      std::vector<char> on_path(n, 0);
      int v = i;
      while (v != -1 && !on_path[v] && !seen[v]) {
        on_path[v] = 1;
        v = raw_parent[v];
      }
      if (v != -1 && on_path[v])
        fail(ErrorKind::CycleDetected, "cycle through node " + names[v]);
      fail(ErrorKind::DisconnectedNode, "node " + names[i] + " is unreachable");
    }
  }

  Hierarchy h;
  for (int i = 0; i < n; ++i) order[preorder[i]] = i;
  h.parent_.assign(n, kNoNode);
  h.names_.resize(n);
  h.child_begin_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    int raw = preorder[i];
    h.names_[i] = names[raw];
    h.by_name_.emplace(names[raw], i);
    if (raw != root) h.parent_[i] = order[raw_parent[raw]];
    h.child_begin_[i + 1] = static_cast<int>(raw_children[raw].size());
  }
  for (int i = 0; i < n; ++i) h.child_begin_[i + 1] += h.child_begin_[i];
  h.children_.resize(edges.size());
  {
    std::vector<int> cursor(h.child_begin_.begin(), h.child_begin_.end() - 1);
    for (int i = 0; i < n; ++i)
      for (int c : raw_children[preorder[i]]) h.children_[cursor[i]++] = order[c];
  }
  h.build_derived();
  return h;
}

inline void Hierarchy::build_derived() {
  int n = node_count();
  depth_.assign(n, 0);
  subtree_end_.assign(n, 0);
  leaf_lo_.assign(n, 0);
  leaf_hi_.assign(n, 0);
  subtree_max_leaf_depth_.assign(n, 0);
  subtree_min_leaf_depth_.assign(n, 0);
  info_.assign(n, 0.0);
  anchor_.assign(n, kNoNode);
  leaf_index_.assign(n, -1);
  leaf_nodes_.clear();

  max_depth_ = 0;
  for (NodeId v = 0; v < n; ++v) {
    if (v != 0) {
      depth_[v] = depth_[parent_[v]] + 1;
      anchor_[v] = depth_[v] == 1 ? v : anchor_[parent_[v]];
    }
    max_depth_ = std::max(max_depth_, depth_[v]);
    if (is_leaf(v)) {
      leaf_index_[v] = static_cast<int>(leaf_nodes_.size());
      leaf_nodes_.push_back(v);
    }
  }

  // Reverse pre-order: children are processed before their parent.
  min_leaf_depth_ = max_depth_;
  for (NodeId v = n - 1; v >= 0; --v) {
    if (is_leaf(v)) {
      subtree_end_[v] = v + 1;
      leaf_lo_[v] = leaf_index_[v];
      leaf_hi_[v] = leaf_index_[v] + 1;
      subtree_max_leaf_depth_[v] = depth_[v];
      subtree_min_leaf_depth_[v] = depth_[v];
      min_leaf_depth_ = std::min(min_leaf_depth_, depth_[v]);
    } else {
      auto ch = children(v);
      subtree_end_[v] = subtree_end_[ch.back()];
      leaf_lo_[v] = leaf_lo_[ch.front()];
      leaf_hi_[v] = leaf_hi_[ch.back()];
      int dmax = 0, dmin = std::numeric_limits<int>::max();
      for (NodeId c : ch) {
        dmax = std::max(dmax, subtree_max_leaf_depth_[c]);
        dmin = std::min(dmin, subtree_min_leaf_depth_[c]);
      }
      subtree_max_leaf_depth_[v] = dmax;
      subtree_min_leaf_depth_[v] = dmin;
    }
  }
  double total_leaves = static_cast<double>(leaf_count());
  for (NodeId v = 0; v < n; ++v)
    info_[v] = std::log(total_leaves / (leaf_hi_[v] - leaf_lo_[v]));

  int levels = 1;
  while ((1 << levels) <= max_depth_) ++levels;
  lift_.assign(levels, std::vector<NodeId>(n, 0));
  for (NodeId v = 0; v < n; ++v) lift_[0][v] = v == 0 ? 0 : parent_[v];
  for (int k = 1; k < levels; ++k)
    for (NodeId v = 0; v < n; ++v) lift_[k][v] = lift_[k - 1][lift_[k - 1][v]];
}

inline NodeId Hierarchy::lca(NodeId a, NodeId b) const {
  if (is_ancestor(a, b)) return a;
  if (is_ancestor(b, a)) return b;
  // Lift a until its parent is an ancestor of b.
  for (int k = static_cast<int>(lift_.size()) - 1; k >= 0; --k)
    if (!is_ancestor(lift_[k][a], b)) a = lift_[k][a];
  return parent_[a];
}

inline Hierarchy Hierarchy::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open hierarchy file " + path);
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      fail(ErrorKind::FormatError,
           path + ":" + std::to_string(lineno) + ": expected parent<TAB>child");
    edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return from_edges(edges);
}

inline Hierarchy Hierarchy::augment_with_stop_nodes(
    const std::vector<NodeId>& internal) const {
  for (NodeId n : internal)
    if (is_leaf(n))
      fail(ErrorKind::NotInternal, "node " + name(n) + " is a leaf");
  std::vector<char> marked(node_count(), 0);
  for (NodeId n : internal) marked[n] = 1;

  std::vector<std::pair<std::string, std::string>> edges;
  for (NodeId v = 0; v < node_count(); ++v) {
    for (NodeId c : children(v)) edges.emplace_back(name(v), name(c));
    if (marked[v]) edges.emplace_back(name(v), name(v) + "#stop");
  }
  return from_edges(edges);
}

// Validation policy: reject entries below -1e-12 or sums outside 1 +/- 1e-6;
// clamp the remaining tiny negatives to zero and renormalize. Model outputs
// carry float noise, so exact simplex membership is not required on input.
inline LeafDistribution make_distribution(const Hierarchy& h,
                                          std::vector<double> probs) {
  if (static_cast<int>(probs.size()) != h.leaf_count())
    fail(ErrorKind::LengthMismatch,
         "expected " + std::to_string(h.leaf_count()) + " entries, got " +
             std::to_string(probs.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    double x = probs[i];
    if (!(x > -kProbNegativeTol))  // also catches NaN
      fail(ErrorKind::FormatError,
           "negative probability at leaf index " + std::to_string(i));
    if (x < 0) x = 0.0;
    probs[i] = x;
    sum += x;
  }
  if (sum < 1.0 - kProbSumTol || sum > 1.0 + kProbSumTol)
    fail(ErrorKind::FormatError,
         "probabilities sum to " + std::to_string(sum));
  for (double& x : probs) x /= sum;
  return LeafDistribution{std::move(probs)};
}

// p(n) = sum of p over the leaf descendants of n, by bottom-up summation.
inline NodeScores aggregate(const Hierarchy& h, const LeafDistribution& dist) {
  if (dist.size() != h.leaf_count())
    fail(ErrorKind::LengthMismatch, "distribution does not match hierarchy");
  std::vector<double> v(h.node_count(), 0.0);
  for (NodeId n = h.node_count() - 1; n >= 0; --n) {
    if (h.is_leaf(n)) {
      v[n] = dist[h.leaf_index(n)];
    } else {
      double s = 0.0;
      for (NodeId c : h.children(n)) s += v[c];
      v[n] = std::min(s, 1.0);  // summation noise must not overshoot the simplex
    }
  }
  return NodeScores{std::move(v)};
}

}  // namespace hierdec
