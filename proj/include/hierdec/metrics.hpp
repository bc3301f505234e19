#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hierdec/errors.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/prediction.hpp"

namespace hierdec {

enum class Orientation { Cost, Gain };   // lower-better vs higher-better
enum class CandidateSpace { Leaves, Nodes, NodeSets };

// Differences whose magnitude falls below this are treated as exact ties in
// the reasonableness checks (float-built matrices of analytic metrics must
// not fail validation on representation noise).
inline constexpr double kStrictTol = 1e-12;
inline constexpr double kRootEqualityTol = 1e-9;

// Built-in metric catalogue. DLc carries its depth penalty c, HFBeta its
// precision/recall weight beta.
struct MetricKind {
  enum class Tag { Top1, EtaLCA, DL, DLc, WuPalmer, Zhao, HFBeta, Hamming, Jaccard };

  Tag tag = Tag::DL;
  double param = 0.0;

  static MetricKind top1() { return {Tag::Top1, 0.0}; }
  static MetricKind eta_lca() { return {Tag::EtaLCA, 0.0}; }
  static MetricKind dl() { return {Tag::DL, 0.0}; }
  static MetricKind dl_c(double c) {
    if (!(c >= 0.0)) fail(ErrorKind::InvalidParam, "dlc requires c >= 0");
    return {Tag::DLc, c};
  }
  static MetricKind wu_palmer() { return {Tag::WuPalmer, 0.0}; }
  static MetricKind zhao() { return {Tag::Zhao, 0.0}; }
  static MetricKind hf_beta(double beta) {
    if (!(beta > 0.0)) fail(ErrorKind::InvalidParam, "hf requires beta > 0");
    return {Tag::HFBeta, beta};
  }
  static MetricKind hamming() { return {Tag::Hamming, 0.0}; }
  static MetricKind jaccard() { return {Tag::Jaccard, 0.0}; }

  Orientation orientation() const {
    switch (tag) {
      case Tag::Top1:
      case Tag::EtaLCA:
      case Tag::DL:
      case Tag::DLc:
      case Tag::Hamming:
        return Orientation::Cost;
      default:
        return Orientation::Gain;
    }
  }

  CandidateSpace natural_space() const {
    switch (tag) {
      case Tag::Top1:
      case Tag::EtaLCA:
        return CandidateSpace::Leaves;
      case Tag::DL:
      case Tag::DLc:
      case Tag::WuPalmer:
      case Tag::Zhao:
        return CandidateSpace::Nodes;
      default:
        return CandidateSpace::NodeSets;
    }
  }

  bool is_set_metric() const { return natural_space() == CandidateSpace::NodeSets; }

  // Parameterized metrics are written name:param, e.g. dlc:0.5 or hf:2.
  static MetricKind parse(const std::string& text) {
    std::string name = text;
    std::optional<double> param;
    if (auto colon = text.find(':'); colon != std::string::npos) {
      name = text.substr(0, colon);
      try {
        param = std::stod(text.substr(colon + 1));
      } catch (const std::exception&) {
        fail(ErrorKind::InvalidParam, "bad metric parameter in '" + text + "'");
      }
    }
    if (name == "top1") return top1();
    if (name == "eta-lca" || name == "etalca") return eta_lca();
    if (name == "dl") return dl();
    if (name == "dlc") {
      if (!param) fail(ErrorKind::InvalidParam, "dlc needs a parameter, e.g. dlc:0.5");
      return dl_c(*param);
    }
    if (name == "wp") return wu_palmer();
    if (name == "zhao") return zhao();
    if (name == "hf") {
      if (!param) fail(ErrorKind::InvalidParam, "hf needs a parameter, e.g. hf:1");
      return hf_beta(*param);
    }
    if (name == "hamming") return hamming();
    if (name == "jaccard") return jaccard();
    fail(ErrorKind::InvalidParam, "unknown metric '" + text + "'");
  }

  std::string name() const {
    char buf[48];
    switch (tag) {
      case Tag::Top1: return "top1";
      case Tag::EtaLCA: return "eta-lca";
      case Tag::DL: return "dl";
      case Tag::DLc:
        std::snprintf(buf, sizeof buf, "dlc:%g", param);
        return buf;
      case Tag::WuPalmer: return "wp";
      case Tag::Zhao: return "zhao";
      case Tag::HFBeta:
        std::snprintf(buf, sizeof buf, "hf:%g", param);
        return buf;
      case Tag::Hamming: return "hamming";
      case Tag::Jaccard: return "jaccard";
    }
    return "?";
  }
};

// ---------------------------------------------------------------------------
// Formula application for (candidate, leaf) pairs and (set, leaf) pairs.

// Height convention inside eta-lca: height(v) = deepest leaf depth under v
// minus depth(v), so leaves have height 0. Height conventions vary across
// implementations; this one makes eta(y, y) = 0 and grow with coarseness.
inline double eta_lca_value(const Hierarchy& h, NodeId a, NodeId b) {
  NodeId c = h.lca(a, b);
  return static_cast<double>(h.subtree_max_leaf_depth(c) - h.depth(c));
}

inline double tree_distance(const Hierarchy& h, NodeId a, NodeId b) {
  NodeId c = h.lca(a, b);
  return static_cast<double>(h.depth(a) + h.depth(b) - 2 * h.depth(c));
}

inline double pair_metric_value(const MetricKind& m, const Hierarchy& h,
                                NodeId cand, NodeId y) {
  switch (m.tag) {
    case MetricKind::Tag::Top1:
      return cand == y ? 0.0 : 1.0;
    case MetricKind::Tag::EtaLCA:
      return eta_lca_value(h, cand, y);
    case MetricKind::Tag::DL:
      return tree_distance(h, cand, y);
    case MetricKind::Tag::DLc:
      return tree_distance(h, cand, y) + m.param * h.depth(cand);
    case MetricKind::Tag::WuPalmer: {
      double denom = h.depth(cand) + h.depth(y);
      if (denom == 0.0) return 1.0;
      return 2.0 * h.depth(h.lca(cand, y)) / denom;
    }
    case MetricKind::Tag::Zhao: {
      double denom = h.info(cand) + h.info(y);
      if (denom == 0.0) return 1.0;  // degenerate root-pair case
      return 2.0 * h.info(h.lca(cand, y)) / denom;
    }
    default:
      fail(ErrorKind::SpaceMismatch,
           m.name() + " is set-valued, use set_metric_value");
  }
}

inline int intersection_size(const std::vector<NodeId>& a,
                             const std::vector<NodeId>& b) {
  int count = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else ++count, ++i, ++j;
  }
  return count;
}

// Scores an already ancestor-augmented prediction against the augmented
// ancestor chain of the ground-truth leaf.
inline double set_metric_value_aug(const MetricKind& m,
                                   const std::vector<NodeId>& h_aug,
                                   const std::vector<NodeId>& y_aug) {
  double inter = intersection_size(h_aug, y_aug);
  double hs = static_cast<double>(h_aug.size());
  double ys = static_cast<double>(y_aug.size());
  switch (m.tag) {
    case MetricKind::Tag::HFBeta: {
      double b2 = m.param * m.param;
      return (1.0 + b2) * inter / (hs + b2 * ys);
    }
    case MetricKind::Tag::Hamming:
      return (hs + ys - 2.0 * inter) / ys;
    case MetricKind::Tag::Jaccard:
      return inter / (hs + ys - inter);
    default:
      fail(ErrorKind::SpaceMismatch, m.name() + " is not set-valued");
  }
}

inline double set_metric_value(const MetricKind& m, const Hierarchy& h,
                               const std::vector<NodeId>& nodes, NodeId y) {
  return set_metric_value_aug(m, augmented_set(h, nodes),
                              augmented_set(h, {y}));
}

// ---------------------------------------------------------------------------

struct DenseMatrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// Text grid: first line `rows cols`, then row-major reals.
inline DenseMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open matrix file " + path);
  int rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0)
    fail(ErrorKind::FormatError, path + ": expected 'rows cols' header");
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.a.size(); ++i)
    if (!(in >> m.a[i]))
      fail(ErrorKind::FormatError,
           path + ": expected " + std::to_string(m.a.size()) + " values");
  return m;
}

inline void save_matrix(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write matrix file " + path);
  out << m.rows << ' ' << m.cols << '\n';
  char buf[40];
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m.at(r, c));
      out << buf << (c + 1 == m.cols ? '\n' : ' ');
    }
  }
}

// A metric as either a built-in closed form or a dense candidate x leaf
// matrix. Matrices over the Nodes space index rows by NodeId, matrices over
// the Leaves space by leaf index. Immutable and shareable once built.
class CostModel {
 public:
  static CostModel builtin(MetricKind kind, CandidateSpace space) {
    if (space == CandidateSpace::NodeSets && !kind.is_set_metric())
      fail(ErrorKind::SpaceMismatch, kind.name() + " cannot score node sets");
    if (space != CandidateSpace::NodeSets && kind.is_set_metric())
      fail(ErrorKind::SpaceMismatch,
           kind.name() + " scores node sets, not single candidates");
    CostModel m;
    m.kind_ = kind;
    m.space_ = space;
    m.orientation_ = kind.orientation();
    return m;
  }

  static CostModel from_matrix(DenseMatrix matrix, Orientation orientation,
                               CandidateSpace space) {
    if (space == CandidateSpace::NodeSets)
      fail(ErrorKind::SpaceMismatch, "set metrics have no dense matrix form");
    CostModel m;
    m.space_ = space;
    m.orientation_ = orientation;
    m.matrix_ = std::move(matrix);
    m.has_matrix_ = true;
    return m;
  }

  bool has_matrix() const { return has_matrix_; }
  const DenseMatrix& matrix() const { return matrix_; }
  Orientation orientation() const { return orientation_; }
  CandidateSpace space() const { return space_; }
  const MetricKind& kind() const { return kind_; }

  // Metric value for one (candidate, ground-truth-leaf) pair, in the model's
  // native orientation.
  double value(const Hierarchy& h, NodeId cand, NodeId y) const {
    if (space_ == CandidateSpace::NodeSets)
      fail(ErrorKind::SpaceMismatch, "set-space model has no pair values");
    if (has_matrix_) {
      int row = space_ == CandidateSpace::Nodes ? cand : h.leaf_index(cand);
      return matrix_.at(row, h.leaf_index(y));
    }
    return pair_metric_value(kind_, h, cand, y);
  }

  double score(const Hierarchy& h, const Prediction& pred, NodeId y) const;

 private:
  MetricKind kind_;
  CandidateSpace space_ = CandidateSpace::Nodes;
  Orientation orientation_ = Orientation::Cost;
  DenseMatrix matrix_;
  bool has_matrix_ = false;
};

// Dense matrix materialization of a built-in pair metric.
inline CostModel build_cost_matrix(const MetricKind& kind, const Hierarchy& h,
                                   CandidateSpace space) {
  if (space == CandidateSpace::NodeSets || kind.is_set_metric())
    fail(ErrorKind::SpaceMismatch,
         "set metrics grow exponentially, no dense matrix");
  int rows = space == CandidateSpace::Nodes ? h.node_count() : h.leaf_count();
  DenseMatrix m(rows, h.leaf_count());
  for (int r = 0; r < rows; ++r) {
    NodeId cand = space == CandidateSpace::Nodes ? r : h.leaf_at(r);
    for (int c = 0; c < h.leaf_count(); ++c)
      m.at(r, c) = pair_metric_value(kind, h, cand, h.leaf_at(c));
  }
  return CostModel::from_matrix(std::move(m), kind.orientation(), space);
}

inline double CostModel::score(const Hierarchy& h, const Prediction& pred,
                               NodeId y) const {
  if (!h.is_leaf(y))
    fail(ErrorKind::SpaceMismatch, "ground truth must be a leaf");
  switch (space_) {
    case CandidateSpace::Leaves:
      if (pred.tag == Prediction::Tag::NodeSet || !h.is_leaf(pred.node))
        fail(ErrorKind::SpaceMismatch, "leaf metric needs a leaf prediction");
      return value(h, pred.node, y);
    case CandidateSpace::Nodes:
      if (pred.tag == Prediction::Tag::NodeSet)
        fail(ErrorKind::SpaceMismatch, "node metric cannot score a node set");
      return value(h, pred.node, y);
    case CandidateSpace::NodeSets:
      return set_metric_value_aug(kind_, pred.as_augmented(h),
                                  augmented_set(h, {y}));
  }
  fail(ErrorKind::Internal, "unreachable");
}

// Scores a prediction under a built-in metric in its natural space, treating
// single-node predictions as singleton sets for the set metrics.
inline double metric_score(const MetricKind& m, const Hierarchy& h,
                           const Prediction& pred, NodeId y) {
  if (m.is_set_metric())
    return set_metric_value_aug(m, pred.as_augmented(h), augmented_set(h, {y}));
  if (pred.tag == Prediction::Tag::NodeSet)
    fail(ErrorKind::SpaceMismatch, m.name() + " cannot score a node set");
  if (m.natural_space() == CandidateSpace::Leaves && !h.is_leaf(pred.node))
    fail(ErrorKind::SpaceMismatch, m.name() + " needs a leaf prediction");
  return pair_metric_value(m, h, pred.node, y);
}

// ---------------------------------------------------------------------------
// Hierarchical reasonableness.

struct ReasonablenessVerdict {
  enum class Tag { StrictReasonable, RootedReasonable, NotReasonable };

  Tag tag = Tag::NotReasonable;
  std::optional<std::pair<NodeId, NodeId>> witness;  // set iff NotReasonable

  const char* to_string() const {
    switch (tag) {
      case Tag::StrictReasonable: return "StrictReasonable";
      case Tag::RootedReasonable: return "RootedReasonable";
      case Tag::NotReasonable: return "NotReasonable";
    }
    return "?";
  }
};

// Checks the node-parent monotonicity conditions of a node-space cost model.
// Gain models are negated on the fly. StrictReasonable: moving one edge away
// from the truth strictly hurts, toward it strictly helps, for every
// (non-root node, leaf) pair. RootedReasonable relaxes the away-direction to
// equality when the pair meets only at the root.
inline ReasonablenessVerdict check_reasonable(const CostModel& model,
                                              const Hierarchy& h) {
  if (model.space() != CandidateSpace::Nodes)
    fail(ErrorKind::SpaceMismatch, "reasonableness is a node-space property");
  double sign = model.orientation() == Orientation::Gain ? -1.0 : 1.0;

  bool strict_ok = true, rooted_ok = true;
  std::optional<std::pair<NodeId, NodeId>> rooted_witness;
  for (NodeId n = 1; n < h.node_count() && (strict_ok || rooted_ok); ++n) {
    NodeId up = h.parent(n);
    auto [lo, hi] = h.leaf_span(n);
    auto [alo, ahi] = h.leaf_span(h.anchor(n));
    for (int li = 0; li < h.leaf_count(); ++li) {
      NodeId l = h.leaf_at(li);
      double delta = sign * (model.value(h, n, l) - model.value(h, up, l));
      if (std::abs(delta) < kStrictTol) delta = 0.0;
      bool in_subtree = li >= lo && li < hi;
      if (in_subtree) {
        if (!(delta < 0.0)) {
          strict_ok = rooted_ok = false;
          if (!rooted_witness) rooted_witness = {{n, l}};
        }
        continue;
      }
      if (!(delta > 0.0)) strict_ok = false;
      bool meets_at_root = !(li >= alo && li < ahi);
      if (meets_at_root) {
        if (std::abs(delta) > kRootEqualityTol) {
          rooted_ok = false;
          if (!rooted_witness) rooted_witness = {{n, l}};
        }
      } else if (!(delta > 0.0)) {
        rooted_ok = false;
        if (!rooted_witness) rooted_witness = {{n, l}};
      }
    }
  }
  if (strict_ok) return {ReasonablenessVerdict::Tag::StrictReasonable, {}};
  if (rooted_ok) return {ReasonablenessVerdict::Tag::RootedReasonable, {}};
  if (!rooted_witness) rooted_witness = {{NodeId{1}, h.leaf_at(0)}};
  return {ReasonablenessVerdict::Tag::NotReasonable, rooted_witness};
}

}  // namespace hierdec
