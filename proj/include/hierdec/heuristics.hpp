#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "hierdec/decode_node.hpp"
#include "hierdec/errors.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"
#include "hierdec/prediction.hpp"

namespace hierdec {

// Baseline decoders. All are pure maps from a leaf distribution to a single
// leaf or node; ties always go to the smallest id.
struct HeuristicKind {
  enum class Tag {
    ArgmaxLeaf,
    TopDown,
    HieSelf,
    KarthikLeaf,
    Majority,
    ConfidenceThreshold,
    Plurality,
    Darts,
    ExpectedInfo,
  };

  Tag tag = Tag::ArgmaxLeaf;
  double param = 0.0;  // tau / lambda

  static HeuristicKind argmax() { return {Tag::ArgmaxLeaf, 0.0}; }
  static HeuristicKind top_down() { return {Tag::TopDown, 0.0}; }
  static HeuristicKind hie_self() { return {Tag::HieSelf, 0.0}; }
  static HeuristicKind karthik() { return {Tag::KarthikLeaf, 0.0}; }
  static HeuristicKind majority() { return {Tag::Majority, 0.0}; }
  static HeuristicKind confidence_threshold(double tau) {
    if (!(tau > 0.0 && tau <= 1.0))
      fail(ErrorKind::InvalidParam, "threshold tau must lie in (0, 1]");
    return {Tag::ConfidenceThreshold, tau};
  }
  static HeuristicKind plurality() { return {Tag::Plurality, 0.0}; }
  static HeuristicKind darts(double lambda) {
    if (!(lambda >= 0.0))
      fail(ErrorKind::InvalidParam, "darts lambda must be non-negative");
    return {Tag::Darts, lambda};
  }
  static HeuristicKind expected_info() { return {Tag::ExpectedInfo, 0.0}; }

  static std::optional<HeuristicKind> try_parse(const std::string& text) {
    std::string name = text;
    std::optional<double> param;
    if (auto colon = text.find(':'); colon != std::string::npos) {
      name = text.substr(0, colon);
      try {
        param = std::stod(text.substr(colon + 1));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    if (name == "argmax") return argmax();
    if (name == "topdown") return top_down();
    if (name == "hie-self") return hie_self();
    if (name == "karthik") return karthik();
    if (name == "majority") return majority();
    if (name == "threshold") {
      if (!param) fail(ErrorKind::InvalidParam, "threshold needs tau, e.g. threshold:0.6");
      return confidence_threshold(*param);
    }
    if (name == "plurality") return plurality();
    if (name == "darts") {
      if (!param) fail(ErrorKind::InvalidParam, "darts needs lambda, e.g. darts:0.5");
      return darts(*param);
    }
    if (name == "expinfo") return expected_info();
    return std::nullopt;
  }

  static HeuristicKind parse(const std::string& text) {
    auto kind = try_parse(text);
    if (!kind) fail(ErrorKind::InvalidParam, "unknown heuristic '" + text + "'");
    return *kind;
  }

  std::string name() const {
    char buf[48];
    switch (tag) {
      case Tag::ArgmaxLeaf: return "argmax";
      case Tag::TopDown: return "topdown";
      case Tag::HieSelf: return "hie-self";
      case Tag::KarthikLeaf: return "karthik";
      case Tag::Majority: return "majority";
      case Tag::ConfidenceThreshold:
        std::snprintf(buf, sizeof buf, "threshold:%g", param);
        return buf;
      case Tag::Plurality: return "plurality";
      case Tag::Darts:
        std::snprintf(buf, sizeof buf, "darts:%g", param);
        return buf;
      case Tag::ExpectedInfo: return "expinfo";
    }
    return "?";
  }
};

namespace detail {

inline Prediction argmax_leaf(const Hierarchy& h, const LeafDistribution& dist) {
  int best = 0;
  for (int li = 1; li < h.leaf_count(); ++li)
    if (dist[li] > dist[best]) best = li;
  return Prediction::leaf(h.leaf_at(best));
}

inline Prediction top_down(const Hierarchy& h, const NodeScores& p) {
  NodeId n = h.root();
  while (!h.is_leaf(n)) {
    auto ch = h.children(n);
    NodeId best = ch[0];
    for (NodeId c : ch)
      if (p[c] > p[best]) best = c;
    n = best;
  }
  return Prediction::leaf(n);
}

inline Prediction hie_self(const Hierarchy& h, const LeafDistribution& dist,
                           const NodeScores& p) {
  int best = 0;
  double best_score = -1.0;
  for (int li = 0; li < h.leaf_count(); ++li) {
    NodeId l = h.leaf_at(li);
    double s = p[h.parent(l)] * dist[li];
    if (s > best_score) {
      best_score = s;
      best = li;
    }
  }
  return Prediction::leaf(h.leaf_at(best));
}

// Most informative node with p(n) > tau; the root is the fallback when
// nothing clears the bar.
inline Prediction confidence_threshold(const Hierarchy& h, const NodeScores& p,
                                       double tau) {
  NodeId best = kNoNode;
  for (NodeId n = 0; n < h.node_count(); ++n) {
    if (!(p[n] > tau)) continue;
    if (best == kNoNode || h.info(n) > h.info(best)) best = n;
  }
  if (best == kNoNode) best = h.root();
  return Prediction::single_node(best);
}

// Most informative node strictly more likely than every non-ancestor
// (descendants included). The root is the fallback: under a point mass the
// whole ancestor chain ties and nothing qualifies.
inline Prediction plurality(const Hierarchy& h, const NodeScores& p) {
  // Any chain excludes at most depth+1 nodes, so one of the top depth+2
  // scores survives outside every chain.
  int keep = std::min(h.node_count(), h.max_depth() + 2);
  std::vector<NodeId> top(h.node_count());
  for (NodeId n = 0; n < h.node_count(); ++n) top[n] = n;
  std::partial_sort(top.begin(), top.begin() + keep, top.end(),
                    [&](NodeId a, NodeId b) {
                      if (p[a] != p[b]) return p[a] > p[b];
                      return a < b;
                    });
  top.resize(keep);

  NodeId best = kNoNode;
  for (NodeId n = 0; n < h.node_count(); ++n) {
    double rival = -1.0;
    for (NodeId z : top) {
      if (h.is_ancestor(z, n)) continue;  // z on n's ancestor chain
      rival = p[z];
      break;
    }
    if (!(p[n] > rival)) continue;
    if (best == kNoNode || h.info(n) > h.info(best)) best = n;
  }
  if (best == kNoNode) best = h.root();
  return Prediction::single_node(best);
}

inline Prediction darts(const Hierarchy& h, const NodeScores& p, double lambda) {
  NodeId best = 0;
  double best_score = (h.info(0) + lambda) * p[0];
  for (NodeId n = 1; n < h.node_count(); ++n) {
    double s = (h.info(n) + lambda) * p[n];
    if (s > best_score) {
      best_score = s;
      best = n;
    }
  }
  return Prediction::single_node(best);
}

}  // namespace detail

inline Prediction decode_heuristic(const HeuristicKind& kind, const Hierarchy& h,
                                   const LeafDistribution& dist) {
  switch (kind.tag) {
    case HeuristicKind::Tag::ArgmaxLeaf:
      return detail::argmax_leaf(h, dist);
    case HeuristicKind::Tag::TopDown:
      return detail::top_down(h, aggregate(h, dist));
    case HeuristicKind::Tag::HieSelf:
      return detail::hie_self(h, dist, aggregate(h, dist));
    case HeuristicKind::Tag::KarthikLeaf:
      return decode_leaf_bayes(
          CostModel::builtin(MetricKind::eta_lca(), CandidateSpace::Leaves), h,
          dist);
    case HeuristicKind::Tag::Majority:
      return detail::confidence_threshold(h, aggregate(h, dist), 0.5);
    case HeuristicKind::Tag::ConfidenceThreshold:
      return detail::confidence_threshold(h, aggregate(h, dist), kind.param);
    case HeuristicKind::Tag::Plurality:
      return detail::plurality(h, aggregate(h, dist));
    case HeuristicKind::Tag::Darts:
      return detail::darts(h, aggregate(h, dist), kind.param);
    case HeuristicKind::Tag::ExpectedInfo:
      return detail::darts(h, aggregate(h, dist), 0.0);
  }
  fail(ErrorKind::Internal, "unreachable");
}

}  // namespace hierdec
