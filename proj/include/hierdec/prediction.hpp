#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "hierdec/errors.hpp"
#include "hierdec/hierarchy.hpp"

namespace hierdec {

// Union of the (inclusive, root-containing) ancestor chains of the given
// nodes, returned sorted by id.
inline std::vector<NodeId> augmented_set(const Hierarchy& h,
                                         const std::vector<NodeId>& nodes) {
  std::vector<NodeId> aug;
  for (NodeId n : nodes)
    for (NodeId v = n; v != kNoNode; v = h.parent(v)) aug.push_back(v);
  std::sort(aug.begin(), aug.end());
  aug.erase(std::unique(aug.begin(), aug.end()), aug.end());
  return aug;
}

inline bool is_antichain(const Hierarchy& h, const std::vector<NodeId>& nodes) {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (h.is_ancestor(nodes[i], nodes[j]) || h.is_ancestor(nodes[j], nodes[i]))
        return false;
  return true;
}

// Tagged prediction value: a single leaf, a single node, or an antichain of
// mutually exclusive nodes together with its ancestor-augmented form.
struct Prediction {
  enum class Tag { Leaf, Node, NodeSet };

  Tag tag = Tag::Node;
  NodeId node = kNoNode;            // Leaf / Node
  std::vector<NodeId> antichain;    // NodeSet, sorted by id
  std::vector<NodeId> augmented;    // NodeSet, sorted by id, root-inclusive

  static Prediction leaf(NodeId l) { return {Tag::Leaf, l, {}, {}}; }
  static Prediction single_node(NodeId n) { return {Tag::Node, n, {}, {}}; }

  static Prediction node_set(const Hierarchy& h, std::vector<NodeId> nodes) {
    if (nodes.empty())
      fail(ErrorKind::InvalidParam, "empty node-set prediction");
    std::sort(nodes.begin(), nodes.end());
    if (!is_antichain(h, nodes))
      fail(ErrorKind::InvalidParam, "node set is not mutually exclusive");
    Prediction p;
    p.tag = Tag::NodeSet;
    p.augmented = augmented_set(h, nodes);
    p.antichain = std::move(nodes);
    return p;
  }

  // Augmented form regardless of tag; single nodes become their own chain.
  std::vector<NodeId> as_augmented(const Hierarchy& h) const {
    if (tag == Tag::NodeSet) return augmented;
    return augmented_set(h, {node});
  }

  std::string display(const Hierarchy& h) const {
    if (tag != Tag::NodeSet) return h.name(node);
    std::string out;
    for (std::size_t i = 0; i < antichain.size(); ++i) {
      if (i) out += ' ';
      out += h.name(antichain[i]);
    }
    return out;
  }
};

}  // namespace hierdec
