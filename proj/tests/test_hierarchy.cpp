#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hierdec/hierarchy.hpp"
#include "hierdec/synthdata.hpp"
#include "test_support.hpp"

using namespace hierdec;
using testsupport::five_node_tree;
using Catch::Approx;

namespace {

// Independent leaf-descendant enumeration by child-list DFS, for checking
// the precomputed spans and the aggregation.
std::vector<NodeId> dfs_leaves(const Hierarchy& h, NodeId n) {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{n};
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    if (h.is_leaf(v)) out.push_back(v);
    auto ch = h.children(v);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

}  // namespace

TEST_CASE("five-node tree structure") {
  Hierarchy h = five_node_tree();
  REQUIRE(h.node_count() == 5);
  REQUIRE(h.leaf_count() == 3);

  // Pre-order ids follow edge order.
  CHECK(h.name(0) == "r");
  CHECK(h.name(1) == "A");
  CHECK(h.name(2) == "a1");
  CHECK(h.name(3) == "a2");
  CHECK(h.name(4) == "b");

  CHECK(h.depth(0) == 0);
  CHECK(h.depth(1) == 1);
  CHECK(h.depth(2) == 2);
  CHECK(h.depth(3) == 2);
  CHECK(h.depth(4) == 1);
  CHECK(h.max_depth() == 2);
  CHECK(h.min_leaf_depth() == 1);

  CHECK(h.leaf_span(1) == std::pair<int, int>{0, 2});
  CHECK(h.leaf_span(0) == std::pair<int, int>{0, 3});
  CHECK(h.subtree_max_leaf_depth(0) == 2);
  CHECK(h.subtree_max_leaf_depth(4) == 1);

  CHECK(h.info(0) == Approx(0.0));
  CHECK(h.info(1) == Approx(std::log(1.5)));
  CHECK(h.info(2) == Approx(std::log(3.0)));

  CHECK(h.anchor(1) == 1);
  CHECK(h.anchor(2) == 1);
  CHECK(h.anchor(3) == 1);
  CHECK(h.anchor(4) == 4);
}

TEST_CASE("lca queries") {
  Hierarchy h = five_node_tree();
  NodeId a1 = h.find("a1"), a2 = h.find("a2"), b = h.find("b"), A = h.find("A");
  CHECK(h.lca(a1, a2) == A);
  CHECK(h.lca(a1, b) == h.root());
  for (NodeId n = 0; n < h.node_count(); ++n) CHECK(h.lca(n, n) == n);
  CHECK(h.lca(A, a1) == A);
  CHECK(h.lca(a1, A) == A);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_MATCHES(Hierarchy::from_edges({{"r", "a"}, {"a", "r"}}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::CycleDetected;
                       }));
  CHECK_THROWS_MATCHES(
      Hierarchy::from_edges({{"r", "a"}, {"r", "a"}}), Error,
      Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.kind() == ErrorKind::DuplicateChildEdge;
      }));
  CHECK_THROWS_MATCHES(
      Hierarchy::from_edges({{"r", "a"}, {"s", "b"}}), Error,
      Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.kind() == ErrorKind::MultipleRoots;
      }));
  CHECK_THROWS_MATCHES(
      Hierarchy::from_edges({{"r", "a"}, {"x", "a"}}), Error,
      Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.kind() == ErrorKind::DuplicateChildEdge;
      }));
  // Cycle hanging off a valid tree.
  CHECK_THROWS_MATCHES(
      Hierarchy::from_edges({{"r", "a"}, {"x", "y"}, {"y", "x"}}), Error,
      Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.kind() == ErrorKind::CycleDetected;
      }));
}

TEST_CASE("aggregate on the running example") {
  Hierarchy h = five_node_tree();
  NodeScores p = aggregate(h, testsupport::example_dist(h));
  CHECK(p[h.find("A")] == Approx(0.7));
  CHECK(p[h.root()] == Approx(1.0));
  CHECK(p[h.find("b")] == Approx(0.3));

  // Point mass: ancestors carry 1, everything else 0.
  LeafDistribution point = make_distribution(h, {0.0, 1.0, 0.0});
  NodeScores q = aggregate(h, point);
  CHECK(q[h.find("a2")] == 1.0);
  CHECK(q[h.find("A")] == 1.0);
  CHECK(q[h.root()] == 1.0);
  CHECK(q[h.find("a1")] == 0.0);
  CHECK(q[h.find("b")] == 0.0);

  CHECK_THROWS_MATCHES(aggregate(h, LeafDistribution{{0.5, 0.5}}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::LengthMismatch;
                       }));
}

TEST_CASE("aggregate matches brute-force summation on random trees") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    Hierarchy h = random_tree(rng, 40, 1, 4);  // single-child nodes allowed
    LeafDistribution d = random_distribution(rng, h, 0.7);
    NodeScores p = aggregate(h, d);
    for (NodeId n = 0; n < h.node_count(); ++n) {
      double direct = 0.0;
      for (NodeId l : dfs_leaves(h, n)) direct += d[h.leaf_index(l)];
      CHECK(std::abs(p[n] - direct) <= 1e-12);
      if (n != h.root()) CHECK(p[n] <= p[h.parent(n)] + 1e-12);
    }
    CHECK(p[h.root()] == Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("pre-order ids give contiguous subtrees") {
  std::mt19937_64 rng(11);
  Hierarchy big = random_tree(rng, 10000, 1, 5);
  REQUIRE(big.node_count() > 9000);
  for (NodeId n = 0; n < big.node_count(); ++n) {
    auto leaves = dfs_leaves(big, n);
    auto [lo, hi] = big.leaf_span(n);
    REQUIRE(hi - lo == static_cast<int>(leaves.size()));
    for (std::size_t i = 0; i < leaves.size(); ++i)
      REQUIRE(big.leaf_index(leaves[i]) == lo + static_cast<int>(i));
    for (NodeId c : big.children(n)) {
      REQUIRE(c > n);
      REQUIRE(c < big.subtree_end(n));
      REQUIRE(big.is_ancestor(n, c));
    }
  }
}

TEST_CASE("distribution validation policy") {
  Hierarchy h = five_node_tree();
  // A tiny negative is clamped and the vector renormalized.
  LeafDistribution d = make_distribution(h, {0.5, 0.5 + 2e-13, -5e-13});
  CHECK(d[2] == 0.0);
  double sum = d[0] + d[1] + d[2];
  CHECK(sum == Approx(1.0).margin(1e-15));

  CHECK_THROWS_AS(make_distribution(h, {0.5, 0.5, -1e-6}), Error);
  CHECK_THROWS_AS(make_distribution(h, {0.3, 0.3, 0.3}), Error);   // sums to 0.9
  CHECK_THROWS_AS(make_distribution(h, {0.5, 0.5, 0.2}), Error);   // sums to 1.2
  CHECK_NOTHROW(make_distribution(h, {0.4, 0.3, 0.3 + 5e-7}));     // inside band
}

TEST_CASE("stop-node augmentation") {
  Hierarchy h = five_node_tree();
  Hierarchy g = h.augment_with_stop_nodes({h.find("A")});
  REQUIRE(g.node_count() == 6);
  NodeId stop = g.find("A#stop");
  REQUIRE(stop != kNoNode);
  CHECK(g.is_leaf(stop));
  CHECK(g.depth(stop) == 2);
  CHECK(g.parent(stop) == g.find("A"));

  // Existing nodes keep their relative order.
  CHECK(g.find("r") < g.find("A"));
  CHECK(g.find("A") < g.find("a1"));
  CHECK(g.find("a1") < g.find("a2"));
  CHECK(g.find("a2") < g.find("b"));

  Hierarchy same = h.augment_with_stop_nodes({});
  CHECK(same.node_count() == h.node_count());
  for (NodeId n = 0; n < h.node_count(); ++n)
    CHECK(same.name(n) == h.name(n));

  CHECK_THROWS_MATCHES(h.augment_with_stop_nodes({h.find("a1")}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::NotInternal;
                       }));
}

TEST_CASE("hierarchy file loading") {
  testsupport::TempDir tmp;
  std::string path = tmp.write("t.tsv",
                               "# comment line\n"
                               "r\tA\n"
                               "A\ta1\n"
                               "A\ta2\n"
                               "r\tb\n");
  Hierarchy h = Hierarchy::from_file(path);
  CHECK(h.node_count() == 5);
  CHECK(h.leaf_count() == 3);

  std::string bad = tmp.write("bad.tsv", "r A\n");
  CHECK_THROWS_AS(Hierarchy::from_file(bad), Error);
  CHECK_THROWS_AS(Hierarchy::from_file(tmp.path("missing.tsv")), Error);
}

TEST_CASE("shaped tree hits the published taxonomy statistics") {
  Hierarchy h = shaped_tree(843, 608, 12);
  CHECK(h.node_count() == 843);
  CHECK(h.leaf_count() == 608);
  CHECK(h.max_depth() == 12);

  std::vector<double> uniform(608, 1.0 / 608.0);
  NodeScores p = aggregate(h, make_distribution(h, uniform));
  CHECK(std::abs(p[h.root()] - 1.0) <= 1e-9);
}
