#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hierdec/decode_node.hpp"
#include "hierdec/heuristics.hpp"
#include "hierdec/synthdata.hpp"
#include "test_support.hpp"

using namespace hierdec;
using testsupport::five_node_tree;

TEST_CASE("heuristic worked examples") {
  Hierarchy h = five_node_tree();
  LeafDistribution d = testsupport::example_dist(h);

  CHECK(decode_heuristic(HeuristicKind::argmax(), h, d).node == h.find("a1"));
  CHECK(decode_heuristic(HeuristicKind::majority(), h, d).node == h.find("A"));

  // Plurality: a1 beats all its non-ancestors {a2, b}; it is the most
  // informative qualifier.
  CHECK(decode_heuristic(HeuristicKind::plurality(), h, d).node == h.find("a1"));

  // Top-down with a tie at the leaf level resolves to the smaller id.
  LeafDistribution tied = make_distribution(h, {0.35, 0.35, 0.30});
  Prediction td = decode_heuristic(HeuristicKind::top_down(), h, tied);
  CHECK(td.tag == Prediction::Tag::Leaf);
  CHECK(td.node == h.find("a1"));

  CHECK(decode_heuristic(HeuristicKind::karthik(), h, d).node == h.find("a1"));

  // hie-self weighs parents in: b wins on 1.0 * 0.30 against a1's 0.7 * 0.40.
  CHECK(decode_heuristic(HeuristicKind::hie_self(), h, d).node == h.find("b"));
}

TEST_CASE("majority equals the closed-form threshold rule") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 30; ++trial) {
    Hierarchy h = random_tree(rng, 30, 2, 3);
    LeafDistribution d = random_distribution(rng, h, trial % 2 ? 0.3 : 1.0);
    CHECK(decode_heuristic(HeuristicKind::majority(), h, d).node ==
          decode_threshold_closed_form(h, d, 0.5).node);
  }
}

TEST_CASE("expected information is darts at lambda zero") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    Hierarchy h = random_tree(rng, 25, 2, 3);
    LeafDistribution d = random_distribution(rng, h, 0.5);
    CHECK(decode_heuristic(HeuristicKind::expected_info(), h, d).node ==
          decode_heuristic(HeuristicKind::darts(0.0), h, d).node);
  }
}

TEST_CASE("returned nodes satisfy their defining conditions") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 25; ++trial) {
    Hierarchy h = random_tree(rng, 30, 2, 3);
    LeafDistribution d = random_distribution(rng, h, 0.4);
    NodeScores p = aggregate(h, d);

    for (double tau : {0.3, 0.5, 0.8}) {
      NodeId n = decode_heuristic(HeuristicKind::confidence_threshold(tau), h, d).node;
      CHECK((p[n] > tau || n == h.root()));
    }

    NodeId pl = decode_heuristic(HeuristicKind::plurality(), h, d).node;
    if (pl != h.root()) {
      for (NodeId z = 0; z < h.node_count(); ++z)
        if (!h.is_ancestor(z, pl)) CHECK(p[pl] > p[z]);
    }
  }
}

TEST_CASE("every heuristic yields a valid prediction on degenerate inputs") {
  std::mt19937_64 rng(79);
  std::vector<HeuristicKind> kinds = {
      HeuristicKind::argmax(),      HeuristicKind::top_down(),
      HeuristicKind::hie_self(),    HeuristicKind::karthik(),
      HeuristicKind::majority(),    HeuristicKind::confidence_threshold(0.9),
      HeuristicKind::plurality(),   HeuristicKind::darts(0.5),
      HeuristicKind::expected_info()};
  for (int trial = 0; trial < 10; ++trial) {
    Hierarchy h = random_tree(rng, 20, 2, 3);
    std::vector<LeafDistribution> inputs;
    std::vector<double> uniform(h.leaf_count(), 1.0 / h.leaf_count());
    inputs.push_back(make_distribution(h, uniform));
    std::vector<double> point(h.leaf_count(), 0.0);
    point[trial % h.leaf_count()] = 1.0;
    inputs.push_back(make_distribution(h, point));
    for (const auto& d : inputs) {
      for (const auto& kind : kinds) {
        Prediction pred = decode_heuristic(kind, h, d);
        REQUIRE(pred.tag != Prediction::Tag::NodeSet);
        REQUIRE(pred.node >= 0);
        REQUIRE(pred.node < h.node_count());
        if (kind.tag == HeuristicKind::Tag::ArgmaxLeaf ||
            kind.tag == HeuristicKind::Tag::TopDown ||
            kind.tag == HeuristicKind::Tag::HieSelf ||
            kind.tag == HeuristicKind::Tag::KarthikLeaf)
          REQUIRE(h.is_leaf(pred.node));
      }
    }
  }
}

TEST_CASE("point mass sends node heuristics to the leaf") {
  Hierarchy h = five_node_tree();
  LeafDistribution point = make_distribution(h, {0.0, 1.0, 0.0});
  // The most informative node with probability one is the leaf itself.
  CHECK(decode_heuristic(HeuristicKind::majority(), h, point).node == h.find("a2"));
  CHECK(decode_heuristic(HeuristicKind::plurality(), h, point).node == h.find("a2"));
  CHECK(decode_heuristic(HeuristicKind::expected_info(), h, point).node == h.find("a2"));
}

TEST_CASE("hie-self degenerates gracefully at depth-1 leaves") {
  Hierarchy flat = Hierarchy::from_edges({{"r", "l1"}, {"r", "l2"}});
  LeafDistribution d = make_distribution(flat, {0.3, 0.7});
  // Parents are the root with p = 1, so the rule reduces to argmax.
  CHECK(decode_heuristic(HeuristicKind::hie_self(), flat, d).node == flat.find("l2"));
}

TEST_CASE("parameter validation and parsing") {
  CHECK_THROWS_AS(HeuristicKind::confidence_threshold(0.0), Error);
  CHECK_THROWS_AS(HeuristicKind::confidence_threshold(1.5), Error);
  CHECK_THROWS_AS(HeuristicKind::darts(-0.1), Error);
  CHECK_THROWS_AS(HeuristicKind::parse("threshold"), Error);
  CHECK_THROWS_AS(HeuristicKind::parse("nope"), Error);

  CHECK(HeuristicKind::parse("threshold:0.6").param == 0.6);
  CHECK(HeuristicKind::parse("darts:0.25").name() == "darts:0.25");
  CHECK(HeuristicKind::parse("hie-self").tag == HeuristicKind::Tag::HieSelf);
  CHECK(!HeuristicKind::try_parse("unknown").has_value());
}
