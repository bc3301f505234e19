#pragma once

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "hierdec/decode_hfbeta.hpp"
#include "hierdec/decode_node.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"
#include "hierdec/oracle.hpp"
#include "hierdec/synthdata.hpp"

namespace hierdec::verify {

// Randomized oracle-equivalence and bound checks. Each check_* function
// exercises one fresh random instance; the CLI `verify` subcommand and the
// acceptance suite drive them with their own trial counts and seeds.

inline constexpr double kRiskTol = 1e-12;

struct Result {
  long checks = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
  void expect(bool cond, const std::string& message) {
    ++checks;
    if (!cond && failures.size() < 32) failures.push_back(message);
    if (!cond && failures.size() >= 32) failures.back() = "... more failures";
  }
};

namespace detail {

inline double expected_pair_cost(const CostModel& model, const Hierarchy& h,
                                 NodeId cand, const LeafDistribution& dist) {
  double risk = 0.0;
  for (int li = 0; li < h.leaf_count(); ++li)
    risk += dist[li] * model.value(h, cand, h.leaf_at(li));
  return risk;
}

// Decode one instance, compare against the exhaustive scan, and re-check the
// pruning bounds that come with the thresholds.
inline void check_node_model(Result& res, const CostModel& model,
                             const Hierarchy& h, const LeafDistribution& dist,
                             Variant variant, const std::string& tag) {
  Thresholds t = compute_thresholds(model, h, variant);
  for (NodeId n = 1; n < h.node_count(); ++n)
    res.expect(t.q_min[n] <= t.q_max[n] + 1e-15,
               tag + ": q_min > q_max at node " + h.name(n));

  NodeScores p = aggregate(h, dist);
  std::vector<NodeId> cands = find_candidate_set(h, p, t);
  if (t.q_min_floor > 0.0) {
    double bound = (h.max_depth() + 1) / t.q_min_floor;
    res.expect(static_cast<double>(cands.size()) <= bound + 1e-9,
               tag + ": |S| exceeds (d_max+1)/q_min_floor");
  }

  oracle::NodeBrute brute = oracle::brute_force_node(model, h, dist);
  bool in_set = false;
  for (NodeId n : cands) in_set |= n == brute.node;
  res.expect(in_set, tag + ": brute-force argbest pruned from the candidate set");

  NodeDecode fast = decode_reasonable_detailed(model, h, dist, t);
  res.expect(std::abs(fast.value - brute.value) <= kRiskTol,
             tag + ": risk mismatch fast=" + std::to_string(fast.value) +
                 " brute=" + std::to_string(brute.value));
}

}  // namespace detail

// Node decoding across the built-in metrics plus a fresh strictly-reasonable
// random matrix, on a random tree with a Dirichlet leaf distribution.
inline void check_node_instance(Result& res, std::mt19937_64& rng,
                                int max_nodes, bool with_random_matrix) {
  std::uniform_int_distribution<int> size(6, std::max(6, max_nodes));
  std::uniform_real_distribution<double> alpha_pick(0.0, 1.0);
  Hierarchy h = random_tree(rng, size(rng));
  double alpha = alpha_pick(rng) < 0.5 ? 0.3 : 1.0;
  LeafDistribution dist = random_distribution(rng, h, alpha);

  for (double c : {-1.0, 0.25, 0.5, 1.0}) {  // -1 marks plain DL
    MetricKind m = c < 0 ? MetricKind::dl() : MetricKind::dl_c(c);
    CostModel model = CostModel::builtin(m, CandidateSpace::Nodes);
    detail::check_node_model(res, model, h, dist, Variant::Strict, m.name());

    // Closed-form consistency: deepest node above (1+c)/2 is the argmin.
    double tau = (1.0 + std::max(c, 0.0)) / 2.0;
    Thresholds t = compute_thresholds(model, h, Variant::Strict);
    NodeDecode fast = decode_reasonable_detailed(model, h, dist, t);
    Prediction closed = decode_threshold_closed_form(h, dist, tau);
    if (closed.node != fast.node) {
      double closed_risk = detail::expected_pair_cost(model, h, closed.node, dist);
      res.expect(std::abs(closed_risk - fast.value) <= kRiskTol,
                 m.name() + ": closed form disagrees beyond a tie");
    } else {
      res.expect(true, "");
    }
  }

  for (MetricKind m : {MetricKind::wu_palmer(), MetricKind::zhao()}) {
    CostModel model = CostModel::builtin(m, CandidateSpace::Nodes);
    detail::check_node_model(res, model, h, dist, Variant::Rooted, m.name());
  }

  if (with_random_matrix) {
    CostModel model = random_strict_reasonable_matrix(rng, h);
    detail::check_node_model(res, model, h, dist, Variant::Strict, "random-matrix");
  }
}

// hF_beta decoding against exhaustive antichain enumeration.
inline void check_hfbeta_instance(Result& res, std::mt19937_64& rng,
                                  int max_nodes) {
  std::uniform_int_distribution<int> size(4, std::max(4, max_nodes));
  Hierarchy h = random_tree(rng, size(rng));
  std::uniform_real_distribution<double> alpha_pick(0.0, 1.0);
  double alpha = alpha_pick(rng) < 0.5 ? 0.3 : 1.0;
  LeafDistribution dist = random_distribution(rng, h, alpha);

  for (double beta : {0.5, 1.0, 2.0}) {
    MetricKind m = MetricKind::hf_beta(beta);
    HFBetaDecode fast = decode_hfbeta_detailed(h, dist, beta);
    oracle::SetBrute brute = oracle::brute_force_set(m, h, dist);
    char tag[32];
    std::snprintf(tag, sizeof tag, "hf:%g", beta);

    res.expect(std::abs(fast.utility - brute.value) <= kRiskTol,
               std::string(tag) + ": utility mismatch fast=" +
                   std::to_string(fast.utility) +
                   " brute=" + std::to_string(brute.value));

    HFBetaContext ctx = HFBetaContext::make(h, beta);
    NodeScores p = aggregate(h, dist);
    std::vector<NodeId> q = q_set(h, p, beta);
    res.expect(static_cast<double>(q.size()) <= ctx.n_max + 1e-9,
               std::string(tag) + ": |Q(p)| exceeds N_max");
    res.expect(fast.utility >= hfbeta_utility_lower_bound(h, beta) - kRiskTol,
               std::string(tag) + ": utility below the root lower bound");

    std::vector<char> in_q(h.node_count(), 0);
    for (NodeId n : q) in_q[n] = 1;
    for (NodeId n : q)
      res.expect(n == h.root() || in_q[h.parent(n)],
                 std::string(tag) + ": Q(p) is not ancestor-closed");
    for (NodeId n : brute.antichain)
      res.expect(in_q[n],
                 std::string(tag) + ": oracle optimum outside Q(p)");

    // The decoded utility must also match a direct evaluation of its own
    // antichain.
    double direct =
        oracle::expected_set_value(m, h, fast.prediction.antichain, dist);
    res.expect(std::abs(direct - fast.utility) <= kRiskTol,
               std::string(tag) + ": reported utility does not match its set");
  }
}

// Antichain combinatorics and the phi bijection on small trees where every
// internal node has at least two children.
inline void check_structure_instance(Result& res, std::mt19937_64& rng,
                                     int max_nodes) {
  std::uniform_int_distribution<int> size(3, std::max(3, max_nodes));
  Hierarchy h = random_tree(rng, size(rng));

  std::uint64_t closed_form = oracle::count_antichains(h);
  std::uint64_t streamed = 0;
  oracle::for_each_antichain(
      h, [&](const std::vector<NodeId>& a) {
        streamed += is_antichain(h, a) ? 1 : 0;
      });
  res.expect(streamed == closed_form,
             "enumerated antichain count disagrees with the closed form");
  double lower = std::pow(2.0, h.node_count() / 2.0) - 1.0;
  res.expect(static_cast<double>(closed_form) >= lower,
             "antichain count below 2^(n/2) - 1");
  res.expect(oracle::phi_roundtrip_check(h), "phi roundtrip failed");
}

}  // namespace hierdec::verify
