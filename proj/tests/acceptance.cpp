// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances and trial counts are pinned here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "hierdec/decode_hfbeta.hpp"
#include "hierdec/decode_node.hpp"
#include "hierdec/evalharness.hpp"
#include "hierdec/heuristics.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"
#include "hierdec/oracle.hpp"
#include "hierdec/synthdata.hpp"
#include "hierdec/verify.hpp"

using namespace hierdec;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

struct BoundTally {
  long q_order = 0;        // q_min <= q_max instances
  long s_bound = 0;        // |S| <= (d_max+1)/q_min_floor instances
  long q_size_bound = 0;   // |Q(p)| <= N_max instances
  long utility_bound = 0;  // U >= lower bound instances
  bool all_ok = true;
};

BoundTally bounds;

// --- criterion 1 -----------------------------------------------------------

void criterion1() {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20'25'01);
  const int trials = 200;
  const double tol = 1e-12;
  long instances = 0;
  bool ok = true;
  std::string first_fail;

  for (int trial = 0; trial < trials && ok; ++trial) {
    std::uniform_int_distribution<int> size(8, 40);
    Hierarchy h = random_tree(rng, size(rng), 2, 3);
    LeafDistribution d = random_distribution(rng, h, trial % 2 ? 1.0 : 0.3);

    std::vector<std::pair<CostModel, Variant>> models;
    models.emplace_back(CostModel::builtin(MetricKind::dl(), CandidateSpace::Nodes),
                        Variant::Strict);
    for (double c : {0.25, 0.5, 1.0})
      models.emplace_back(
          CostModel::builtin(MetricKind::dl_c(c), CandidateSpace::Nodes),
          Variant::Strict);
    models.emplace_back(
        CostModel::builtin(MetricKind::wu_palmer(), CandidateSpace::Nodes),
        Variant::Rooted);
    models.emplace_back(
        CostModel::builtin(MetricKind::zhao(), CandidateSpace::Nodes),
        Variant::Rooted);
    if (trial < 20)
      models.emplace_back(random_strict_reasonable_matrix(rng, h), Variant::Strict);

    for (const auto& [model, variant] : models) {
      ++instances;
      Thresholds t = compute_thresholds(model, h, variant);
      for (NodeId n = 1; n < h.node_count(); ++n) {
        ++bounds.q_order;
        if (!(t.q_min[n] <= t.q_max[n] + 1e-15)) bounds.all_ok = false;
      }
      NodeScores p = aggregate(h, d);
      std::vector<NodeId> s = find_candidate_set(h, p, t);
      ++bounds.s_bound;
      if (t.q_min_floor > 0.0 &&
          static_cast<double>(s.size()) > (h.max_depth() + 1) / t.q_min_floor + 1e-9)
        bounds.all_ok = false;

      NodeDecode fast = decode_reasonable_detailed(model, h, d, t);
      oracle::NodeBrute brute = oracle::brute_force_node(model, h, d);
      bool contained = false;
      for (NodeId n : s) contained |= n == brute.node;
      if (!contained || std::abs(fast.value - brute.value) > tol) {
        ok = false;
        first_fail = "trial " + std::to_string(trial) + " fast=" +
                     std::to_string(fast.value) + " brute=" +
                     std::to_string(brute.value);
      }
    }
  }
  double elapsed = seconds_since(start);
  ok = ok && elapsed < 30.0;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%ld instances, max |risk diff| tolerance 1e-12, %.1fs%s%s",
                instances, elapsed, first_fail.empty() ? "" : "; ",
                first_fail.c_str());
  report(1, "node-decoder oracle equivalence", ok, detail);
}

// --- criterion 2 -----------------------------------------------------------

void criterion2() {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20'25'02);
  const int trials = 200;
  const double tol = 1e-12;
  long instances = 0;
  bool ok = true;
  std::string first_fail;

  for (int trial = 0; trial < trials && ok; ++trial) {
    std::uniform_int_distribution<int> size(5, 20);
    Hierarchy h = random_tree(rng, size(rng), 2, 3);
    LeafDistribution d = random_distribution(rng, h, trial % 2 ? 1.0 : 0.3);
    for (double beta : {0.5, 1.0, 2.0}) {
      ++instances;
      HFBetaDecode fast = decode_hfbeta_detailed(h, d, beta);
      oracle::SetBrute brute =
          oracle::brute_force_set(MetricKind::hf_beta(beta), h, d);
      if (std::abs(fast.utility - brute.value) > tol) {
        ok = false;
        first_fail = "beta " + std::to_string(beta) + " fast=" +
                     std::to_string(fast.utility) + " brute=" +
                     std::to_string(brute.value);
      }

      HFBetaContext ctx = HFBetaContext::make(h, beta);
      ++bounds.q_size_bound;
      if (static_cast<double>(fast.q_size) > ctx.n_max + 1e-9)
        bounds.all_ok = false;
      ++bounds.utility_bound;
      if (fast.utility < hfbeta_utility_lower_bound(h, beta) - tol)
        bounds.all_ok = false;
    }
  }
  double elapsed = seconds_since(start);
  ok = ok && elapsed < 60.0;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%ld instances, utility tolerance 1e-12, %.1fs%s%s", instances,
                elapsed, first_fail.empty() ? "" : "; ", first_fail.c_str());
  report(2, "hF_beta decoder oracle equivalence", ok, detail);
}

// --- criterion 3 -----------------------------------------------------------

void criterion3() {
  std::mt19937_64 rng(20'25'03);
  const int trials = 1000;
  bool ok = true;
  long exact = 0, tied = 0;
  for (int trial = 0; trial < trials && ok; ++trial) {
    std::uniform_int_distribution<int> size(6, 30);
    Hierarchy h = random_tree(rng, size(rng), 2, 3);
    LeafDistribution d = random_distribution(rng, h, trial % 2 ? 1.0 : 0.3);
    double cs[] = {0.0, 0.25, 0.5, 1.0};
    double c = cs[trial % 4];
    CostModel model = CostModel::builtin(MetricKind::dl_c(c), CandidateSpace::Nodes);
    Thresholds t = compute_thresholds(model, h, Variant::Strict);
    NodeDecode fast = decode_reasonable_detailed(model, h, d, t);
    Prediction closed = decode_threshold_closed_form(h, d, (1.0 + c) / 2.0);
    if (closed.node == fast.node) {
      ++exact;
    } else {
      double closed_risk = 0.0;
      for (int li = 0; li < h.leaf_count(); ++li)
        closed_risk += d[li] * model.value(h, closed.node, h.leaf_at(li));
      if (std::abs(closed_risk - fast.value) <= 1e-12)
        ++tied;
      else
        ok = false;
    }
  }
  char detail[120];
  std::snprintf(detail, sizeof detail, "%d instances: %ld exact, %ld risk ties",
                trials, exact, tied);
  report(3, "closed-form threshold rule consistency", ok, detail);
}

// --- criterion 4 -----------------------------------------------------------

void criterion4() {
  // Structural half: antichain counts and the phi bijection. The numeric
  // bound tallies were accumulated by criteria 1 and 2.
  std::mt19937_64 rng(20'25'04);
  bool ok = bounds.all_ok;
  long count_checks = 0, phi_checks = 0;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    std::uniform_int_distribution<int> size(3, 20);
    Hierarchy h = random_tree(rng, size(rng), 2, 3);
    std::uint64_t count = oracle::count_antichains(h);
    ++count_checks;
    if (static_cast<double>(count) < std::pow(2.0, h.node_count() / 2.0) - 1.0)
      ok = false;
    ++phi_checks;
    if (!oracle::phi_roundtrip_check(h)) ok = false;
  }
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "q_min<=q_max x%ld, |S| bound x%ld, |Q| bound x%ld, utility "
                "bound x%ld, counts x%ld, phi x%ld",
                bounds.q_order, bounds.s_bound, bounds.q_size_bound,
                bounds.utility_bound, count_checks, phi_checks);
  report(4, "structural bounds hold on all randomized trials", ok && bounds.all_ok,
         detail);
}

// --- criteria 5 and 6 ------------------------------------------------------

struct Criterion5Data {
  Hierarchy tree;
  Dataset alpha_small;  // alpha = 0.1
  Dataset alpha_one;    // alpha = 1
};

Criterion5Data make_criterion5_data() {
  std::mt19937_64 rng(20'25'05);
  Criterion5Data data{random_tree_with_leaves(rng, 50, 2, 3)};
  data.alpha_small = synth_generate(data.tree, 20'000, 0.1, 501);
  data.alpha_one = synth_generate(data.tree, 20'000, 1.0, 502);
  return data;
}

void criterion5(const Criterion5Data& data) {
  const Hierarchy& h = data.tree;
  std::vector<MetricKind> metrics = {
      MetricKind::dl(),          MetricKind::wu_palmer(),
      MetricKind::zhao(),        MetricKind::hf_beta(0.5),
      MetricKind::hf_beta(1.0),  MetricKind::hf_beta(2.0)};
  std::vector<Decoder> heuristics;
  for (const char* name :
       {"argmax", "topdown", "hie-self", "karthik", "majority", "threshold:0.7",
        "plurality", "darts:0.5", "expinfo"})
    heuristics.push_back(make_heuristic_decoder(HeuristicKind::parse(name), h));

  bool ok = true;
  std::string worst;
  for (const Dataset* ds : {&data.alpha_small, &data.alpha_one}) {
    for (const MetricKind& metric : metrics) {
      std::vector<Decoder> decoders;
      decoders.push_back(make_optimal_decoder(metric, h));
      for (const Decoder& d : heuristics) decoders.push_back(d);
      EvalReport r = evaluate(*ds, metric, decoders, 4);
      double sign = metric.orientation() == Orientation::Gain ? -1.0 : 1.0;
      double opt = sign * r.decoders[0].mean;
      for (std::size_t i = 1; i < r.decoders.size(); ++i) {
        double heur = sign * r.decoders[i].mean;
        if (opt > heur + 3.0 * r.decoders[i].se) {
          ok = false;
          worst = metric.name() + " vs " + r.decoders[i].name;
        }
      }
    }
  }
  report(5, "Bayes dominance on oracle-labeled data", ok,
         ok ? "6 metrics x 9 heuristics x 2 alphas, N=20000, 3*SE slack"
            : "violated at " + worst);
}

void criterion6(const Criterion5Data& data) {
  const Hierarchy& h = data.tree;
  std::vector<Decoder> heuristics = {
      make_heuristic_decoder(HeuristicKind::argmax(), h)};
  SweepReport sweep = smooth_sweep(data.alpha_small, MetricKind::hf_beta(1.0),
                                   heuristics, {0.0, 0.75}, 601, true, 4);
  // Cells: lambda 0 (optimal, argmax), lambda 0.75 (optimal, argmax).
  const SweepCell& lo = sweep.cells[1];
  const SweepCell& hi = sweep.cells[3];
  double spread = std::sqrt(lo.gap_se_percent * lo.gap_se_percent +
                            hi.gap_se_percent * hi.gap_se_percent);
  bool ok = hi.gap_percent - lo.gap_percent >= 3.0 * spread;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "argmax gap %.3f%% at lambda=0 vs %.3f%% at 0.75, 3*SE=%.3f",
                lo.gap_percent, hi.gap_percent, 3.0 * spread);
  report(6, "underdetermination widens the optimality gap", ok, detail);
}

// --- criterion 7 -----------------------------------------------------------

void criterion7() {
  Hierarchy h = Hierarchy::from_edges(
      {{"r", "A"}, {"A", "a1"}, {"A", "a2"}, {"r", "b"}});
  Decoder hf = make_optimal_decoder(MetricKind::hf_beta(1.0), h);
  Decoder majority = make_heuristic_decoder(HeuristicKind::majority(), h);

  AgreementGrid grid = agreement_map(h, hf, majority, 200);
  bool fraction_ok = grid.agree_fraction > 0.0 && grid.agree_fraction < 1.0;

  bool vertices_ok = true;
  for (const auto& pt : grid.points)
    if ((pt.i == 200 && pt.j == 0) || (pt.j == 200 && pt.i == 0) ||
        (pt.i == 0 && pt.j == 0))
      vertices_ok = vertices_ok && pt.agree;

  AgreementGrid again = agreement_map(h, hf, majority, 200);
  bool stable = agreement_csv(grid) == agreement_csv(again) &&
                agreement_ppm(grid) == agreement_ppm(again);

  char detail[160];
  std::snprintf(detail, sizeof detail,
                "agreement fraction %.4f over %zu points, vertices %s, "
                "byte-stable %s",
                grid.agree_fraction, grid.points.size(),
                vertices_ok ? "agree" : "DISAGREE", stable ? "yes" : "no");
  report(7, "agreement map structure at resolution 200",
         fraction_ok && vertices_ok && stable, detail);
}

// --- criterion 8 -----------------------------------------------------------

void criterion8() {
  Hierarchy h = balanced_tree(3, 8);  // 9841 nodes, 6561 leaves
  BenchStats fast = bench(h, MetricKind::dl(), "optimal", 40, 801);
  BenchStats brute = bench(h, MetricKind::dl(), "bruteforce", 3, 802);
  double speedup = brute.mean_us / fast.mean_us;

  BenchStats hf = bench(h, MetricKind::hf_beta(1.0), "optimal", 10, 803);
  bool ok = speedup >= 5.0 && hf.mean_us < 100'000.0 &&
            fast.bound_violations == 0;
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "|N|=%d: pruned %.0f us vs brute %.0f us (%.0fx), "
                "hF_1 %.0f us/sample, mean |S| %.1f",
                h.node_count(), fast.mean_us, brute.mean_us, speedup,
                hf.mean_us, fast.mean_aux);
  report(8, "pruned decoding speed", ok, detail);
}

// --- criterion 9 -----------------------------------------------------------

void criterion9() {
  Hierarchy shaped = shaped_tree(843, 608, 12);

  // Round-trip through the on-disk format.
  std::string path = "/tmp/hierdec_acceptance_tiered.tsv";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    for (NodeId n = 0; n < shaped.node_count(); ++n)
      for (NodeId c : shaped.children(n))
        std::fprintf(f, "%s\t%s\n", shaped.name(n).c_str(), shaped.name(c).c_str());
    std::fclose(f);
  }
  Hierarchy h = Hierarchy::from_file(path);
  bool stats_ok =
      h.node_count() == 843 && h.leaf_count() == 608 && h.max_depth() == 12;

  Dataset ds = synth_generate(h, 100, 0.5, 901);
  std::vector<Decoder> decoders = {make_optimal_decoder(MetricKind::dl(), h),
                                   make_optimal_decoder(MetricKind::hf_beta(1.0), h),
                                   make_heuristic_decoder(HeuristicKind::argmax(), h)};
  bool decode_ok = true;
  for (int i = 0; i < ds.n; ++i) {
    for (const Decoder& dec : decoders) {
      Prediction p = dec.fn(ds.dist(i));
      if (p.tag == Prediction::Tag::NodeSet) {
        decode_ok = decode_ok && !p.antichain.empty();
      } else {
        decode_ok = decode_ok && p.node >= 0 && p.node < h.node_count();
      }
    }
  }
  EvalReport dl = evaluate(ds, MetricKind::dl(),
                           {decoders[0], decoders[2]}, 4);
  EvalReport hf1 = evaluate(ds, MetricKind::hf_beta(1.0),
                            {decoders[1], decoders[2]}, 4);
  bool eval_ok = dl.n == 100 && hf1.n == 100;

  char detail[160];
  std::snprintf(detail, sizeof detail,
                "843 nodes / 608 leaves / depth 12, decode+eval on %d rows, "
                "mean DL %.3f",
                ds.n, dl.decoders[0].mean);
  report(9, "large-taxonomy ingestion round trip", stats_ok && decode_ok && eval_ok,
         detail);
}

}  // namespace

int main() {
  auto data = make_criterion5_data();
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5(data);
  criterion6(data);
  criterion7();
  criterion8();
  criterion9();
  if (failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", failures);
  return failures == 0 ? 0 : 1;
}
