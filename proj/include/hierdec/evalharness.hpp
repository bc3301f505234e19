#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hierdec/decode_hfbeta.hpp"
#include "hierdec/decode_node.hpp"
#include "hierdec/errors.hpp"
#include "hierdec/heuristics.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"
#include "hierdec/oracle.hpp"
#include "hierdec/prediction.hpp"
#include "hierdec/synthdata.hpp"

namespace hierdec {

// ---------------------------------------------------------------------------
// Datasets

struct Dataset {
  Hierarchy hierarchy;
  int n = 0;
  std::vector<double> rows;    // n x leaf_count, validated + renormalized
  std::vector<NodeId> labels;  // empty when absent

  bool has_labels() const { return !labels.empty(); }

  LeafDistribution dist(int i) const {
    const double* base = rows.data() +
                         static_cast<std::size_t>(i) * hierarchy.leaf_count();
    return LeafDistribution{{base, base + hierarchy.leaf_count()}};
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

// Probability file: CSV whose header row lists the leaf names in hierarchy
// leaf order, one sample row of reals per line. Labels file: one leaf name
// per line. Rows are validated and renormalized under the standard policy.
inline Dataset load_dataset(Hierarchy hierarchy, const std::string& probs_path,
                            const std::string& labels_path = "") {
  Dataset ds{std::move(hierarchy)};
  const Hierarchy& h = ds.hierarchy;

  std::ifstream in(probs_path);
  if (!in) fail(ErrorKind::IoError, "cannot open probability file " + probs_path);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorKind::FormatError, probs_path + ": missing header row");
  std::vector<std::string> header = detail::split_csv_line(line);
  if (static_cast<int>(header.size()) != h.leaf_count())
    fail(ErrorKind::DimensionMismatch,
         probs_path + ": header has " + std::to_string(header.size()) +
             " columns, hierarchy has " + std::to_string(h.leaf_count()) +
             " leaves");
  for (int li = 0; li < h.leaf_count(); ++li)
    if (header[li] != h.name(h.leaf_at(li)))
      fail(ErrorKind::FormatError,
           probs_path + ": header column " + std::to_string(li + 1) +
               " is '" + header[li] + "', expected leaf '" +
               h.name(h.leaf_at(li)) + "'");

  int row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row_index;
    std::vector<std::string> fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != h.leaf_count())
      fail(ErrorKind::DimensionMismatch,
           probs_path + ": row " + std::to_string(row_index) + " has " +
               std::to_string(fields.size()) + " columns");
    std::vector<double> row(h.leaf_count());
    try {
      for (int li = 0; li < h.leaf_count(); ++li) row[li] = std::stod(fields[li]);
    } catch (const std::exception&) {
      fail(ErrorKind::FormatError,
           probs_path + ": row " + std::to_string(row_index) + ": bad number");
    }
    try {
      LeafDistribution d = make_distribution(h, std::move(row));
      ds.rows.insert(ds.rows.end(), d.p.begin(), d.p.end());
    } catch (const Error&) {
      fail(ErrorKind::FormatError,
           probs_path + ": row " + std::to_string(row_index) +
               ": not a probability vector");
    }
    ++ds.n;
  }

  if (!labels_path.empty()) {
    std::ifstream lin(labels_path);
    if (!lin) fail(ErrorKind::IoError, "cannot open labels file " + labels_path);
    while (std::getline(lin, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      NodeId l = h.find(line);
      if (l == kNoNode || !h.is_leaf(l))
        fail(ErrorKind::UnknownLabel, "'" + line + "' is not a leaf");
      ds.labels.push_back(l);
    }
    if (static_cast<int>(ds.labels.size()) != ds.n)
      fail(ErrorKind::DimensionMismatch,
           std::to_string(ds.labels.size()) + " labels for " +
               std::to_string(ds.n) + " rows");
  }
  return ds;
}

inline Dataset load_dataset(const std::string& hierarchy_path,
                            const std::string& probs_path,
                            const std::string& labels_path = "") {
  return load_dataset(Hierarchy::from_file(hierarchy_path), probs_path,
                      labels_path);
}

// Oracle-labeled synthetic data: each row is a symmetric Dirichlet(alpha)
// draw and its label is sampled from the row itself, so the row is the true
// posterior and Bayes decoders are provably best in expectation.
inline Dataset synth_generate(const Hierarchy& h, int n, double alpha,
                              std::uint64_t seed) {
  if (n < 1) fail(ErrorKind::InvalidParam, "need n >= 1 samples");
  if (!(alpha > 0.0)) fail(ErrorKind::InvalidAlpha, "alpha must be positive");
  Dataset ds{h};
  ds.n = n;
  ds.rows.reserve(static_cast<std::size_t>(n) * h.leaf_count());
  ds.labels.reserve(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row = dirichlet_row(rng, h.leaf_count(), alpha);
    double u = unif(rng), acc = 0.0;
    int label = h.leaf_count() - 1;
    for (int li = 0; li < h.leaf_count(); ++li) {
      acc += row[li];
      if (u < acc) {
        label = li;
        break;
      }
    }
    ds.labels.push_back(h.leaf_at(label));
    ds.rows.insert(ds.rows.end(), row.begin(), row.end());
  }
  return ds;
}

inline void save_probs_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  const Hierarchy& h = ds.hierarchy;
  for (int li = 0; li < h.leaf_count(); ++li)
    out << h.name(h.leaf_at(li)) << (li + 1 == h.leaf_count() ? '\n' : ',');
  char buf[40];
  for (int i = 0; i < ds.n; ++i) {
    const double* row = ds.rows.data() + static_cast<std::size_t>(i) * h.leaf_count();
    for (int li = 0; li < h.leaf_count(); ++li) {
      std::snprintf(buf, sizeof buf, "%.17g", row[li]);
      out << buf << (li + 1 == h.leaf_count() ? '\n' : ',');
    }
  }
}

inline void save_labels(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  for (NodeId l : ds.labels) out << ds.hierarchy.name(l) << '\n';
}

// ---------------------------------------------------------------------------
// Decoders as named closures

struct Decoder {
  std::string name;
  std::function<Prediction(const LeafDistribution&)> fn;
};

inline Decoder make_heuristic_decoder(const HeuristicKind& kind,
                                      const Hierarchy& h) {
  return {kind.name(), [kind, &h](const LeafDistribution& d) {
            return decode_heuristic(kind, h, d);
          }};
}

// Bayes-optimal decoder for the metric, with thresholds and cost models
// precomputed once and shared across queries.
inline Decoder make_optimal_decoder(const MetricKind& metric, const Hierarchy& h,
                                    std::size_t budget = kMatrixEntryBudget) {
  switch (metric.tag) {
    case MetricKind::Tag::Top1:
    case MetricKind::Tag::EtaLCA: {
      auto model = std::make_shared<CostModel>(
          CostModel::builtin(metric, CandidateSpace::Leaves));
      return {"optimal", [model, &h](const LeafDistribution& d) {
                return decode_leaf_bayes(*model, h, d);
              }};
    }
    case MetricKind::Tag::DL:
    case MetricKind::Tag::DLc: {
      double tau = (1.0 + metric.param) / 2.0;
      return {"optimal", [tau, &h](const LeafDistribution& d) {
                return decode_threshold_closed_form(h, d, tau);
              }};
    }
    case MetricKind::Tag::WuPalmer:
    case MetricKind::Tag::Zhao: {
      auto model = std::make_shared<CostModel>(decoding_model(metric, h, budget));
      auto thresholds = std::make_shared<Thresholds>(
          compute_thresholds(*model, h, Variant::Rooted));
      return {"optimal", [model, thresholds, &h](const LeafDistribution& d) {
                return decode_reasonable(*model, h, d, *thresholds);
              }};
    }
    case MetricKind::Tag::HFBeta: {
      double beta = metric.param;
      return {"optimal", [beta, &h](const LeafDistribution& d) {
                return decode_hfbeta(h, d, beta);
              }};
    }
    default:
      fail(ErrorKind::InvalidParam,
           "no optimal decoder for " + metric.name() +
               " (only the small-instance oracle handles it)");
  }
}

// Decoder registry used by the CLI: heuristic names, or "optimal" resolved
// against the target metric.
inline Decoder make_decoder(const std::string& name, const Hierarchy& h,
                            const std::optional<MetricKind>& metric) {
  if (name == "optimal") {
    if (!metric)
      fail(ErrorKind::InvalidParam, "'optimal' needs a target metric");
    return make_optimal_decoder(*metric, h);
  }
  if (auto kind = HeuristicKind::try_parse(name))
    return make_heuristic_decoder(*kind, h);
  fail(ErrorKind::InvalidParam, "unknown decoder '" + name + "'");
}

// ---------------------------------------------------------------------------
// Evaluation

struct DecoderStats {
  std::string name;
  double mean = 0.0;
  double se = 0.0;
  bool se_degenerate = false;  // single-sample dataset
  double mean_us = 0.0;        // decode time per sample
};

struct EvalReport {
  std::string metric;
  Orientation orientation = Orientation::Cost;
  int n = 0;
  std::vector<DecoderStats> decoders;
};

namespace detail {

template <class F>
void parallel_for(int n, int threads, F&& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

// Empirical mean and standard error (sample sd / sqrt(n)), summed in index
// order for reproducibility.
inline MeanSe mean_se(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0));
  return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

}  // namespace detail

// Empirical decoding cost of each decoder on a labeled dataset, with decode
// timing. Set metrics score single-node predictions as singleton sets.
inline EvalReport evaluate(const Dataset& ds, const MetricKind& metric,
                           const std::vector<Decoder>& decoders,
                           int threads = 1) {
  if (!ds.has_labels()) fail(ErrorKind::MissingLabels, "dataset has no labels");
  const Hierarchy& h = ds.hierarchy;
  EvalReport report;
  report.metric = metric.name();
  report.orientation = metric.orientation();
  report.n = ds.n;
  for (const Decoder& dec : decoders) {
    std::vector<double> scores(ds.n);
    std::vector<double> micros(ds.n);
    std::exception_ptr fault;
    detail::parallel_for(ds.n, threads, [&](int i) {
      try {
        LeafDistribution d = ds.dist(i);
        auto start = std::chrono::steady_clock::now();
        Prediction pred = dec.fn(d);
        auto stop = std::chrono::steady_clock::now();
        micros[i] = std::chrono::duration<double, std::micro>(stop - start).count();
        scores[i] = metric_score(metric, h, pred, ds.labels[i]);
      } catch (...) {
        fault = std::current_exception();
      }
    });
    if (fault) std::rethrow_exception(fault);
    auto [mean, se] = detail::mean_se(scores);
    auto [tmean, tse] = detail::mean_se(micros);
    (void)tse;
    report.decoders.push_back({dec.name, mean, se, ds.n < 2, tmean});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Underdetermination sweep

struct SweepCell {
  double lambda = 0.0;
  std::string decoder;
  double mean = 0.0;
  double se = 0.0;
  double gap_percent = 0.0;     // relative loss vs the optimal decoder
  double gap_se_percent = 0.0;  // paired-difference SE, same scale
};

struct SweepReport {
  std::string metric;
  std::vector<double> lambdas;
  std::vector<SweepCell> cells;
};

// Replaces each row by (1-lambda) p + lambda uniform and (for lambda > 0)
// resamples the label from the smoothed row, so rows stay true posteriors
// and the optimal decoder stays optimal at every smoothing level. At
// lambda = 0 the original labels are kept (they were sampled from the
// unsmoothed rows already), making the sweep coincide with evaluate.
// `resample_labels = false` keeps the original labels everywhere instead,
// for qualitative comparison only.
inline SweepReport smooth_sweep(const Dataset& ds, const MetricKind& metric,
                                const std::vector<Decoder>& heuristics,
                                const std::vector<double>& lambdas,
                                std::uint64_t seed, bool resample_labels = true,
                                int threads = 1) {
  if (!ds.has_labels()) fail(ErrorKind::MissingLabels, "dataset has no labels");
  for (double l : lambdas)
    if (!(l >= 0.0 && l <= 1.0))
      fail(ErrorKind::InvalidLambda, "lambda must lie in [0, 1]");

  const Hierarchy& h = ds.hierarchy;
  std::vector<Decoder> decoders;
  decoders.push_back(make_optimal_decoder(metric, h));
  for (const Decoder& d : heuristics) decoders.push_back(d);
  double sign = metric.orientation() == Orientation::Gain ? -1.0 : 1.0;

  SweepReport report;
  report.metric = metric.name();
  report.lambdas = lambdas;
  double uniform = 1.0 / h.leaf_count();

  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    double lambda = lambdas[li];
    Dataset smoothed{h};
    smoothed.n = ds.n;
    smoothed.rows = ds.rows;
    for (double& x : smoothed.rows) x = (1.0 - lambda) * x + lambda * uniform;
    smoothed.labels = ds.labels;
    if (resample_labels && lambda > 0.0) {
      std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (li + 1));
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int i = 0; i < ds.n; ++i) {
        const double* row =
            smoothed.rows.data() + static_cast<std::size_t>(i) * h.leaf_count();
        double u = unif(rng), acc = 0.0;
        int label = h.leaf_count() - 1;
        for (int c = 0; c < h.leaf_count(); ++c) {
          acc += row[c];
          if (u < acc) {
            label = c;
            break;
          }
        }
        smoothed.labels[i] = h.leaf_at(label);
      }
    }

    // Per-sample scores for every decoder, for paired gap errors.
    std::vector<std::vector<double>> scores(decoders.size(),
                                            std::vector<double>(ds.n));
    std::exception_ptr fault;
    detail::parallel_for(ds.n, threads, [&](int i) {
      try {
        LeafDistribution d = smoothed.dist(i);
        for (std::size_t k = 0; k < decoders.size(); ++k)
          scores[k][i] =
              metric_score(metric, h, decoders[k].fn(d), smoothed.labels[i]);
      } catch (...) {
        fault = std::current_exception();
      }
    });
    if (fault) std::rethrow_exception(fault);

    auto [opt_mean, opt_se] = detail::mean_se(scores[0]);
    (void)opt_se;
    double denom = std::abs(opt_mean);
    for (std::size_t k = 0; k < decoders.size(); ++k) {
      auto [mean, se] = detail::mean_se(scores[k]);
      std::vector<double> diff(ds.n);
      for (int i = 0; i < ds.n; ++i)
        diff[i] = sign * (scores[k][i] - scores[0][i]);
      auto [gap_mean, gap_se] = detail::mean_se(diff);
      SweepCell cell;
      cell.lambda = lambda;
      cell.decoder = decoders[k].name;
      cell.mean = mean;
      cell.se = se;
      if (denom > 1e-15) {
        cell.gap_percent = 100.0 * gap_mean / denom;
        cell.gap_se_percent = 100.0 * gap_se / denom;
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Agreement maps over the 3-leaf simplex

struct AgreementGrid {
  int resolution = 0;
  struct Point {
    int i, j, k;  // barycentric counts, i + j + k = resolution
    std::string pred_a, pred_b;
    bool agree;
  };
  std::vector<Point> points;
  double agree_fraction = 0.0;
};

// Barycentric mesh over the probability simplex of a 3-leaf hierarchy; each
// mesh point is tagged by whether the two decoders produce the same
// prediction (compared as ancestor-augmented sets).
inline AgreementGrid agreement_map(const Hierarchy& h, const Decoder& a,
                                   const Decoder& b, int resolution) {
  if (h.leaf_count() != 3)
    fail(ErrorKind::WrongLeafCount, "agreement maps need exactly 3 leaves");
  if (resolution < 1) fail(ErrorKind::InvalidParam, "resolution must be >= 1");
  AgreementGrid grid;
  grid.resolution = resolution;
  int agrees = 0;
  for (int i = resolution; i >= 0; --i) {
    for (int j = resolution - i; j >= 0; --j) {
      int k = resolution - i - j;
      LeafDistribution d = make_distribution(
          h, {static_cast<double>(i) / resolution,
              static_cast<double>(j) / resolution,
              static_cast<double>(k) / resolution});
      Prediction pa = a.fn(d);
      Prediction pb = b.fn(d);
      bool agree = pa.as_augmented(h) == pb.as_augmented(h);
      agrees += agree;
      grid.points.push_back({i, j, k, pa.display(h), pb.display(h), agree});
    }
  }
  grid.agree_fraction = static_cast<double>(agrees) / grid.points.size();
  return grid;
}

inline std::string agreement_csv(const AgreementGrid& grid) {
  std::string out = "p1,p2,p3,pred_a,pred_b,agree\n";
  char buf[96];
  for (const auto& pt : grid.points) {
    double res = grid.resolution;
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,", pt.i / res, pt.j / res,
                  pt.k / res);
    out += buf;
    out += pt.pred_a;
    out += ',';
    out += pt.pred_b;
    out += ',';
    out += pt.agree ? '1' : '0';
    out += '\n';
  }
  return out;
}

// Plain-text P3 raster: pixel (x = i, y = j) green on agreement, red on
// disagreement, white outside the simplex.
inline std::string agreement_ppm(const AgreementGrid& grid) {
  int side = grid.resolution + 1;
  std::vector<int> cell(static_cast<std::size_t>(side) * side, 2);
  for (const auto& pt : grid.points)
    cell[static_cast<std::size_t>(pt.j) * side + pt.i] = pt.agree ? 1 : 0;
  std::string out = "P3\n" + std::to_string(side) + " " + std::to_string(side) +
                    "\n255\n";
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      int c = cell[static_cast<std::size_t>(y) * side + x];
      out += c == 2 ? "255 255 255" : (c == 1 ? "0 255 0" : "255 0 0");
      out += x + 1 == side ? '\n' : ' ';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Timing benchmarks

struct BenchStats {
  std::string decoder;
  int samples = 0;
  double mean_us = 0.0, median_us = 0.0, p95_us = 0.0;
  double mean_aux = 0.0;      // mean |S| or |Q(p)| where applicable
  std::string aux_name;       // "", "candidates" or "q_size"
  int bound_violations = 0;   // live re-check of the candidate-set bound
};

// Per-sample decode timing over synthetic Dirichlet draws. The "optimal"
// decoder reports the candidate-set (or Q) size and re-checks its bound on
// every sample; "bruteforce" times the exhaustive node scan.
inline BenchStats bench(const Hierarchy& h, const MetricKind& metric,
                        const std::string& decoder_name, int n_samples,
                        std::uint64_t seed, double alpha = 1.0) {
  if (n_samples < 1) fail(ErrorKind::InvalidParam, "need at least one sample");
  std::mt19937_64 rng(seed);
  BenchStats stats;
  stats.decoder = decoder_name;
  stats.samples = n_samples;

  std::vector<double> micros(n_samples);
  double aux_total = 0.0;

  std::function<double(const LeafDistribution&)> run;  // returns aux size
  std::shared_ptr<CostModel> model;
  std::shared_ptr<Thresholds> thresholds;
  double candidate_bound = 0.0;

  if (decoder_name == "optimal" && !metric.is_set_metric() &&
      metric.natural_space() == CandidateSpace::Nodes) {
    model = std::make_shared<CostModel>(
        CostModel::builtin(metric, CandidateSpace::Nodes));
    Variant variant = metric.orientation() == Orientation::Gain
                          ? Variant::Rooted
                          : Variant::Strict;
    thresholds =
        std::make_shared<Thresholds>(compute_thresholds(*model, h, variant));
    if (thresholds->q_min_floor > 0.0)
      candidate_bound = (h.max_depth() + 1) / thresholds->q_min_floor;
    stats.aux_name = "candidates";
    run = [&, model, thresholds](const LeafDistribution& d) {
      NodeDecode r = decode_reasonable_detailed(*model, h, d, *thresholds);
      return static_cast<double>(r.candidate_count);
    };
  } else if (decoder_name == "optimal" && metric.tag == MetricKind::Tag::HFBeta) {
    double beta = metric.param;
    stats.aux_name = "q_size";
    run = [&, beta](const LeafDistribution& d) {
      return static_cast<double>(decode_hfbeta_detailed(h, d, beta).q_size);
    };
  } else if (decoder_name == "bruteforce") {
    model = std::make_shared<CostModel>(
        CostModel::builtin(metric, CandidateSpace::Nodes));
    run = [&, model](const LeafDistribution& d) {
      oracle::brute_force_node(*model, h, d);
      return 0.0;
    };
  } else {
    Decoder dec = make_decoder(decoder_name, h, metric);
    run = [fn = dec.fn](const LeafDistribution& d) {
      fn(d);
      return 0.0;
    };
  }

  for (int i = 0; i < n_samples; ++i) {
    LeafDistribution d = random_distribution(rng, h, alpha);
    auto start = std::chrono::steady_clock::now();
    double aux = run(d);
    auto stop = std::chrono::steady_clock::now();
    micros[i] = std::chrono::duration<double, std::micro>(stop - start).count();
    aux_total += aux;
    if (candidate_bound > 0.0 && aux > candidate_bound) ++stats.bound_violations;
  }

  std::sort(micros.begin(), micros.end());
  double total = 0.0;
  for (double m : micros) total += m;
  stats.mean_us = total / n_samples;
  stats.median_us = micros[n_samples / 2];
  stats.p95_us = micros[static_cast<int>(0.95 * (n_samples - 1))];
  stats.mean_aux = aux_total / n_samples;
  return stats;
}

}  // namespace hierdec
