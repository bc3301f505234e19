// Command-line front end: validate hierarchies and cost matrices, decode
// probability files, run evaluations, sweeps, agreement maps, benchmarks,
// synthetic data generation and randomized self-verification.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hierdec/decode_hfbeta.hpp"
#include "hierdec/decode_node.hpp"
#include "hierdec/errors.hpp"
#include "hierdec/evalharness.hpp"
#include "hierdec/heuristics.hpp"
#include "hierdec/hierarchy.hpp"
#include "hierdec/metrics.hpp"
#include "hierdec/oracle.hpp"
#include "hierdec/synthdata.hpp"
#include "hierdec/verify.hpp"

namespace hd = hierdec;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string hierarchy;
  std::string output;
  std::string format = "text";
  std::string add_stop_nodes;
  std::uint64_t seed = 1;
  int threads = 1;
};

void write_output(const CommonOpts& opts, const std::string& text) {
  if (opts.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(opts.output);
  if (!out) hd::fail(hd::ErrorKind::IoError, "cannot write " + opts.output);
  out << text;
}

hd::Hierarchy load_hierarchy(const CommonOpts& opts) {
  hd::Hierarchy h = hd::Hierarchy::from_file(opts.hierarchy);
  if (opts.add_stop_nodes.empty()) return h;
  std::vector<hd::NodeId> internal;
  if (opts.add_stop_nodes == "all") {
    for (hd::NodeId n = 0; n < h.node_count(); ++n)
      if (!h.is_leaf(n)) internal.push_back(n);
  } else {
    std::stringstream ss(opts.add_stop_nodes);
    std::string name;
    while (std::getline(ss, name, ',')) {
      hd::NodeId n = h.find(name);
      if (n == hd::kNoNode)
        hd::fail(hd::ErrorKind::UnknownLabel, "no node named '" + name + "'");
      internal.push_back(n);
    }
  }
  return h.augment_with_stop_nodes(internal);
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<hd::Decoder> build_decoders(const std::string& csv,
                                        const hd::Hierarchy& h,
                                        const std::optional<hd::MetricKind>& m) {
  std::vector<hd::Decoder> out;
  for (const std::string& name : split_names(csv))
    out.push_back(hd::make_decoder(name, h, m));
  if (out.empty()) hd::fail(hd::ErrorKind::InvalidParam, "no decoders given");
  return out;
}

const char* kDefaultHeuristics =
    "argmax,topdown,hie-self,karthik,majority,plurality,darts:0.5,expinfo";

json eval_report_json(const hd::EvalReport& r) {
  json decoders = json::array();
  for (const auto& d : r.decoders)
    decoders.push_back({{"decoder", d.name},
                        {"mean", d.mean},
                        {"se", d.se},
                        {"se_degenerate", d.se_degenerate},
                        {"mean_us", d.mean_us}});
  return {{"metric", r.metric},
          {"orientation", r.orientation == hd::Orientation::Gain ? "gain" : "cost"},
          {"n", r.n},
          {"decoders", decoders}};
}

std::string eval_report_text(const hd::EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "metric %s (%s), n=%d\n", r.metric.c_str(),
                r.orientation == hd::Orientation::Gain ? "gain" : "cost", r.n);
  std::string out = buf;
  std::snprintf(buf, sizeof buf, "%-16s %12s %12s %12s\n", "decoder", "mean",
                "se", "us/sample");
  out += buf;
  for (const auto& d : r.decoders) {
    std::snprintf(buf, sizeof buf, "%-16s %12.6f %12.6f %12.3f%s\n",
                  d.name.c_str(), d.mean, d.se, d.mean_us,
                  d.se_degenerate ? "  (single sample)" : "");
    out += buf;
  }
  return out;
}

json sweep_report_json(const hd::SweepReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"lambda", c.lambda},
                     {"decoder", c.decoder},
                     {"mean", c.mean},
                     {"se", c.se},
                     {"gap_percent", c.gap_percent},
                     {"gap_se_percent", c.gap_se_percent}});
  return {{"metric", r.metric}, {"lambdas", r.lambdas}, {"cells", cells}};
}

std::string sweep_report_text(const hd::SweepReport& r) {
  std::string out = "metric " + r.metric + "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%8s %-16s %12s %12s %10s %10s\n", "lambda",
                "decoder", "mean", "se", "gap%", "gap_se%");
  out += buf;
  for (const auto& c : r.cells) {
    std::snprintf(buf, sizeof buf, "%8.3f %-16s %12.6f %12.6f %10.3f %10.3f\n",
                  c.lambda, c.decoder.c_str(), c.mean, c.se, c.gap_percent,
                  c.gap_se_percent);
    out += buf;
  }
  return out;
}

int run_validate(const CommonOpts& opts, const std::string& matrix_path,
                 const std::string& orientation) {
  hd::Hierarchy h = load_hierarchy(opts);
  json j = {{"nodes", h.node_count()},
            {"leaves", h.leaf_count()},
            {"max_depth", h.max_depth()}};
  std::string verdict_line;
  if (!matrix_path.empty()) {
    hd::DenseMatrix m = hd::load_matrix(matrix_path);
    if (m.rows != h.node_count() || m.cols != h.leaf_count())
      hd::fail(hd::ErrorKind::DimensionMismatch,
               "matrix is " + std::to_string(m.rows) + "x" +
                   std::to_string(m.cols) + ", hierarchy needs " +
                   std::to_string(h.node_count()) + "x" +
                   std::to_string(h.leaf_count()));
    hd::Orientation o = orientation == "gain" ? hd::Orientation::Gain
                                              : hd::Orientation::Cost;
    hd::CostModel model =
        hd::CostModel::from_matrix(std::move(m), o, hd::CandidateSpace::Nodes);
    hd::ReasonablenessVerdict verdict = hd::check_reasonable(model, h);
    j["verdict"] = verdict.to_string();
    if (verdict.witness) {
      j["witness"] = {h.name(verdict.witness->first),
                      h.name(verdict.witness->second)};
    }
    verdict_line = verdict.to_string();
  }
  if (opts.format == "json") {
    write_output(opts, j.dump(2) + "\n");
  } else {
    std::string text = "nodes " + std::to_string(h.node_count()) + ", leaves " +
                       std::to_string(h.leaf_count()) + ", max depth " +
                       std::to_string(h.max_depth()) + "\n";
    if (!verdict_line.empty()) text += verdict_line + "\n";
    write_output(opts, text);
  }
  return 0;
}

int run_decode(const CommonOpts& opts, const std::string& probs,
               const std::string& metric_name, const std::string& decoder) {
  hd::Hierarchy h = load_hierarchy(opts);
  std::optional<hd::MetricKind> metric;
  if (!metric_name.empty()) metric = hd::MetricKind::parse(metric_name);
  hd::Decoder dec = hd::make_decoder(decoder, h, metric);
  hd::Dataset ds = hd::load_dataset(h, probs, "");
  std::string out;
  for (int i = 0; i < ds.n; ++i)
    out += dec.fn(ds.dist(i)).display(ds.hierarchy) + "\n";
  write_output(opts, out);
  return 0;
}

int run_eval(const CommonOpts& opts, const std::string& probs,
             const std::string& labels, const std::string& metric_name,
             const std::string& decoders_csv) {
  hd::Hierarchy h = load_hierarchy(opts);
  hd::MetricKind metric = hd::MetricKind::parse(metric_name);
  std::vector<hd::Decoder> decoders = build_decoders(decoders_csv, h, metric);
  hd::Dataset ds = hd::load_dataset(h, probs, labels);
  hd::EvalReport report = hd::evaluate(ds, metric, decoders, opts.threads);
  write_output(opts, opts.format == "json" ? eval_report_json(report).dump(2) + "\n"
                                           : eval_report_text(report));
  return 0;
}

int run_sweep(const CommonOpts& opts, const std::string& probs,
              const std::string& labels, const std::string& metric_name,
              const std::string& decoders_csv, const std::string& lambdas_csv,
              bool keep_labels) {
  hd::Hierarchy h = load_hierarchy(opts);
  hd::MetricKind metric = hd::MetricKind::parse(metric_name);
  std::vector<hd::Decoder> decoders = build_decoders(decoders_csv, h, metric);
  std::vector<double> lambdas;
  for (const std::string& s : split_names(lambdas_csv)) {
    try {
      lambdas.push_back(std::stod(s));
    } catch (const std::exception&) {
      hd::fail(hd::ErrorKind::InvalidLambda, "bad lambda '" + s + "'");
    }
  }
  hd::Dataset ds = hd::load_dataset(h, probs, labels);
  hd::SweepReport report = hd::smooth_sweep(ds, metric, decoders, lambdas,
                                            opts.seed, !keep_labels, opts.threads);
  write_output(opts, opts.format == "json" ? sweep_report_json(report).dump(2) + "\n"
                                           : sweep_report_text(report));
  return 0;
}

int run_agreement(const CommonOpts& opts, const std::string& metric_name,
                  const std::string& decoder_a, const std::string& decoder_b,
                  int resolution, const std::string& ppm_path) {
  hd::Hierarchy h = load_hierarchy(opts);
  std::optional<hd::MetricKind> metric;
  if (!metric_name.empty()) metric = hd::MetricKind::parse(metric_name);
  hd::Decoder a = hd::make_decoder(decoder_a, h, metric);
  hd::Decoder b = hd::make_decoder(decoder_b, h, metric);
  hd::AgreementGrid grid = hd::agreement_map(h, a, b, resolution);
  write_output(opts, hd::agreement_csv(grid));
  if (!ppm_path.empty()) {
    std::ofstream out(ppm_path);
    if (!out) hd::fail(hd::ErrorKind::IoError, "cannot write " + ppm_path);
    out << hd::agreement_ppm(grid);
  }
  std::fprintf(stderr, "agreement fraction: %.6f over %zu points\n",
               grid.agree_fraction, grid.points.size());
  return 0;
}

int run_bench(const CommonOpts& opts, const std::string& metric_name,
              const std::string& decoder, int samples, double alpha,
              int branching, int depth) {
  hd::Hierarchy h = opts.hierarchy.empty()
                        ? hd::balanced_tree(branching, depth)
                        : load_hierarchy(opts);
  hd::MetricKind metric = hd::MetricKind::parse(metric_name);
  hd::BenchStats stats = hd::bench(h, metric, decoder, samples, opts.seed, alpha);
  json j = {{"decoder", stats.decoder},   {"samples", stats.samples},
            {"mean_us", stats.mean_us},   {"median_us", stats.median_us},
            {"p95_us", stats.p95_us},     {"bound_violations", stats.bound_violations},
            {"nodes", h.node_count()},    {"leaves", h.leaf_count()}};
  if (!stats.aux_name.empty()) j["mean_" + stats.aux_name] = stats.mean_aux;
  if (opts.format == "json") {
    write_output(opts, j.dump(2) + "\n");
  } else {
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "%s on %d nodes: mean %.3f us, median %.3f us, p95 %.3f us",
                  stats.decoder.c_str(), h.node_count(), stats.mean_us,
                  stats.median_us, stats.p95_us);
    std::string text = buf;
    if (!stats.aux_name.empty()) {
      std::snprintf(buf, sizeof buf, ", mean %s %.2f", stats.aux_name.c_str(),
                    stats.mean_aux);
      text += buf;
    }
    write_output(opts, text + "\n");
  }
  return 0;
}

int run_synth(const CommonOpts& opts, int n, double alpha,
              const std::string& labels_out) {
  hd::Hierarchy h = load_hierarchy(opts);
  hd::Dataset ds = hd::synth_generate(h, n, alpha, opts.seed);
  if (opts.output.empty())
    hd::fail(hd::ErrorKind::InvalidParam, "synth needs --output for the CSV");
  hd::save_probs_csv(opts.output, ds);
  if (!labels_out.empty()) hd::save_labels(labels_out, ds);
  return 0;
}

int run_verify(const CommonOpts& opts, int trials, int max_nodes,
               int max_set_nodes) {
  std::mt19937_64 rng(opts.seed);
  hd::verify::Result res;
  for (int i = 0; i < trials; ++i)
    hd::verify::check_node_instance(res, rng, max_nodes, i % 10 == 0);
  for (int i = 0; i < trials; ++i)
    hd::verify::check_hfbeta_instance(res, rng, max_set_nodes);
  for (int i = 0; i < trials; ++i)
    hd::verify::check_structure_instance(res, rng, max_set_nodes);
  std::printf("verify: %ld checks over %d trials, %zu failures\n", res.checks,
              trials, res.failures.size());
  for (const std::string& f : res.failures) std::printf("  %s\n", f.c_str());
  return res.ok() ? 0 : 3;
}

int usage_exit_code(hd::ErrorKind kind) {
  switch (kind) {
    case hd::ErrorKind::InvalidParam:
    case hd::ErrorKind::InvalidTau:
    case hd::ErrorKind::InvalidLambda:
    case hd::ErrorKind::InvalidAlpha:
    case hd::ErrorKind::SpaceMismatch:
    case hd::ErrorKind::MissingLabels:
    case hd::ErrorKind::WrongLeafCount:
      return 1;
    case hd::ErrorKind::Internal:
      return 3;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierdec: metric-optimal decoding for hierarchical classifiers"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string matrix_path, orientation = "cost";
  std::string probs, labels, metric_name, decoder = "optimal";
  std::string decoders_csv = std::string(kDefaultHeuristics) + ",optimal";
  std::string lambdas_csv = "0,0.25,0.5,0.75,1";
  std::string decoder_a = "optimal", decoder_b = "majority", ppm_path;
  std::string labels_out;
  bool keep_labels = false;
  int resolution = 200, samples = 100, n_rows = 100;
  int branching = 3, depth = 8;
  double alpha = 1.0;
  int trials = 200, max_nodes = 40, max_set_nodes = 20;

  auto add_common = [&](CLI::App* cmd, bool needs_hierarchy = true) {
    auto* opt = cmd->add_option("--hierarchy", opts.hierarchy,
                                "hierarchy TSV (parent<TAB>child per line)");
    if (needs_hierarchy) opt->required();
    cmd->add_option("--output", opts.output, "write the report here (default stdout)");
    cmd->add_option("--format", opts.format, "json|text")
        ->check(CLI::IsMember({"json", "text"}));
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--threads", opts.threads, "worker pool size")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--add-stop-nodes", opts.add_stop_nodes,
                    "all|NAME,... add a stop leaf under these internal nodes");
  };

  CLI::App* validate = app.add_subcommand("validate", "check a hierarchy and optional cost matrix");
  add_common(validate);
  validate->add_option("--matrix", matrix_path, "dense cost matrix (rows cols header)");
  validate->add_option("--orientation", orientation, "cost|gain")
      ->check(CLI::IsMember({"cost", "gain"}));

  CLI::App* decode = app.add_subcommand("decode", "decode a probability file, one prediction per line");
  add_common(decode);
  decode->add_option("--probs", probs, "probability CSV")->required();
  decode->add_option("--metric", metric_name, "target metric, e.g. dl, dlc:0.5, hf:1");
  decode->add_option("--decoder", decoder, "optimal or a heuristic name");

  CLI::App* eval = app.add_subcommand("eval", "empirical decoding cost of several decoders");
  add_common(eval);
  eval->add_option("--probs", probs)->required();
  eval->add_option("--labels", labels)->required();
  eval->add_option("--metric", metric_name)->required();
  eval->add_option("--decoders", decoders_csv, "comma-separated decoder names");

  CLI::App* sweep = app.add_subcommand("sweep", "smooth rows toward uniform and track relative gaps");
  add_common(sweep);
  sweep->add_option("--probs", probs)->required();
  sweep->add_option("--labels", labels)->required();
  sweep->add_option("--metric", metric_name)->required();
  sweep->add_option("--decoders", decoders_csv);
  sweep->add_option("--lambdas", lambdas_csv, "comma-separated smoothing levels in [0,1]");
  sweep->add_flag("--keep-labels", keep_labels, "do not resample labels from smoothed rows");

  CLI::App* agreement = app.add_subcommand("agreement", "agreement map of two decoders over a 3-leaf simplex");
  add_common(agreement);
  agreement->add_option("--metric", metric_name);
  agreement->add_option("--decoder-a", decoder_a);
  agreement->add_option("--decoder-b", decoder_b);
  agreement->add_option("--resolution", resolution)->check(CLI::PositiveNumber);
  agreement->add_option("--ppm", ppm_path, "also write a P3 raster here");

  CLI::App* bench_cmd = app.add_subcommand("bench", "per-sample decode timing on Dirichlet draws");
  add_common(bench_cmd, false);
  bench_cmd->add_option("--metric", metric_name)->required();
  bench_cmd->add_option("--decoder", decoder, "optimal|bruteforce|heuristic name");
  bench_cmd->add_option("--samples", samples)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--alpha", alpha)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--branching", branching, "synthetic tree branching (no --hierarchy)");
  bench_cmd->add_option("--depth", depth, "synthetic tree depth (no --hierarchy)");

  CLI::App* synth = app.add_subcommand("synth", "oracle-labeled Dirichlet dataset");
  add_common(synth);
  synth->add_option("--n", n_rows)->check(CLI::PositiveNumber);
  synth->add_option("--alpha", alpha)->check(CLI::PositiveNumber);
  synth->add_option("--labels-out", labels_out, "also write sampled labels here");

  CLI::App* verify_cmd = app.add_subcommand("verify", "randomized oracle-equivalence suites");
  add_common(verify_cmd, false);
  verify_cmd->add_option("--trials", trials)->check(CLI::PositiveNumber);
  verify_cmd->add_option("--max-nodes", max_nodes)->check(CLI::PositiveNumber);
  verify_cmd->add_option("--max-set-nodes", max_set_nodes)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(validate))
      return run_validate(opts, matrix_path, orientation);
    if (app.got_subcommand(decode))
      return run_decode(opts, probs, metric_name, decoder);
    if (app.got_subcommand(eval))
      return run_eval(opts, probs, labels, metric_name, decoders_csv);
    if (app.got_subcommand(sweep))
      return run_sweep(opts, probs, labels, metric_name, decoders_csv,
                       lambdas_csv, keep_labels);
    if (app.got_subcommand(agreement))
      return run_agreement(opts, metric_name, decoder_a, decoder_b, resolution,
                           ppm_path);
    if (app.got_subcommand(bench_cmd))
      return run_bench(opts, metric_name, decoder, samples, alpha, branching, depth);
    if (app.got_subcommand(synth))
      return run_synth(opts, n_rows, alpha, labels_out);
    if (app.got_subcommand(verify_cmd))
      return run_verify(opts, trials, max_nodes, max_set_nodes);
  } catch (const hd::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return usage_exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
