#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bcs/error.hpp"
#include "bcs/experiment.hpp"
#include "bcs/matrix_io.hpp"
#include "bcs/metrics.hpp"
#include "bcs/oracle_check.hpp"
#include "bcs/sensing.hpp"
#include "bcs/synthetic.hpp"
#include "bcs/wavelet.hpp"

namespace {

using namespace bcs;

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kNumerical = 3 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::InvalidSize:
    case ErrorKind::InvalidFraction:
    case ErrorKind::InvalidPattern:
    case ErrorKind::EmptySample:
      return kUsage;
    case ErrorKind::Io:
    case ErrorKind::Shape:
      return kIo;
    default:
      return kNumerical;
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) out.push_back(std::stod(item, &used));
      else out.push_back(static_cast<T>(std::stoull(item, &used)));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      fail(ErrorKind::Usage, std::string("bad entry '") + item + "' in " + what);
    }
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing " + path);
}

struct CompressArgs {
  std::string signal, synthetic, y_out, phi_out, truth_out;
  std::size_t n = 512, k = 0, segment = 0;
  std::uint64_t seed = 0;
  double noise_std = 0.0;
};

int cmd_compress(const CompressArgs& a) {
  if (a.signal.empty() == a.synthetic.empty()) fail(ErrorKind::Usage, "give exactly one of --signal or --synthetic");
  if (!wavelet::is_power_of_two(a.n) || a.n < 2) fail(ErrorKind::InvalidSize, "--n must be a power of two >= 2");
  Eigen::VectorXd x;
  if (!a.signal.empty()) {
    const Eigen::VectorXd record = io::read_signal(a.signal);
    const auto n = static_cast<Eigen::Index>(a.n);
    if (record.size() < (static_cast<Eigen::Index>(a.segment) + 1) * n) {
      fail(ErrorKind::Shape, a.signal + " holds " + std::to_string(record.size()) + " samples, too few for segment " +
                                 std::to_string(a.segment) + " of length " + std::to_string(a.n));
    }
    x = record.segment(static_cast<Eigen::Index>(a.segment) * n, n);
  } else {
    const auto spec = synthetic::parse_spec(a.synthetic);
    x = wavelet::inverse(synthetic::generate(spec, a.n, synthetic::derive_seed(a.seed, 1, a.segment)));
  }
  const auto setup = sensing::generate_projection(a.k, a.n, a.seed);
  const auto y = sensing::compress(setup, wavelet::SignalSegment(x), a.noise_std, synthetic::derive_seed(a.seed, 3, a.segment));
  io::write_vector(a.y_out, y.y);
  io::write_matrix(a.phi_out, setup.phi);
  if (!a.truth_out.empty()) io::write_signal_text(a.truth_out, x);
  std::printf("K=%zu N=%zu CR=%.6g\n", a.k, a.n, static_cast<double>(a.n) / static_cast<double>(a.k));
  return kOk;
}

struct ReconstructArgs {
  std::string y, phi, algorithm = "ipe", out, truth;
};

int cmd_reconstruct(const ReconstructArgs& a, const EngineOptions& opts) {
  const auto algorithm = experiment::parse_algorithm(a.algorithm);
  const Eigen::VectorXd y = io::read_vector(a.y);
  const auto setup = sensing::projection_from_matrix(io::read_matrix(a.phi), a.phi);
  if (static_cast<std::size_t>(y.size()) != setup.k()) {
    fail(ErrorKind::Shape, "y has " + std::to_string(y.size()) + " entries but phi has " + std::to_string(setup.k()) + " rows");
  }
  const auto dict = sensing::build_dictionary(setup);
  const auto result = experiment::run_engine(algorithm, dict, y, opts);
  std::string text = experiment::format_result(result, algorithm, setup.k());
  if (!a.truth.empty()) {
    const Eigen::VectorXd truth = io::read_signal(a.truth);
    const double re = metrics::strict_re(truth, result.mean_signal);
    char buf[64];
    std::snprintf(buf, sizeof buf, "strict_re,%.17g\n", re);
    text += buf;
    std::printf("strict RE %.6e\n", re);
  }
  write_text(a.out, text);
  std::printf("active %zu, outer %zu, inner %zu, converged %s\n", result.active_count, result.outer_iterations,
              result.inner_iterations_total, result.converged ? "yes" : "no");
  return kOk;
}

struct SweepArgs {
  std::string signal, synthetic = "exact:20", k_list, thresholds, fractions, loss_counts, out, algorithm = "ipe",
                                 scope = "record";
};

experiment::ExperimentConfig build_config(const SweepArgs& a, experiment::ExperimentConfig c) {
  c.algorithm = experiment::parse_algorithm(a.algorithm);
  c.signal_file = a.signal;
  c.synthetic = synthetic::parse_spec(a.synthetic);
  if (!a.k_list.empty()) c.k_list = parse_list<std::size_t>(a.k_list, "--k-list");
  if (!a.thresholds.empty()) c.thresholds = parse_list<double>(a.thresholds, "--thresholds");
  if (!a.fractions.empty()) c.effective_fractions = parse_list<double>(a.fractions, "--effective-fractions");
  if (!a.loss_counts.empty()) c.loss_counts = parse_list<std::size_t>(a.loss_counts, "--loss-counts");
  if (a.scope != "record" && a.scope != "segment") fail(ErrorKind::Usage, "--denoise-scope must be record or segment");
  c.whole_record = a.scope == "record";
  return c;
}

void add_engine_options(CLI::App* cmd, EngineOptions& o) {
  cmd->add_option("--outer-tolerance", o.outer_tolerance, "Outer-loop relative signal change tolerance");
  cmd->add_option("--inner-tolerance", o.inner_log_alpha_tolerance, "Inner-loop max |change in log alpha|");
  cmd->add_option("--max-outer", o.max_outer, "Outer iteration cap");
  cmd->add_option("--max-inner", o.max_inner, "Inner iteration cap per outer loop");
}

void add_sweep_options(CLI::App* cmd, SweepArgs& a, experiment::ExperimentConfig& c) {
  cmd->add_option("--seed", c.master_seed, "Master seed")->required();
  cmd->add_option("--signal", a.signal, "Signal file (text or binary vector); overrides --synthetic");
  cmd->add_option("--synthetic", a.synthetic, "exact:T, approx:T:SIGMA or lognormal[:SPREAD]");
  cmd->add_option("--algorithm", a.algorithm, "mpe or ipe");
  cmd->add_option("--n", c.n, "Segment length");
  cmd->add_option("--segments", c.segments, "Number of segments");
  cmd->add_option("--denoise-energy-fraction", c.denoise_fraction, "Energy fraction removed by hard thresholding");
  cmd->add_option("--denoise-scope", a.scope, "record or segment");
  cmd->add_option("--thresholds", a.thresholds, "Comma-separated acceptance thresholds");
  cmd->add_option("--effective-fractions", a.fractions, "Comma-separated top fractions for effective errors");
  cmd->add_option("--noise-std", c.noise_std, "Measurement noise standard deviation");
  cmd->add_flag("--timing", c.timing, "Report wall-clock seconds per segment");
  cmd->add_option("--out", a.out, "Report file (default stdout)");
  add_engine_options(cmd, c.engine);
}

int run(int argc, char** argv) {
  CLI::App app{"Sparse Bayesian compressive-sensing reconstruction"};
  app.require_subcommand(1);

  CompressArgs ca;
  auto* compress = app.add_subcommand("compress", "Project one signal segment with a seeded Gaussian matrix");
  compress->add_option("--signal", ca.signal, "Signal file (text or binary vector)");
  compress->add_option("--synthetic", ca.synthetic, "Synthetic segment spec instead of a file");
  compress->add_option("--k", ca.k, "Number of measurements")->required();
  compress->add_option("--n", ca.n, "Segment length");
  compress->add_option("--segment", ca.segment, "Segment index within the record");
  compress->add_option("--seed", ca.seed, "Projection seed")->required();
  compress->add_option("--noise-std", ca.noise_std, "Measurement noise standard deviation");
  compress->add_option("--y-out", ca.y_out, "Measurement vector output")->required();
  compress->add_option("--phi-out", ca.phi_out, "Projection matrix output")->required();
  compress->add_option("--truth-out", ca.truth_out, "Write the compressed segment as a text signal");

  ReconstructArgs ra;
  EngineOptions ropts;
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct a segment from y and phi files");
  reconstruct->add_option("--y", ra.y, "Measurement vector file")->required();
  reconstruct->add_option("--phi", ra.phi, "Projection matrix file")->required();
  reconstruct->add_option("--algorithm", ra.algorithm, "mpe or ipe");
  reconstruct->add_option("--out", ra.out, "Result file (default stdout)");
  reconstruct->add_option("--truth", ra.truth, "Original segment, to report the strict error");
  add_engine_options(reconstruct, ropts);

  SweepArgs cr_args;
  experiment::ExperimentConfig cr_cfg;
  auto* sweep_cr = app.add_subcommand("sweep-cr", "Acceptance rates over compression ratios");
  add_sweep_options(sweep_cr, cr_args, cr_cfg);
  sweep_cr->add_option("--k-list", cr_args.k_list, "Comma-separated K values (default 170..470 step 30)");

  SweepArgs loss_args;
  experiment::ExperimentConfig loss_cfg;
  auto* sweep_loss = app.add_subcommand("sweep-loss", "Acceptance rates over packet-loss counts (K = N)");
  add_sweep_options(sweep_loss, loss_args, loss_cfg);
  sweep_loss->add_option("--packet-size", loss_cfg.packet_size, "Samples per packet");
  sweep_loss->add_option("--loss-counts", loss_args.loss_counts, "Comma-separated lost-packet counts (default 1..26)");
  sweep_loss->add_option("--runs", loss_cfg.runs, "Runs per loss count");

  oracle::CheckConfig oc;
  std::string sizes = "16x32";
  auto* check = app.add_subcommand("oracle-check", "Compare incremental updates with dense recomputation");
  check->add_option("--sizes", sizes, "Comma-separated KxN sizes");
  check->add_option("--seed", oc.seed, "Instance seed");
  check->add_option("--instances", oc.min_instances, "Minimum instances per algorithm");
  check->add_option("--min-actions", oc.min_actions, "Minimum actions per algorithm");
  check->add_flag("--inject-fault", oc.inject_fault, "Perturb cached S values before comparing (self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*compress) return cmd_compress(ca);
  if (*reconstruct) {
    ropts.validate();
    return cmd_reconstruct(ra, ropts);
  }
  if (*sweep_cr) {
    const auto report = experiment::sweep_cr(build_config(cr_args, cr_cfg));
    write_text(cr_args.out, report.to_csv());
    return kOk;
  }
  if (*sweep_loss) {
    const auto report = experiment::sweep_loss(build_config(loss_args, loss_cfg));
    write_text(loss_args.out, report.to_csv());
    return kOk;
  }
  if (*check) {
    oc.sizes.clear();
    std::stringstream ss(sizes);
    for (std::string item; std::getline(ss, item, ',');) {
      if (item.empty()) continue;
      const auto x = item.find('x');
      try {
        if (x == std::string::npos) throw std::invalid_argument(item);
        oc.sizes.emplace_back(std::stoul(item.substr(0, x)), std::stoul(item.substr(x + 1)));
      } catch (const std::logic_error&) {
        fail(ErrorKind::Usage, "bad size '" + item + "' (expected KxN)");
      }
    }
    const auto report = oracle::run(oc);
    std::cout << report.to_string();
    return report.pass() ? kOk : kNumerical;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bcs::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", bcs::to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  }
}
