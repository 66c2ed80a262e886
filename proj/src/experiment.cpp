#include "bcs/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bcs/bcs_ipe.hpp"
#include "bcs/bcs_mpe.hpp"
#include "bcs/error.hpp"
#include "bcs/matrix_io.hpp"
#include "bcs/metrics.hpp"
#include "bcs/wavelet.hpp"

namespace bcs::experiment {
namespace {

enum SeedTag : std::uint64_t { kTagSignal = 1, kTagPhi = 2, kTagNoise = 3, kTagLoss = 4 };

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    if constexpr (std::is_floating_point_v<T>) out += num(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::string> header_lines(const ExperimentConfig& c, const std::string& sweep) {
  std::vector<std::string> h;
  h.push_back("sweep=" + sweep);
  h.push_back("algorithm=" + std::string(to_string(c.algorithm)));
  h.push_back("n=" + std::to_string(c.n));
  if (sweep == "cr") h.push_back("k_list=" + join(c.resolved_k_list()));
  if (sweep == "loss") {
    h.push_back("packet_size=" + std::to_string(c.packet_size));
    h.push_back("loss_counts=" + join(c.resolved_loss_counts()));
    h.push_back("runs=" + std::to_string(c.runs));
  }
  h.push_back("master_seed=" + std::to_string(c.master_seed));
  h.push_back("segments=" + std::to_string(c.segments));
  h.push_back("signal=" + (c.signal_file.empty() ? "synthetic:" + c.synthetic.describe() : "file:" + c.signal_file));
  h.push_back("denoise_energy_fraction=" + num(c.denoise_fraction));
  h.push_back(std::string("denoise_scope=") + (c.whole_record ? "record" : "segment"));
  h.push_back("thresholds=" + join(c.thresholds));
  h.push_back("effective_fractions=" + join(c.effective_fractions));
  h.push_back("noise_std=" + num(c.noise_std));
  h.push_back("outer_tolerance=" + num(c.engine.outer_tolerance));
  h.push_back("inner_log_alpha_tolerance=" + num(c.engine.inner_log_alpha_tolerance));
  h.push_back("max_outer=" + std::to_string(c.engine.max_outer));
  h.push_back("max_inner=" + std::to_string(c.engine.max_inner));
  h.push_back("columns=sweep,point,cr,loss_rate,threshold,metric,acceptance_rate,mean_posterior_std,"
              "seconds_per_segment");
  return h;
}

void aggregate(SweepReport& report, const ExperimentConfig& config) {
  const auto labels = metric_labels(config);
  for (std::size_t p = 0; p < report.points.size(); ++p) {
    const SweepPoint& pt = report.points[p];
    double std_sum = 0.0, secs = 0.0;
    std::size_t ok = 0;
    std::vector<std::vector<double>> errs(labels.size());
    for (const auto& o : pt.outcomes) {
      errs[0].push_back(o.strict);
      for (std::size_t e = 0; e < config.effective_fractions.size(); ++e)
        errs[e + 1].push_back(o.failed ? kInf : o.effective[e]);
      if (!o.failed) {
        std_sum += o.mean_std;
        ++ok;
      }
      secs += o.seconds;
    }
    const double mean_std = ok ? std_sum / static_cast<double>(ok) : std::nan("");
    const double per_seg = config.timing ? secs / static_cast<double>(pt.outcomes.size()) : -1.0;
    for (double thr : config.thresholds) {
      for (std::size_t m = 0; m < labels.size(); ++m) {
        report.records.push_back(
            {p, pt.cr, pt.loss_rate, thr, labels[m], metrics::acceptance_rate(errs[m], thr), mean_std, per_seg});
      }
    }
  }
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  if (name == "mpe") return Algorithm::Mpe;
  if (name == "ipe") return Algorithm::Ipe;
  fail(ErrorKind::Usage, "unknown algorithm '" + name + "' (expected mpe or ipe)");
}

const char* to_string(Algorithm algorithm) { return algorithm == Algorithm::Mpe ? "mpe" : "ipe"; }

ReconstructionResult run_engine(Algorithm algorithm, const sensing::Dictionary& dict, const Eigen::VectorXd& y,
                                const EngineOptions& opts) {
  return algorithm == Algorithm::Mpe ? mpe::reconstruct(dict, y, opts) : ipe::reconstruct(dict, y, opts);
}

void ExperimentConfig::validate() const {
  if (!wavelet::is_power_of_two(n) || n < 2) fail(ErrorKind::InvalidSize, "n must be a power of two >= 2");
  for (std::size_t k : resolved_k_list())
    if (k <= 2) fail(ErrorKind::InvalidSize, "every K must exceed 2");
  if (segments == 0) fail(ErrorKind::Usage, "segment count must be positive");
  if (thresholds.empty()) fail(ErrorKind::Usage, "at least one threshold is required");
  for (double t : thresholds)
    if (!(t > 0.0)) fail(ErrorKind::Usage, "thresholds must be positive");
  for (double f : effective_fractions)
    if (!(f > 0.0 && f <= 1.0)) fail(ErrorKind::Usage, "effective fractions must lie in (0, 1]");
  if (!(denoise_fraction >= 0.0 && denoise_fraction < 1.0)) {
    fail(ErrorKind::InvalidFraction, "denoise energy fraction must lie in [0, 1)");
  }
  if (!(noise_std >= 0.0)) fail(ErrorKind::Usage, "noise std must be nonnegative");
  if (packet_size == 0 || runs == 0) fail(ErrorKind::Usage, "packet size and run count must be positive");
  engine.validate();
}

std::vector<std::size_t> ExperimentConfig::resolved_k_list() const {
  if (!k_list.empty()) return k_list;
  std::vector<std::size_t> ks;
  for (std::size_t k = 170; k <= 470; k += 30) ks.push_back(k);
  return ks;
}

std::vector<std::size_t> ExperimentConfig::resolved_loss_counts() const {
  if (!loss_counts.empty()) return loss_counts;
  std::vector<std::size_t> out;
  for (std::size_t l = 1; l <= 26; ++l) out.push_back(l);
  return out;
}

std::vector<std::string> metric_labels(const ExperimentConfig& config) {
  std::vector<std::string> labels{"strict"};
  for (double f : config.effective_fractions) {
    const double inv = 1.0 / f;
    if (std::abs(inv - std::round(inv)) < 1e-9) labels.push_back("top-1/" + std::to_string(std::lround(inv)));
    else labels.push_back("top-" + num(f));
  }
  return labels;
}

std::vector<Eigen::VectorXd> truth_segments(const ExperimentConfig& config) {
  const auto n = static_cast<Eigen::Index>(config.n);
  std::vector<Eigen::VectorXd> segs;
  if (!config.signal_file.empty()) {
    const Eigen::VectorXd record = io::read_signal(config.signal_file);
    const auto available = static_cast<std::size_t>(record.size()) / config.n;
    if (available == 0) {
      fail(ErrorKind::Shape, "signal file " + config.signal_file + " holds fewer than n=" +
                                 std::to_string(config.n) + " samples");
    }
    const std::size_t count = std::min(available, config.segments);
    for (std::size_t s = 0; s < count; ++s)
      segs.push_back(wavelet::forward(record.segment(static_cast<Eigen::Index>(s) * n, n)));
  } else {
    for (std::size_t s = 0; s < config.segments; ++s) {
      segs.push_back(synthetic::generate(config.synthetic, config.n,
                                         synthetic::derive_seed(config.master_seed, kTagSignal, s)));
    }
  }
  if (config.denoise_fraction > 0.0) {
    if (config.whole_record) {
      Eigen::VectorXd all(n * static_cast<Eigen::Index>(segs.size()));
      for (std::size_t s = 0; s < segs.size(); ++s) all.segment(static_cast<Eigen::Index>(s) * n, n) = segs[s];
      all = metrics::denoise_by_energy(all, config.denoise_fraction);
      for (std::size_t s = 0; s < segs.size(); ++s) segs[s] = all.segment(static_cast<Eigen::Index>(s) * n, n);
    } else {
      for (auto& w : segs) w = metrics::denoise_by_energy(w, config.denoise_fraction);
    }
  }
  return segs;
}

SegmentOutcome score_segment(Algorithm algorithm, const sensing::Dictionary& dict, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& truth, const ExperimentConfig& config) {
  SegmentOutcome out;
  out.effective.assign(config.effective_fractions.size(), kInf);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ReconstructionResult r = run_engine(algorithm, dict, y, config.engine);
    out.strict = metrics::strict_re(truth, r.mean_coeffs);
    for (std::size_t e = 0; e < config.effective_fractions.size(); ++e) {
      const auto t = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(config.effective_fractions[e] * static_cast<double>(config.n))));
      out.effective[e] = metrics::effective_re(truth, r.mean_coeffs, metrics::top_indices(truth, t));
    }
    out.mean_std = mean_nonzero_std(r);
    out.active_count = r.active_count;
  } catch (const Error&) {
    out.failed = true;
    out.strict = kInf;
    out.effective.assign(config.effective_fractions.size(), kInf);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

SweepReport sweep_cr(const ExperimentConfig& config) {
  config.validate();
  const auto truths = truth_segments(config);
  SweepReport report;
  report.sweep = "cr";
  report.header = header_lines(config, "cr");
  for (std::size_t k : config.resolved_k_list()) {
    const auto setup = sensing::generate_projection(k, config.n, synthetic::derive_seed(config.master_seed, kTagPhi, k));
    const auto dict = sensing::build_dictionary(setup);
    SweepPoint pt;
    pt.k = k;
    pt.cr = static_cast<double>(config.n) / static_cast<double>(k);
    for (std::size_t s = 0; s < truths.size(); ++s) {
      const wavelet::SignalSegment x(wavelet::inverse(truths[s]));
      const auto y = sensing::compress(setup, x, config.noise_std,
                                       synthetic::derive_seed(config.master_seed, kTagNoise, k, s));
      pt.outcomes.push_back(score_segment(config.algorithm, dict, y.y, truths[s], config));
    }
    report.points.push_back(std::move(pt));
  }
  aggregate(report, config);
  return report;
}

SweepReport sweep_loss(const ExperimentConfig& config) {
  config.validate();
  const auto truths = truth_segments(config);
  SweepReport report;
  report.sweep = "loss";
  report.header = header_lines(config, "loss");
  const std::size_t k = config.n;
  const auto setup = sensing::generate_projection(k, config.n, synthetic::derive_seed(config.master_seed, kTagPhi, k));
  const auto dict = sensing::build_dictionary(setup);
  std::vector<sensing::CompressedVector> ys;
  for (std::size_t s = 0; s < truths.size(); ++s) {
    const wavelet::SignalSegment x(wavelet::inverse(truths[s]));
    ys.push_back(sensing::compress(setup, x, config.noise_std, synthetic::derive_seed(config.master_seed, kTagNoise, k, s)));
  }
  for (std::size_t lost : config.resolved_loss_counts()) {
    SweepPoint pt;
    pt.k = k;
    pt.lost_packets = lost;
    pt.cr = 1.0;
    for (std::size_t r = 0; r < config.runs; ++r) {
      const std::size_t s = r % truths.size();
      const auto pattern = sensing::random_loss_pattern(
          k, config.packet_size, lost, synthetic::derive_seed(config.master_seed, kTagLoss, lost, r));
      pt.loss_rate = pattern.loss_rate(k);
      const auto kept = sensing::apply_packet_loss(ys[s], setup, pattern);
      const auto dict_l = sensing::delete_rows(dict, pattern);
      pt.outcomes.push_back(score_segment(config.algorithm, dict_l, kept.first.y, truths[s], config));
    }
    report.points.push_back(std::move(pt));
  }
  aggregate(report, config);
  return report;
}

double SweepReport::acceptance(std::size_t point, double threshold, const std::string& metric) const {
  for (const auto& r : records)
    if (r.point == point && r.threshold == threshold && r.metric == metric) return r.acceptance;
  fail(ErrorKind::Shape, "no record for point " + std::to_string(point) + " metric " + metric);
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os << "# bcs sweep report\n";
  for (const auto& h : header) os << "# " << h << "\n";
  for (const auto& r : records) {
    os << sweep << ',' << r.point << ',' << num(r.cr) << ',' << num(r.loss_rate) << ',' << num(r.threshold) << ','
       << r.metric << ',' << num(r.acceptance) << ',' << num(r.mean_posterior_std) << ','
       << (r.seconds_per_segment < 0.0 ? std::string("NA") : num(r.seconds_per_segment)) << '\n';
  }
  return os.str();
}

std::string format_result(const ReconstructionResult& result, Algorithm algorithm, std::size_t k) {
  std::ostringstream os;
  os << "# bcs reconstruction result\n# algorithm=" << to_string(algorithm) << "\n# k=" << k
     << "\n# n=" << result.mean_coeffs.size() << "\n";
  const auto section = [&](const char* name, const Eigen::VectorXd& v) {
    os << name << "\nindex,value\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << i << ',' << exact(v[i]) << '\n';
  };
  section("MEAN_SIGNAL", result.mean_signal);
  section("MEAN_COEFFS", result.mean_coeffs);
  section("COEFF_STD", result.coeff_std);
  os << "DIAGNOSTICS\nkey,value\n"
     << "active_count," << result.active_count << '\n'
     << "outer_iterations," << result.outer_iterations << '\n'
     << "inner_iterations_total," << result.inner_iterations_total << '\n'
     << "converged," << (result.converged ? "true" : "false") << '\n'
     << "final_noise_param," << exact(result.final_noise_param) << '\n'
     << "breakdowns," << result.breakdowns << '\n'
     << "mean_nonzero_std," << exact(mean_nonzero_std(result)) << '\n';
  return os.str();
}

}  // namespace bcs::experiment
