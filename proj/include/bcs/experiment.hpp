#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bcs/engine.hpp"
#include "bcs/sensing.hpp"
#include "bcs/synthetic.hpp"

// Segment-level reconstruction experiments: compression-ratio sweeps and
// packet-loss sweeps with acceptance-rate reports.
namespace bcs::experiment {

enum class Algorithm { Mpe, Ipe };

Algorithm parse_algorithm(const std::string& name);
const char* to_string(Algorithm algorithm);

ReconstructionResult run_engine(Algorithm algorithm, const sensing::Dictionary& dict, const Eigen::VectorXd& y,
                                const EngineOptions& opts);

struct ExperimentConfig {
  std::size_t n = 512;
  std::vector<std::size_t> k_list;  // empty: 170, 200, ..., 470
  Algorithm algorithm = Algorithm::Ipe;
  std::uint64_t master_seed = 0;
  std::size_t segments = 100;
  double denoise_fraction = 0.0;
  bool whole_record = true;  // denoise the concatenated record rather than each segment
  std::vector<double> thresholds{0.01, 0.02, 0.05, 0.10, 0.20};
  std::vector<double> effective_fractions{1.0 / 16.0, 1.0 / 4.0};
  std::size_t packet_size = 4;
  std::vector<std::size_t> loss_counts;  // empty: 1..26
  std::size_t runs = 100;
  double noise_std = 0.0;
  EngineOptions engine;
  bool timing = false;  // wall-clock column; off keeps reports byte-stable
  std::string signal_file;  // empty: synthetic source
  synthetic::Spec synthetic;

  void validate() const;
  std::vector<std::size_t> resolved_k_list() const;
  std::vector<std::size_t> resolved_loss_counts() const;
};

/// Ground-truth wavelet coefficients per segment, after optional denoising.
std::vector<Eigen::VectorXd> truth_segments(const ExperimentConfig& config);

struct SegmentOutcome {
  bool failed = false;
  double strict = kInf;
  std::vector<double> effective;  // aligned with effective_fractions
  double mean_std = 0.0;          // mean nonzero posterior std
  std::size_t active_count = 0;
  double seconds = 0.0;
};

/// Reconstructs one segment and scores it against its truth. Library errors
/// are caught and reported as a failed (unacceptable) outcome.
SegmentOutcome score_segment(Algorithm algorithm, const sensing::Dictionary& dict, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& truth, const ExperimentConfig& config);

struct SweepPoint {
  std::size_t k = 0;
  std::size_t lost_packets = 0;
  double cr = 0.0;
  double loss_rate = 0.0;
  std::vector<SegmentOutcome> outcomes;
};

struct SweepRecord {
  std::size_t point = 0;
  double cr = 0.0;
  double loss_rate = 0.0;
  double threshold = 0.0;
  std::string metric;  // strict, top-1/16, ...
  double acceptance = 0.0;
  double mean_posterior_std = 0.0;
  double seconds_per_segment = -1.0;  // negative when timing is off
};

struct SweepReport {
  std::string sweep;  // "cr" or "loss"
  std::vector<std::string> header;  // key=value config lines
  std::vector<SweepPoint> points;
  std::vector<SweepRecord> records;

  /// Acceptance rate for one (point, threshold, metric) triple.
  double acceptance(std::size_t point, double threshold, const std::string& metric) const;
  std::string to_csv() const;
};

/// Metric labels in report order: strict first, then one per effective fraction.
std::vector<std::string> metric_labels(const ExperimentConfig& config);

SweepReport sweep_cr(const ExperimentConfig& config);
SweepReport sweep_loss(const ExperimentConfig& config);

/// Labeled-section text for a single reconstruction.
std::string format_result(const ReconstructionResult& result, Algorithm algorithm, std::size_t k);

}  // namespace bcs::experiment
