#include "bcs/sensing.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "bcs/error.hpp"

namespace bcs::sensing {

void PacketLossPattern::validate(std::size_t k) const {
  if (packet_size == 0 || k % packet_size != 0) {
    fail(ErrorKind::InvalidPattern, "packet size " + std::to_string(packet_size) +
                                        " does not divide K=" + std::to_string(k));
  }
  const std::size_t packets = k / packet_size;
  std::set<std::size_t> seen;
  for (std::size_t p : lost_packets) {
    if (p >= packets) {
      fail(ErrorKind::InvalidPattern, "lost packet index " + std::to_string(p) + " out of range");
    }
    if (!seen.insert(p).second) {
      fail(ErrorKind::InvalidPattern, "duplicate lost packet index " + std::to_string(p));
    }
  }
  if (lost_packets.size() >= packets) {
    fail(ErrorKind::EmptyMeasurement, "every packet is lost; nothing left to reconstruct from");
  }
}

double PacketLossPattern::loss_rate(std::size_t k) const {
  return static_cast<double>(lost_packets.size() * packet_size) / static_cast<double>(k);
}

ProjectionSetup generate_projection(std::size_t k, std::size_t n, std::uint64_t seed) {
  if (k < 1 || n < 2) {
    fail(ErrorKind::InvalidSize, "projection needs K >= 1 and N >= 2, got K=" + std::to_string(k) +
                                     " N=" + std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProjectionSetup setup;
  setup.phi.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < setup.phi.rows(); ++i)
    for (Eigen::Index j = 0; j < setup.phi.cols(); ++j) setup.phi(i, j) = normal(rng);
  setup.provenance = "seed:" + std::to_string(seed);
  return setup;
}

ProjectionSetup projection_from_matrix(Eigen::MatrixXd phi, std::string provenance) {
  if (phi.rows() < 1 || phi.cols() < 2) {
    fail(ErrorKind::InvalidSize, "projection needs K >= 1 and N >= 2");
  }
  if (!phi.allFinite()) fail(ErrorKind::InvalidSize, "projection contains non-finite entries");
  return ProjectionSetup{std::move(phi), std::move(provenance)};
}

CompressedVector compress(const ProjectionSetup& setup, const wavelet::SignalSegment& x,
                          double noise_std, std::uint64_t noise_seed) {
  if (setup.n() != x.size()) {
    fail(ErrorKind::Shape, "projection has N=" + std::to_string(setup.n()) +
                               " but segment has " + std::to_string(x.size()) + " samples");
  }
  if (!(noise_std >= 0.0)) fail(ErrorKind::InvalidHyperparameter, "noise_std must be >= 0");
  const Eigen::VectorXd& s = x.samples();
  CompressedVector out;
  out.y.resize(setup.phi.rows());
  for (Eigen::Index i = 0; i < setup.phi.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < setup.phi.cols(); ++j) acc += setup.phi(i, j) * s[j];
    out.y[i] = acc;
  }
  if (noise_std > 0.0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> normal(0.0, noise_std);
    for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y[i] += normal(rng);
  }
  return out;
}

Dictionary build_dictionary(const ProjectionSetup& setup) {
  const std::size_t n = setup.n();
  if (!wavelet::is_power_of_two(n)) {
    fail(ErrorKind::InvalidSize, "dictionary needs a power-of-two N, got " + std::to_string(n));
  }
  Dictionary dict;
  dict.theta.resize(setup.phi.rows(), setup.phi.cols());
  for (Eigen::Index i = 0; i < setup.phi.rows(); ++i) {
    const Eigen::VectorXd row = setup.phi.row(i).transpose();
    dict.theta.row(i) = wavelet::forward(row).transpose();
  }
  dict.col_sq_norms = dict.theta.colwise().squaredNorm().transpose();
  return dict;
}

std::vector<Eigen::Index> surviving_rows(std::size_t k, const PacketLossPattern& pattern) {
  pattern.validate(k);
  std::vector<bool> lost(k, false);
  for (std::size_t p : pattern.lost_packets)
    for (std::size_t r = 0; r < pattern.packet_size; ++r) lost[p * pattern.packet_size + r] = true;
  std::vector<Eigen::Index> rows;
  rows.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    if (!lost[i]) rows.push_back(static_cast<Eigen::Index>(i));
  return rows;
}

std::pair<CompressedVector, ProjectionSetup> apply_packet_loss(const CompressedVector& y,
                                                               const ProjectionSetup& setup,
                                                               const PacketLossPattern& pattern) {
  if (y.k() != setup.k()) {
    fail(ErrorKind::Shape, "measurement length " + std::to_string(y.k()) +
                               " does not match projection rows " + std::to_string(setup.k()));
  }
  const auto rows = surviving_rows(y.k(), pattern);
  CompressedVector yl;
  yl.y = y.y(rows);
  ProjectionSetup pl;
  pl.phi = setup.phi(rows, Eigen::all);
  pl.provenance = setup.provenance;
  if (!pattern.lost_packets.empty()) pl.provenance += "+loss";
  return {std::move(yl), std::move(pl)};
}

Dictionary delete_rows(const Dictionary& dict, const PacketLossPattern& pattern) {
  const auto rows = surviving_rows(dict.k(), pattern);
  Dictionary out;
  out.theta = dict.theta(rows, Eigen::all);
  out.col_sq_norms = out.theta.colwise().squaredNorm().transpose();
  return out;
}

PacketLossPattern random_loss_pattern(std::size_t k, std::size_t packet_size,
                                      std::size_t lost_count, std::uint64_t seed) {
  if (packet_size == 0 || k % packet_size != 0) {
    fail(ErrorKind::InvalidPattern, "packet size must divide K");
  }
  const std::size_t packets = k / packet_size;
  if (lost_count >= packets) fail(ErrorKind::EmptyMeasurement, "cannot lose every packet");
  std::vector<std::size_t> all(packets);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates driven only by raw mt19937_64 output.
  for (std::size_t i = 0; i < lost_count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (packets - i));
    std::swap(all[i], all[j]);
  }
  PacketLossPattern pattern;
  pattern.packet_size = packet_size;
  pattern.lost_packets.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(lost_count));
  std::sort(pattern.lost_packets.begin(), pattern.lost_packets.end());
  return pattern;
}

}  // namespace bcs::sensing
