#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bcs/wavelet.hpp"

namespace bcs::sensing {

/// K x N Gaussian projection plus where it came from.
///
/// Generated matrices are filled row by row from std::mt19937_64 seeded with
/// the given seed, drawing std::normal_distribution<double>(0, 1). The first
/// K rows of a (K, N, seed) matrix therefore coincide with the first K rows
/// of any larger matrix drawn with the same (N, seed).
struct ProjectionSetup {
  Eigen::MatrixXd phi;
  std::string provenance;

  std::size_t k() const { return static_cast<std::size_t>(phi.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(phi.cols()); }
};

/// Theta = Phi * Psi with cached squared column norms.
struct Dictionary {
  Eigen::MatrixXd theta;
  Eigen::VectorXd col_sq_norms;

  std::size_t k() const { return static_cast<std::size_t>(theta.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(theta.cols()); }
};

struct CompressedVector {
  Eigen::VectorXd y;

  std::size_t k() const { return static_cast<std::size_t>(y.size()); }
};

/// Lost packets of a measurement vector. Packet p covers measurement rows
/// [p * packet_size, (p + 1) * packet_size).
struct PacketLossPattern {
  std::size_t packet_size = 4;
  std::vector<std::size_t> lost_packets;

  /// Throws ErrorKind::InvalidPattern unless the pattern fits a K-vector.
  void validate(std::size_t k) const;
  double loss_rate(std::size_t k) const;
};

ProjectionSetup generate_projection(std::size_t k, std::size_t n, std::uint64_t seed);

/// Wraps an externally supplied matrix (e.g. loaded from disk).
ProjectionSetup projection_from_matrix(Eigen::MatrixXd phi, std::string provenance);

/// y = Phi x (+ N(0, noise_std^2) noise drawn from noise_seed when noise_std > 0).
/// Each entry is a left-to-right dot product of one row of Phi with x, so the
/// value of y_i depends on row i alone.
CompressedVector compress(const ProjectionSetup& setup, const wavelet::SignalSegment& x,
                          double noise_std = 0.0, std::uint64_t noise_seed = 0);

/// Row i of Theta is the forward Haar transform of row i of Phi, so deleting
/// rows of Phi and rebuilding gives bitwise the same rows.
Dictionary build_dictionary(const ProjectionSetup& setup);

std::pair<CompressedVector, ProjectionSetup> apply_packet_loss(const CompressedVector& y,
                                                               const ProjectionSetup& setup,
                                                               const PacketLossPattern& pattern);

/// Surviving measurement rows, in original order.
std::vector<Eigen::Index> surviving_rows(std::size_t k, const PacketLossPattern& pattern);

/// Row-deleted copy of a dictionary (equivalent to rebuilding from Phi_l).
Dictionary delete_rows(const Dictionary& dict, const PacketLossPattern& pattern);

/// `lost_count` distinct packets chosen uniformly among k / packet_size.
PacketLossPattern random_loss_pattern(std::size_t k, std::size_t packet_size,
                                      std::size_t lost_count, std::uint64_t seed);

}  // namespace bcs::sensing
