#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace bcs::wavelet {

// Orthonormal discrete Haar transform.
//
// Coefficient layout is approximation-first dyadic: index 0 holds the
// scaling coefficient, then detail levels follow from coarsest (one
// coefficient) to finest (N/2 coefficients). Columns of the synthesis
// matrix Psi are addressed with 0-based indices in the same order, so
// x = Psi * w and w = Psi^T * x.

bool is_power_of_two(std::size_t n);

/// A time-domain block of N samples, N a power of two and N >= 2.
class SignalSegment {
 public:
  explicit SignalSegment(Eigen::VectorXd samples);

  const Eigen::VectorXd& samples() const { return samples_; }
  std::size_t size() const { return static_cast<std::size_t>(samples_.size()); }

 private:
  Eigen::VectorXd samples_;
};

class WaveletCoefficients {
 public:
  explicit WaveletCoefficients(Eigen::VectorXd coeffs);

  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  std::size_t size() const { return static_cast<std::size_t>(coeffs_.size()); }

 private:
  Eigen::VectorXd coeffs_;
};

/// Closed-form column `index` (0-based) of the N x N Haar synthesis matrix.
/// Throws ErrorKind::InvalidSize for non-power-of-two N or index >= N.
Eigen::VectorXd haar_basis_column(std::size_t n, std::size_t index);

WaveletCoefficients forward(const SignalSegment& x);
SignalSegment inverse(const WaveletCoefficients& w);

// Unchecked-type variants used on hot paths (dictionary rows, sweeps). They
// still validate the length.
Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd inverse(const Eigen::Ref<const Eigen::VectorXd>& w);

}  // namespace bcs::wavelet
