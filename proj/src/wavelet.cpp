#include "bcs/wavelet.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "bcs/error.hpp"

namespace bcs::wavelet {
namespace {

void require_valid_length(std::size_t n) {
  if (n < 2 || !is_power_of_two(n)) {
    fail(ErrorKind::InvalidSize,
         "Haar transform needs a power-of-two length >= 2, got " + std::to_string(n));
  }
}

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) fail(ErrorKind::InvalidSize, std::string(what) + " contains non-finite values");
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

SignalSegment::SignalSegment(Eigen::VectorXd samples) : samples_(std::move(samples)) {
  require_valid_length(size());
  require_finite(samples_, "signal segment");
}

WaveletCoefficients::WaveletCoefficients(Eigen::VectorXd coeffs) : coeffs_(std::move(coeffs)) {
  require_valid_length(size());
  require_finite(coeffs_, "wavelet coefficients");
}

Eigen::VectorXd haar_basis_column(std::size_t n, std::size_t index) {
  require_valid_length(n);
  if (index >= n) {
    fail(ErrorKind::InvalidSize,
         "basis index " + std::to_string(index) + " out of range for N=" + std::to_string(n));
  }
  Eigen::VectorXd col = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (index == 0) {
    col.setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    return col;
  }
  // index in [2^level, 2^(level+1)) is the (index - 2^level)-th detail
  // function of level `level`, supported on a block of n / 2^level samples.
  std::size_t level = 0;
  while ((std::size_t{2} << level) <= index) ++level;
  const std::size_t position = index - (std::size_t{1} << level);
  const std::size_t support = n >> level;
  const double amp = 1.0 / std::sqrt(static_cast<double>(support));
  const auto start = static_cast<Eigen::Index>(position * support);
  const auto half = static_cast<Eigen::Index>(support / 2);
  col.segment(start, half).setConstant(amp);
  col.segment(start + half, half).setConstant(-amp);
  return col;
}

Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto n = static_cast<std::size_t>(x.size());
  require_valid_length(n);
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::VectorXd out = x;
  std::vector<double> tmp(n);
  for (std::size_t len = n; len > 1; len /= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double a = out[static_cast<Eigen::Index>(2 * i)];
      const double b = out[static_cast<Eigen::Index>(2 * i + 1)];
      tmp[i] = (a + b) * r;
      tmp[half + i] = (a - b) * r;
    }
    for (std::size_t i = 0; i < len; ++i) out[static_cast<Eigen::Index>(i)] = tmp[i];
  }
  return out;
}

Eigen::VectorXd inverse(const Eigen::Ref<const Eigen::VectorXd>& w) {
  const auto n = static_cast<std::size_t>(w.size());
  require_valid_length(n);
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::VectorXd out = w;
  std::vector<double> tmp(n);
  for (std::size_t len = 2; len <= n; len *= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double a = out[static_cast<Eigen::Index>(i)];
      const double d = out[static_cast<Eigen::Index>(half + i)];
      tmp[2 * i] = (a + d) * r;
      tmp[2 * i + 1] = (a - d) * r;
    }
    for (std::size_t i = 0; i < len; ++i) out[static_cast<Eigen::Index>(i)] = tmp[i];
  }
  return out;
}

WaveletCoefficients forward(const SignalSegment& x) {
  return WaveletCoefficients(forward(Eigen::Ref<const Eigen::VectorXd>(x.samples())));
}

SignalSegment inverse(const WaveletCoefficients& w) {
  return SignalSegment(inverse(Eigen::Ref<const Eigen::VectorXd>(w.coeffs())));
}

}  // namespace bcs::wavelet
