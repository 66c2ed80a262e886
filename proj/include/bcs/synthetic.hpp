#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Synthetic wavelet-domain test signals.
namespace bcs::synthetic {

/// Independent 64-bit seed for (master, tag, a, b) via std::seed_seq.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0);

/// t unit-normal coefficients at uniformly chosen positions, zeros elsewhere.
Eigen::VectorXd exact_sparse(std::size_t n, std::size_t t, std::uint64_t seed);

/// t N(0,1) coefficients plus a N(0, floor_sigma^2) floor on the remaining n - t.
Eigen::VectorXd approx_sparse(std::size_t n, std::size_t t, double floor_sigma, std::uint64_t seed);

/// Heavy-tailed record: magnitudes exp(spread * z), z ~ N(0,1), random signs.
/// With spread 0.865, energy thresholds of 0.4 and 0.2 over a 100-segment
/// record keep about 37 and 98 of every 512 coefficients.
Eigen::VectorXd lognormal_coeffs(std::size_t n, double spread, std::uint64_t seed);

enum class Kind { ExactSparse, ApproxSparse, Lognormal };

struct Spec {
  Kind kind = Kind::ExactSparse;
  std::size_t t = 20;
  double floor_sigma = 0.01;
  double spread = 0.865;

  std::string describe() const;
};

/// Parses "exact:T", "approx:T:SIGMA" or "lognormal[:SPREAD]".
Spec parse_spec(const std::string& text);

/// Coefficients of one segment.
Eigen::VectorXd generate(const Spec& spec, std::size_t n, std::uint64_t seed);

}  // namespace bcs::synthetic
