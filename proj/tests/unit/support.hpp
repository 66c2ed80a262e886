#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bcs/error.hpp"
#include "bcs/sensing.hpp"

namespace testing {

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

template <class A, class B>
double rel(const A& a, const B& b) {
  const double den = std::max(b.norm(), 1e-300);
  return (a - b).norm() / den;
}

inline Eigen::VectorXd randn(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = nd(rng);
  return v;
}

inline bcs::sensing::Dictionary random_dict(std::size_t k, std::size_t n, std::uint64_t seed) {
  return bcs::sensing::build_dictionary(bcs::sensing::generate_projection(k, n, seed));
}

// Distinct random indices in [0, n).
inline std::vector<std::size_t> pick(std::size_t n, std::size_t t, std::mt19937_64& rng) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(t);
  return all;
}

template <class F>
bcs::ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const bcs::Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected a bcs::Error");
}

}  // namespace testing
