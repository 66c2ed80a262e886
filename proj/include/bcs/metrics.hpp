#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace bcs::metrics {

/// ||truth - estimate||^2 / ||truth||^2. Throws UndefinedRatio for zero truth.
double strict_re(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate);

/// Relative squared error restricted to the indices in `id`.
double effective_re(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate,
                    const std::vector<std::size_t>& id);

/// Sorted indices of the t largest magnitudes; the lower index wins ties.
std::vector<std::size_t> top_indices(const Eigen::VectorXd& coeffs, std::size_t t);

/// Zeros the smallest-magnitude coefficients whose cumulative energy stays
/// within fraction * total energy. Among equal magnitudes the lower index is
/// zeroed first.
Eigen::VectorXd denoise_by_energy(const Eigen::VectorXd& coeffs, double fraction);

/// Fraction of entries strictly below threshold. Throws EmptySample on empty input.
double acceptance_rate(const std::vector<double>& errors, double threshold);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace bcs::metrics
