#include "bcs/engine.hpp"

#include <cmath>

#include "bcs/error.hpp"
#include "bcs/wavelet.hpp"

namespace bcs {

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Add: return "add";
    case ActionKind::Reestimate: return "reestimate";
    case ActionKind::Delete: return "delete";
  }
  return "?";
}

void EngineOptions::validate() const {
  if (!(outer_tolerance > 0.0) || !(inner_log_alpha_tolerance > 0.0) || max_outer == 0 ||
      max_inner == 0 || !(stall_delta_l > 0.0)) {
    fail(ErrorKind::InvalidHyperparameter, "engine tolerances and iteration caps must be positive");
  }
}

double alpha_from_gamma(double gamma) {
  return (gamma > 0.0 && std::isfinite(gamma)) ? gamma : kInf;
}

void fill_moments(ReconstructionResult& result, const SblState& state, double cov_scale) {
  const auto n = static_cast<Eigen::Index>(state.n_total());
  const auto na = static_cast<Eigen::Index>(state.n_active());
  const Eigen::MatrixXd cov = cov_scale * state.lambda();

  result.mean_coeffs = full_mean(state);
  result.coeff_std = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd psi_a(n, na);
  for (Eigen::Index j = 0; j < na; ++j) {
    const auto m = static_cast<Eigen::Index>(state.active[j]);
    result.coeff_std[m] = std::sqrt(std::max(cov(j, j), 0.0));
    psi_a.col(j) = wavelet::haar_basis_column(state.n_total(), state.active[j]);
  }
  result.mean_signal = wavelet::inverse(result.mean_coeffs);
  const Eigen::MatrixXd pc = psi_a * cov;
  result.signal_std = pc.cwiseProduct(psi_a).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
  result.active = state.active;
  result.alpha = state.alpha;
  result.active_count = state.n_active();
}

double mean_nonzero_std(const ReconstructionResult& result) {
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < result.coeff_std.size(); ++i) {
    if (result.coeff_std[i] > 0.0) {
      sum += result.coeff_std[i];
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace bcs
