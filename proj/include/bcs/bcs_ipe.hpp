#pragma once

#include <optional>

#include <Eigen/Dense>

#include "bcs/engine.hpp"
#include "bcs/sbl_core.hpp"
#include "bcs/sensing.hpp"

// Bottom-up sparse Bayesian reconstruction with beta integrated out under a
// Gamma(a0, b0) prior. The state carries Lambda = C^-1 and the G caches.
namespace bcs::ipe {

struct IpeSettings {
  double a0 = 1.0;
  // b0 = a0 y^T B^-1 y / (K - b0_offset) at every outer update. The default
  // offset 0 gives b0 = (a0/K) y^T B^-1 y.
  double b0_offset = 0.0;
  // Apply the same rule before the first inner loop instead of starting
  // from b0 = 0.
  bool tie_initial_b0 = false;

  void validate(std::size_t k) const;
};

/// (s^2 - s q^2/g) / ((K + 2 a0) q^2/g - s). Infinite when the denominator vanishes.
double gamma_tilde(double s, double q, double g, std::size_t k, double a0);

// Student-t log-evidence gains with c = K + 2 a0. big_g is the shared
// y^T B^-1 y + 2 b0 of the current model.
double delta_l_add(double s, double q, double g, double alpha, double c);
double delta_l_reestimate(double s, double q, double big_g, double alpha_old, double alpha_new, double c);
double delta_l_delete(double alpha, double alpha_minus_s, double cap_q, double big_g, double c);

/// (a0 / K) y^T B^-1 y.
double update_b0(const SblState& state, const Problem& problem, double a0);

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // (b0' / (a0' - 1)) Lambda
};

/// Student-t posterior mean and covariance with a0' = a0 + K/2 and
/// b0' = b0 + y^T B^-1 y / 2. Throws UndefinedVariance when a0' <= 1.
Moments posterior_moments(const SblState& state, const Problem& problem);
double covariance_scale(const SblState& state, const Problem& problem);

Survey survey(const SblState& state, const Problem& problem);
std::optional<ActionPlan> plan_actions(const SblState& state, const Problem& problem);

void apply_action(SblState& state, const Problem& problem, const ActionPlan& plan);

/// Seeds the model with one term at alpha = 1; b0 = 0 unless tied.
SblState initial_state(const Problem& problem, const IpeSettings& settings = {});

ReconstructionResult reconstruct(const sensing::Dictionary& dict, const Eigen::VectorXd& y,
                                 const EngineOptions& opts = {}, const IpeSettings& settings = {});

}  // namespace bcs::ipe
