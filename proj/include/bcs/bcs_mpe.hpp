#pragma once

#include <optional>

#include <Eigen/Dense>

#include "bcs/engine.hpp"
#include "bcs/sbl_core.hpp"
#include "bcs/sensing.hpp"

// Bottom-up sparse Bayesian reconstruction with a MAP estimate of the
// prediction-error precision beta. The state carries Sigma = beta^-1 C^-1.
namespace bcs::mpe {

/// s^2 / (beta q^2 - s). Infinite (signed) when beta q^2 == s.
double gamma_hat(double s, double q, double beta);

// Log-evidence gains at fixed beta. Add uses the cached S, Q of an inactive
// term; re-estimation uses s, q; deletion uses alpha - S and Q.
double delta_l_add(double s, double q, double beta);
double delta_l_reestimate(double s, double q, double beta, double alpha_old, double alpha_new);
double delta_l_delete(double alpha, double alpha_minus_s, double cap_q, double beta);

/// (K - 2) / y^T B^-1 y.
double update_beta(const SblState& state, const Problem& problem);

/// Gain of each candidate action at the state's current beta, best first by
/// delta_l (ties to the lowest index).
Survey survey(const SblState& state, const Problem& problem);
std::optional<ActionPlan> plan_actions(const SblState& state, const Problem& problem);

void apply_action(SblState& state, const Problem& problem, const ActionPlan& plan);

/// Seeds the model with one term at alpha = 1 and beta from the seeded
/// model, ready for the first inner loop.
SblState initial_state(const Problem& problem);

ReconstructionResult reconstruct(const sensing::Dictionary& dict, const Eigen::VectorXd& y,
                                 const EngineOptions& opts = {});

}  // namespace bcs::mpe
