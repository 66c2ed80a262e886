#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bcs/sensing.hpp"

namespace bcs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Measurements bound to their dictionary, with the products every engine
/// step needs precomputed.
struct Problem {
  const sensing::Dictionary* dict = nullptr;
  Eigen::VectorXd y;
  Eigen::VectorXd theta_t_y;  // Theta^T y
  double y_sq = 0.0;          // y^T y

  static Problem make(const sensing::Dictionary& dict, Eigen::VectorXd y);

  std::size_t k() const { return dict->k(); }
  std::size_t n() const { return dict->n(); }
  const Eigen::MatrixXd& theta() const { return dict->theta; }
};

/// Which posterior factor an SblState carries.
///   Sigma:  beta^-1 C^-1  (MAP prediction-error precision engine)
///   Lambda: C^-1          (marginalized precision engine)
/// with C = A + Theta_a^T Theta_a over the active set. Sigma = Lambda / beta.
enum class FactorKind { Sigma, Lambda };

/// Leave-one-out factors of one basis term: s = Theta_n^T B_-n^-1 Theta_n,
/// q = Theta_n^T B_-n^-1 y, g = y^T B_-n^-1 y + 2 b0 (Lambda states only).
struct FactorTriple {
  double s = 0.0;
  double q = 0.0;
  double g = std::numeric_limits<double>::quiet_NaN();
};

/// Evolving reconstruction state. Inactive terms have alpha = infinity and are
/// absent from `active`; for them the cached S/Q/G equal s/q/g exactly.
struct SblState {
  FactorKind factor_kind = FactorKind::Sigma;

  std::vector<std::size_t> active;        // global basis indices, model order
  std::vector<std::ptrdiff_t> position;   // N entries; -1 when inactive
  Eigen::VectorXd alpha;                  // N'
  Eigen::VectorXd mu;                     // N'
  Eigen::MatrixXd post_factor;            // N' x N', Sigma or Lambda
  Eigen::MatrixXd gram_active;            // N x N', column j = Theta^T Theta_{active[j]}

  Eigen::VectorXd cap_s;  // S_m = Theta_m^T B^-1 Theta_m
  Eigen::VectorXd cap_q;  // Q_m = Theta_m^T B^-1 y
  Eigen::VectorXd cap_g;  // G_m = y^T B^-1 y + 2 b0 (Lambda states only)

  double beta = 1.0;  // Sigma states
  double a0 = 1.0;    // Lambda states
  double b0 = 0.0;

  std::size_t n_total() const { return position.size(); }
  std::size_t n_active() const { return active.size(); }
  bool is_active(std::size_t m) const { return position[m] >= 0; }
  double alpha_of(std::size_t m) const;

  /// C^-1 regardless of which factor is stored.
  Eigen::MatrixXd lambda() const;
  double lambda_diag(Eigen::Index j) const;

  /// alpha_m - S_m for an active term, taken from the posterior when the
  /// direct difference would cancel.
  double alpha_minus_s(std::size_t m) const;

  /// s_m, q_m (and g_m for Lambda states) from the caches. Active terms use
  /// s = alpha S / (alpha - S), q = alpha Q / (alpha - S), g = G + Q^2/(alpha - S),
  /// switching to the equivalent posterior forms s = 1/Lambda_jj - alpha,
  /// q = mu_j / Lambda_jj, g = G + mu_j^2 / Lambda_jj once |alpha - S| falls below
  /// kGuardRelative * alpha.
  FactorTriple factors(std::size_t m) const;

  static constexpr double kGuardRelative = 1e-3;
};

/// Empty model: S = ||Theta_m||^2, Q = Theta_m^T y, G = ||y||^2 + 2 b0.
SblState empty_state(const Problem& problem, FactorKind kind);

/// Replaces the active set and alphas, then recomputes mu, the posterior
/// factor, the active Gram columns and every cache densely. Uses state.beta
/// for Sigma states and state.b0 for G.
void set_model(SblState& state, const Problem& problem, std::vector<std::size_t> active,
               const Eigen::VectorXd& alpha);

/// Index maximizing (Theta_n^T y)^2 / ||Theta_n||^2, lowest index on ties.
std::size_t seed_index(const Problem& problem);

/// y^T B^-1 y = ||y - Theta_a mu||^2 + sum_j alpha_j mu_j^2 (no K x K matrix).
double y_quad(const SblState& state, const Problem& problem);

/// Recomputes S, Q (and G) for all m from the current posterior factor and mean.
void refresh_caches(SblState& state, const Problem& problem);

/// Rescales a Sigma factor after beta changes (S and Q do not depend on beta).
void rescale_beta(SblState& state, double new_beta);

/// Shifts G after b0 changes.
void shift_b0(SblState& state, double new_b0);

// Posterior mean expanded to all N coefficients (zeros off the active set).
Eigen::VectorXd full_mean(const SblState& state);

// Rank-one updates shared by both engines. They touch mu, the posterior
// factor, the active Gram columns and every S/Q/G cache, and never invert a
// K x K or N x N matrix. On a positive-definiteness failure they throw
// ErrorKind::NumericalBreakdown and leave the state untouched.

/// Adds inactive term n with precision alpha.
void add_term(SblState& state, const Problem& problem, std::size_t n, double alpha);

/// Changes the precision of active term n to new_alpha.
void reestimate_term(SblState& state, std::size_t n, double new_alpha);

/// Removes active term n.
void delete_term(SblState& state, std::size_t n);

/// Largest dimension for which every update also runs a full Cholesky check.
inline constexpr std::size_t kFullPdCheckMax = 128;

// ---------------------------------------------------------------------------
// Dense oracles. Slow, explicit, and independent of the incremental caches.
// ---------------------------------------------------------------------------
namespace dense {

/// B = I + sum_{n in active} alpha_n^-1 Theta_n Theta_n^T.
Eigen::MatrixXd dense_B(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                        const sensing::Dictionary& dict);

struct Posterior {
  Eigen::VectorXd mu;
  Eigen::MatrixXd cov;  // Sigma = beta^-1 C^-1 (or C^-1 when beta == 1)
};

/// mu = C^-1 Theta^T y, Sigma = beta^-1 C^-1, C = A + Theta_a^T Theta_a.
/// Throws IllConditioned when cond(C) > 1e14.
Posterior dense_posterior(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                          double beta, const sensing::Dictionary& dict, const Eigen::VectorXd& y);

/// s_n, q_n, g_n by explicit inversion of B with term n removed.
FactorTriple dense_factors(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                           const sensing::Dictionary& dict, const Eigen::VectorXd& y, double b0,
                           std::size_t n);

/// log N(y | 0, beta^-1 B).
double log_evidence_mpe(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                        double beta, const sensing::Dictionary& dict, const Eigen::VectorXd& y);

/// log St(y | 0, (a0/b0) B^-1, 2 a0).
double log_evidence_ipe(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                        double a0, double b0, const sensing::Dictionary& dict,
                        const Eigen::VectorXd& y);

/// y^T B^-1 y with B assembled explicitly.
double y_quad(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
              const sensing::Dictionary& dict, const Eigen::VectorXd& y);

}  // namespace dense
}  // namespace bcs
