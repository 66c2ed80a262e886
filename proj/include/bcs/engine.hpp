#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bcs/sbl_core.hpp"

namespace bcs {

enum class ActionKind { Add, Reestimate, Delete };

const char* to_string(ActionKind kind);

/// One inner-loop step chosen by a planner.
struct ActionPlan {
  ActionKind kind = ActionKind::Add;
  std::size_t n = 0;             // global basis index
  double new_alpha = kInf;       // infinity for deletions
  double delta_l = 0.0;          // predicted log-evidence increase
  std::ptrdiff_t j = -1;         // position in the active list (re-estimate/delete)
  // Rank-one coefficient of the factor update. MPE: in Sigma units, i.e.
  // (Sigma_jj + 1/(beta (new - old alpha)))^-1 or 1/Sigma_jj for deletion.
  // IPE: the same expressions in Lambda units.
  double update_coeff = 0.0;
};

/// Everything a planner learns in one pass over the N terms.
struct Survey {
  std::optional<ActionPlan> best;
  bool any_structural = false;        // some add or delete is on offer
  double max_log_alpha_change = 0.0;  // over active terms that would be re-estimated
};

struct EngineOptions {
  double outer_tolerance = 0.1;
  double inner_log_alpha_tolerance = 1e-6;
  std::size_t max_outer = 50;
  std::size_t max_inner = 1000;
  double stall_delta_l = 1e-12;
  bool record_actions = false;

  /// Throws ErrorKind::InvalidHyperparameter unless every field is positive.
  void validate() const;
};

struct ActionRecord {
  ActionKind kind;
  std::size_t n;
  double new_alpha;
  double delta_l;
  std::size_t outer;
};

struct ReconstructionResult {
  Eigen::VectorXd mean_coeffs;  // N, zero off the active set
  Eigen::VectorXd coeff_std;    // N, zero off the active set
  Eigen::VectorXd mean_signal;  // Psi * mean_coeffs
  Eigen::VectorXd signal_std;   // per-sample posterior standard deviation
  std::vector<std::size_t> active;
  Eigen::VectorXd alpha;  // aligned with `active`
  std::size_t active_count = 0;
  std::size_t outer_iterations = 0;
  std::size_t inner_iterations_total = 0;
  std::size_t breakdowns = 0;
  bool converged = false;
  double final_noise_param = 0.0;  // beta (MPE) or b0 (IPE)
  std::vector<ActionRecord> actions;
};

/// alpha estimate from a gamma value: gamma if positive and finite, else infinity.
double alpha_from_gamma(double gamma);

/// Fills the moment fields of a result from a state whose coefficient
/// covariance is cov_scale * C^-1.
void fill_moments(ReconstructionResult& result, const SblState& state, double cov_scale);

/// Mean nonzero posterior standard deviation (0 for an empty model).
double mean_nonzero_std(const ReconstructionResult& result);

}  // namespace bcs
