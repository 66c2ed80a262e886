#include "bcs/bcs_mpe.hpp"

#include <cmath>

#include "bcs/error.hpp"
#include "engine_loop.hpp"

namespace bcs::mpe {
namespace {

struct Rule {
  double beta;
  double scale;

  double gamma(const FactorTriple& f) const { return gamma_hat(f.s, f.q, beta); }

  double add_gain(const FactorTriple& f, double) const { return delta_l_add(f.s, f.q, beta); }

  double reestimate_gain(const SblState&, std::size_t, const FactorTriple& f, double a_old,
                         double a_new) const {
    return delta_l_reestimate(f.s, f.q, beta, a_old, a_new);
  }

  double delete_gain(const SblState& state, std::size_t m, const FactorTriple&) const {
    return delta_l_delete(state.alpha_of(m), state.alpha_minus_s(m), state.cap_q[static_cast<Eigen::Index>(m)], beta);
  }
};

void require_data(const Problem& problem) {
  if (problem.k() <= 2) {
    fail(ErrorKind::InsufficientMeasurements, "MAP beta estimate needs K > 2, got K=" + std::to_string(problem.k()));
  }
  if (!(problem.y_sq > 0.0)) fail(ErrorKind::DegenerateData, "measurement vector is identically zero");
}

struct Engine {
  Rule rule(const SblState& state, const Problem&) const { return Rule{state.beta, state.beta}; }
  void update_noise(SblState& state, const Problem& problem) const {
    rescale_beta(state, update_beta(state, problem));
  }
};

}  // namespace

double gamma_hat(double s, double q, double beta) {
  const double denom = beta * q * q - s;
  if (denom == 0.0) return std::copysign(kInf, s * s);
  return s * s / denom;
}

double delta_l_add(double s, double q, double beta) {
  const double x = beta * q * q / s;
  return 0.5 * (x - 1.0) - 0.5 * std::log(x);
}

double delta_l_reestimate(double s, double q, double beta, double alpha_old, double alpha_new) {
  const double old_sum = alpha_old + s;
  const double new_sum = alpha_new + s;
  return 0.5 * std::log1p(s * (alpha_new - alpha_old) / (alpha_old * new_sum)) +
         0.5 * beta * q * q * (alpha_old - alpha_new) / (new_sum * old_sum);
}

double delta_l_delete(double alpha, double alpha_minus_s, double cap_q, double beta) {
  return -beta * cap_q * cap_q / (2.0 * alpha_minus_s) - 0.5 * std::log(alpha_minus_s / alpha);
}

double update_beta(const SblState& state, const Problem& problem) {
  require_data(problem);
  const double yq = y_quad(state, problem);
  if (!(yq > 0.0)) fail(ErrorKind::DegenerateData, "y^T B^-1 y is not positive");
  return (static_cast<double>(problem.k()) - 2.0) / yq;
}

Survey survey(const SblState& state, const Problem&) {
  return detail::survey_terms(state, Rule{state.beta, state.beta});
}

std::optional<ActionPlan> plan_actions(const SblState& state, const Problem& problem) {
  return survey(state, problem).best;
}

void apply_action(SblState& state, const Problem& problem, const ActionPlan& plan) {
  detail::apply_plan(state, problem, plan);
}

SblState initial_state(const Problem& problem) {
  require_data(problem);
  SblState state = empty_state(problem, FactorKind::Sigma);
  set_model(state, problem, {seed_index(problem)}, Eigen::VectorXd::Ones(1));
  rescale_beta(state, update_beta(state, problem));
  return state;
}

ReconstructionResult reconstruct(const sensing::Dictionary& dict, const Eigen::VectorXd& y,
                                 const EngineOptions& opts) {
  opts.validate();
  const Problem problem = Problem::make(dict, y);
  SblState state = initial_state(problem);
  ReconstructionResult result;
  Engine engine;
  detail::run_loops(engine, state, problem, opts, result);
  fill_moments(result, state, 1.0 / state.beta);
  result.final_noise_param = state.beta;
  return result;
}

}  // namespace bcs::mpe
