#include "bcs/bcs_ipe.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bcs/error.hpp"
#include "engine_loop.hpp"

namespace bcs::ipe {
namespace {

struct Rule {
  double c;  // K + 2 a0
  double k;
  double a0;
  double scale = 1.0;

  double gamma(const FactorTriple& f) const {
    const double g = gamma_tilde(f.s, f.q, f.g, static_cast<std::size_t>(k), a0);
    // q^2 <= s g, so a nonpositive numerator over a positive denominator is
    // rounding at an exact fit, where the evidence keeps growing as alpha -> 0.
    if (g <= 0.0 && c * f.q * f.q / f.g > f.s) return f.s * std::numeric_limits<double>::epsilon();
    return g;
  }

  double add_gain(const FactorTriple& f, double a) const { return delta_l_add(f.s, f.q, f.g, a, c); }

  double reestimate_gain(const SblState& state, std::size_t m, const FactorTriple& f, double a_old,
                         double a_new) const {
    return delta_l_reestimate(f.s, f.q, state.cap_g[static_cast<Eigen::Index>(m)], a_old, a_new, c);
  }

  double delete_gain(const SblState& state, std::size_t m, const FactorTriple&) const {
    const auto mi = static_cast<Eigen::Index>(m);
    return delta_l_delete(state.alpha_of(m), state.alpha_minus_s(m), state.cap_q[mi], state.cap_g[mi], c);
  }
};

Rule make_rule(const SblState& state, const Problem& problem) {
  const double k = static_cast<double>(problem.k());
  return Rule{k + 2.0 * state.a0, k, state.a0};
}

void require_data(const Problem& problem) {
  if (problem.k() < 2) {
    fail(ErrorKind::InsufficientMeasurements, "marginalized engine needs K >= 2, got K=" + std::to_string(problem.k()));
  }
  if (!(problem.y_sq > 0.0)) fail(ErrorKind::DegenerateData, "measurement vector is identically zero");
}

double tied_b0(const SblState& state, const Problem& problem, const IpeSettings& settings) {
  const double yq = y_quad(state, problem);
  return settings.a0 * yq / (static_cast<double>(problem.k()) - settings.b0_offset);
}

struct Engine {
  IpeSettings settings;
  Rule rule(const SblState& state, const Problem& problem) const { return make_rule(state, problem); }
  void update_noise(SblState& state, const Problem& problem) const {
    require_data(problem);
    shift_b0(state, tied_b0(state, problem, settings));
  }
};

}  // namespace

void IpeSettings::validate(std::size_t k) const {
  if (!(a0 > 0.0) || !std::isfinite(a0)) fail(ErrorKind::InvalidHyperparameter, "a0 must be positive");
  if (!(static_cast<double>(k) - b0_offset > 0.0)) {
    fail(ErrorKind::InvalidHyperparameter, "b0 offset must be smaller than K");
  }
}

double gamma_tilde(double s, double q, double g, std::size_t k, double a0) {
  const double r = q * q / g;
  const double denom = (static_cast<double>(k) + 2.0 * a0) * r - s;
  const double numer = s * s - s * r;
  if (denom == 0.0) return std::copysign(kInf, numer);
  return numer / denom;
}

double delta_l_add(double s, double q, double g, double alpha, double c) {
  const double sum = alpha + s;
  return 0.5 * std::log(alpha / sum) - 0.5 * c * std::log1p(-q * q / (g * sum));
}

double delta_l_reestimate(double s, double q, double big_g, double alpha_old, double alpha_new, double c) {
  const double old_sum = alpha_old + s;
  const double new_sum = alpha_new + s;
  return 0.5 * std::log1p(s * (alpha_new - alpha_old) / (alpha_old * new_sum)) -
         0.5 * c * std::log1p(q * q * (alpha_new - alpha_old) / (old_sum * new_sum * big_g));
}

double delta_l_delete(double alpha, double alpha_minus_s, double cap_q, double big_g, double c) {
  return -0.5 * c * std::log1p(cap_q * cap_q / (big_g * alpha_minus_s)) - 0.5 * std::log(alpha_minus_s / alpha);
}

double update_b0(const SblState& state, const Problem& problem, double a0) {
  require_data(problem);
  return a0 / static_cast<double>(problem.k()) * y_quad(state, problem);
}

double covariance_scale(const SblState& state, const Problem& problem) {
  const double k = static_cast<double>(problem.k());
  const double a_post = state.a0 + 0.5 * k;
  if (!(a_post > 1.0)) fail(ErrorKind::UndefinedVariance, "a0 + K/2 must exceed 1 for a finite covariance");
  const double b_post = state.b0 + 0.5 * y_quad(state, problem);
  return b_post / (a_post - 1.0);
}

Moments posterior_moments(const SblState& state, const Problem& problem) {
  return {state.mu, covariance_scale(state, problem) * state.lambda()};
}

Survey survey(const SblState& state, const Problem& problem) {
  return detail::survey_terms(state, make_rule(state, problem));
}

std::optional<ActionPlan> plan_actions(const SblState& state, const Problem& problem) {
  return survey(state, problem).best;
}

void apply_action(SblState& state, const Problem& problem, const ActionPlan& plan) {
  detail::apply_plan(state, problem, plan);
}

SblState initial_state(const Problem& problem, const IpeSettings& settings) {
  require_data(problem);
  settings.validate(problem.k());
  SblState state = empty_state(problem, FactorKind::Lambda);
  state.a0 = settings.a0;
  set_model(state, problem, {seed_index(problem)}, Eigen::VectorXd::Ones(1));
  if (settings.tie_initial_b0) shift_b0(state, tied_b0(state, problem, settings));
  return state;
}

ReconstructionResult reconstruct(const sensing::Dictionary& dict, const Eigen::VectorXd& y,
                                 const EngineOptions& opts, const IpeSettings& settings) {
  opts.validate();
  const Problem problem = Problem::make(dict, y);
  SblState state = initial_state(problem, settings);
  ReconstructionResult result;
  Engine engine{settings};
  detail::run_loops(engine, state, problem, opts, result);
  fill_moments(result, state, covariance_scale(state, problem));
  result.final_noise_param = state.b0;
  return result;
}

}  // namespace bcs::ipe
