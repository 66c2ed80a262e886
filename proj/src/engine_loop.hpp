#pragma once

// Planner and loop skeleton shared by the two engines. A Rule supplies the
// per-term alpha estimate and the three log-evidence gains; an Engine
// supplies the rule for the current noise parameter and the outer update.

#include <cmath>

#include "bcs/engine.hpp"
#include "bcs/error.hpp"

namespace bcs::detail {

template <typename Rule>
Survey survey_terms(const SblState& state, const Rule& rule) {
  Survey out;
  for (std::size_t m = 0; m < state.n_total(); ++m) {
    const FactorTriple f = state.factors(m);
    if (!(f.s > 0.0)) continue;
    const double a_new = alpha_from_gamma(rule.gamma(f));
    const auto j = state.position[m];

    ActionPlan plan;
    plan.n = m;
    plan.j = j;
    plan.new_alpha = a_new;
    if (j < 0) {
      if (!std::isfinite(a_new)) continue;
      plan.kind = ActionKind::Add;
      plan.delta_l = rule.add_gain(f, a_new);
      out.any_structural = true;
    } else if (std::isfinite(a_new)) {
      const double a_old = state.alpha[j];
      plan.kind = ActionKind::Reestimate;
      plan.delta_l = rule.reestimate_gain(state, m, f, a_old, a_new);
      const double delta = a_new - a_old;
      plan.update_coeff = rule.scale * delta / (delta * state.lambda_diag(j) + 1.0);
      out.max_log_alpha_change = std::max(out.max_log_alpha_change, std::abs(std::log(a_new / a_old)));
    } else {
      // The last active term is never removed.
      if (state.n_active() == 1) continue;
      plan.kind = ActionKind::Delete;
      plan.delta_l = rule.delete_gain(state, m, f);
      plan.update_coeff = rule.scale / state.lambda_diag(j);
      out.any_structural = true;
    }
    if (!std::isfinite(plan.delta_l)) continue;
    if (!out.best || plan.delta_l > out.best->delta_l) out.best = plan;
  }
  return out;
}

inline void apply_plan(SblState& state, const Problem& problem, const ActionPlan& plan) {
  switch (plan.kind) {
    case ActionKind::Add: add_term(state, problem, plan.n, plan.new_alpha); break;
    case ActionKind::Reestimate: reestimate_term(state, plan.n, plan.new_alpha); break;
    case ActionKind::Delete: delete_term(state, plan.n); break;
  }
}

template <typename Engine>
void run_loops(Engine& engine, SblState& state, const Problem& problem, const EngineOptions& opts,
               ReconstructionResult& result) {
  Eigen::VectorXd x_prev = full_mean(state);
  for (std::size_t outer = 1; outer <= opts.max_outer; ++outer) {
    result.outer_iterations = outer;
    const auto rule = engine.rule(state, problem);
    for (std::size_t it = 0; it < opts.max_inner; ++it) {
      const Survey sv = survey_terms(state, rule);
      if (!sv.any_structural && sv.max_log_alpha_change < opts.inner_log_alpha_tolerance) break;
      if (!sv.best || sv.best->delta_l < opts.stall_delta_l) break;
      try {
        apply_plan(state, problem, *sv.best);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NumericalBreakdown) throw;
        ++result.breakdowns;
        break;
      }
      ++result.inner_iterations_total;
      if (opts.record_actions) {
        result.actions.push_back({sv.best->kind, sv.best->n, sv.best->new_alpha, sv.best->delta_l, outer});
      }
    }
    engine.update_noise(state, problem);
    refresh_caches(state, problem);

    const Eigen::VectorXd x = full_mean(state);
    const double diff = (x - x_prev).squaredNorm();
    const double base = x_prev.squaredNorm();
    const double change = base > 0.0 ? diff / base : (diff == 0.0 ? 0.0 : kInf);
    x_prev = x;
    if (change < opts.outer_tolerance) {
      result.converged = true;
      break;
    }
  }
}

}  // namespace bcs::detail
