#include "bcs/sbl_core.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bcs/error.hpp"

namespace bcs {
namespace {

void require_alphas(const Eigen::VectorXd& alpha, std::size_t count) {
  if (static_cast<std::size_t>(alpha.size()) != count) {
    fail(ErrorKind::Shape, "alpha vector length does not match the active set");
  }
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j])) {
      fail(ErrorKind::InvalidHyperparameter,
           "active alpha must be finite and positive, got " + std::to_string(alpha[j]));
    }
  }
}

Eigen::MatrixXd active_columns(const sensing::Dictionary& dict, const std::vector<std::size_t>& active) {
  Eigen::MatrixXd cols(dict.theta.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (active[j] >= dict.n()) fail(ErrorKind::Shape, "active index out of range");
    cols.col(static_cast<Eigen::Index>(j)) = dict.theta.col(static_cast<Eigen::Index>(active[j]));
  }
  return cols;
}

}  // namespace

Problem Problem::make(const sensing::Dictionary& dict, Eigen::VectorXd y) {
  if (static_cast<std::size_t>(y.size()) != dict.k()) {
    fail(ErrorKind::Shape, "measurement vector has " + std::to_string(y.size()) +
                               " entries but the dictionary has K=" + std::to_string(dict.k()));
  }
  if (!y.allFinite()) fail(ErrorKind::Shape, "measurement vector contains non-finite entries");
  Problem p;
  p.dict = &dict;
  p.theta_t_y = dict.theta.transpose() * y;
  p.y_sq = y.squaredNorm();
  p.y = std::move(y);
  return p;
}

double SblState::alpha_of(std::size_t m) const {
  const auto j = position[m];
  return j < 0 ? kInf : alpha[j];
}

Eigen::MatrixXd SblState::lambda() const {
  return factor_kind == FactorKind::Sigma ? Eigen::MatrixXd(beta * post_factor) : post_factor;
}

double SblState::lambda_diag(Eigen::Index j) const {
  return factor_kind == FactorKind::Sigma ? beta * post_factor(j, j) : post_factor(j, j);
}

double SblState::alpha_minus_s(std::size_t m) const {
  const auto j = position[m];
  const double a = alpha[j];
  const double diff = a - cap_s[static_cast<Eigen::Index>(m)];
  if (std::abs(diff) >= kGuardRelative * a) return diff;
  // alpha_j - S_j = alpha_j^2 Lambda_jj for an active term.
  return a * a * lambda_diag(j);
}

FactorTriple SblState::factors(std::size_t m) const {
  const auto mi = static_cast<Eigen::Index>(m);
  const double big_s = cap_s[mi];
  const double big_q = cap_q[mi];
  const double big_g = cap_g.size() > 0 ? cap_g[mi] : std::numeric_limits<double>::quiet_NaN();
  const auto j = position[m];
  if (j < 0) return {big_s, big_q, big_g};

  const double a = alpha[j];
  const double diff = a - big_s;
  if (std::abs(diff) >= kGuardRelative * a) {
    return {a * big_s / diff, a * big_q / diff, big_g + big_q * big_q / diff};
  }
  const double lam = lambda_diag(j);
  if (!(lam > 0.0) || !std::isfinite(lam)) {
    fail(ErrorKind::DegenerateFactor, "alpha equals S for basis term " + std::to_string(m) +
                                          " and the posterior diagonal is unusable");
  }
  const double mj = mu[j];
  return {1.0 / lam - a, mj / lam, big_g + mj * mj / lam};
}

SblState empty_state(const Problem& problem, FactorKind kind) {
  SblState st;
  st.factor_kind = kind;
  st.position.assign(problem.n(), -1);
  st.alpha.resize(0);
  st.mu.resize(0);
  st.post_factor.resize(0, 0);
  st.gram_active.resize(static_cast<Eigen::Index>(problem.n()), 0);
  st.cap_s = problem.dict->col_sq_norms;
  st.cap_q = problem.theta_t_y;
  if (kind == FactorKind::Lambda) {
    st.cap_g = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(problem.n()), problem.y_sq + 2.0 * st.b0);
  }
  return st;
}

void set_model(SblState& state, const Problem& problem, std::vector<std::size_t> active,
               const Eigen::VectorXd& alpha) {
  require_alphas(alpha, active.size());
  const Eigen::MatrixXd cols = active_columns(*problem.dict, active);

  state.position.assign(problem.n(), -1);
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (state.position[active[j]] >= 0) fail(ErrorKind::Shape, "duplicate index in active set");
    state.position[active[j]] = static_cast<std::ptrdiff_t>(j);
  }
  state.active = std::move(active);
  state.alpha = alpha;
  state.gram_active = problem.theta().transpose() * cols;

  const auto na = static_cast<Eigen::Index>(state.active.size());
  Eigen::MatrixXd c = cols.transpose() * cols;
  c.diagonal() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) fail(ErrorKind::IllConditioned, "C is not positive definite");
  const Eigen::MatrixXd lam = llt.solve(Eigen::MatrixXd::Identity(na, na));
  Eigen::VectorXd ty(na);
  for (Eigen::Index j = 0; j < na; ++j) ty[j] = problem.theta_t_y[static_cast<Eigen::Index>(state.active[j])];
  state.mu = lam * ty;
  state.post_factor = state.factor_kind == FactorKind::Sigma ? Eigen::MatrixXd(lam / state.beta) : lam;
  refresh_caches(state, problem);
}

std::size_t seed_index(const Problem& problem) {
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t n = 0; n < problem.n(); ++n) {
    const double norm = problem.dict->col_sq_norms[static_cast<Eigen::Index>(n)];
    if (!(norm > 0.0)) continue;
    const double t = problem.theta_t_y[static_cast<Eigen::Index>(n)];
    const double score = t * t / norm;
    if (score > best_score) {
      best_score = score;
      best = n;
    }
  }
  return best;
}

double y_quad(const SblState& state, const Problem& problem) {
  Eigen::VectorXd r = problem.y;
  double prior = 0.0;
  for (std::size_t j = 0; j < state.active.size(); ++j) {
    const auto ji = static_cast<Eigen::Index>(j);
    r -= state.mu[ji] * problem.theta().col(static_cast<Eigen::Index>(state.active[j]));
    prior += state.alpha[ji] * state.mu[ji] * state.mu[ji];
  }
  return r.squaredNorm() + prior;
}

void refresh_caches(SblState& state, const Problem& problem) {
  const Eigen::MatrixXd lam = state.lambda();
  const Eigen::MatrixXd m = state.gram_active * lam;
  state.cap_s = problem.dict->col_sq_norms - m.cwiseProduct(state.gram_active).rowwise().sum();
  state.cap_q = problem.theta_t_y - state.gram_active * state.mu;
  if (state.factor_kind == FactorKind::Lambda) {
    state.cap_g = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(problem.n()),
                                            y_quad(state, problem) + 2.0 * state.b0);
  } else {
    state.cap_g.resize(0);
  }
}

void rescale_beta(SblState& state, double new_beta) {
  if (!(new_beta > 0.0) || !std::isfinite(new_beta)) {
    fail(ErrorKind::InvalidHyperparameter, "beta must be finite and positive");
  }
  if (state.factor_kind == FactorKind::Sigma) state.post_factor *= state.beta / new_beta;
  state.beta = new_beta;
}

void shift_b0(SblState& state, double new_b0) {
  if (!(new_b0 >= 0.0) || !std::isfinite(new_b0)) {
    fail(ErrorKind::InvalidHyperparameter, "b0 must be finite and nonnegative");
  }
  if (state.cap_g.size() > 0) state.cap_g.array() += 2.0 * (new_b0 - state.b0);
  state.b0 = new_b0;
}

Eigen::VectorXd full_mean(const SblState& state) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state.n_total()));
  for (std::size_t j = 0; j < state.active.size(); ++j)
    w[static_cast<Eigen::Index>(state.active[j])] = state.mu[static_cast<Eigen::Index>(j)];
  return w;
}

namespace dense {

Eigen::MatrixXd dense_B(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                        const sensing::Dictionary& dict) {
  require_alphas(alpha_active, active.size());
  const auto k = static_cast<Eigen::Index>(dict.k());
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(k, k);
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (active[j] >= dict.n()) fail(ErrorKind::Shape, "active index out of range");
    const auto col = dict.theta.col(static_cast<Eigen::Index>(active[j]));
    b += (1.0 / alpha_active[static_cast<Eigen::Index>(j)]) * col * col.transpose();
  }
  return b;
}

Posterior dense_posterior(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                          double beta, const sensing::Dictionary& dict, const Eigen::VectorXd& y) {
  require_alphas(alpha_active, active.size());
  if (!(beta > 0.0)) fail(ErrorKind::InvalidHyperparameter, "beta must be positive");
  const Eigen::MatrixXd cols = active_columns(dict, active);
  Eigen::MatrixXd c = cols.transpose() * cols;
  c.diagonal() += alpha_active;
  const auto na = c.rows();
  if (na > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e14) {
      fail(ErrorKind::IllConditioned, "C is singular or its condition number exceeds 1e14");
    }
  }
  const Eigen::MatrixXd cinv = c.llt().solve(Eigen::MatrixXd::Identity(na, na));
  return {cinv * (cols.transpose() * y), cinv / beta};
}

FactorTriple dense_factors(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                           const sensing::Dictionary& dict, const Eigen::VectorXd& y, double b0,
                           std::size_t n) {
  require_alphas(alpha_active, active.size());
  std::vector<std::size_t> others;
  std::vector<double> other_alpha;
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (active[j] == n) continue;
    others.push_back(active[j]);
    other_alpha.push_back(alpha_active[static_cast<Eigen::Index>(j)]);
  }
  const Eigen::VectorXd oa =
      Eigen::Map<const Eigen::VectorXd>(other_alpha.data(), static_cast<Eigen::Index>(other_alpha.size()));
  const Eigen::MatrixXd b = dense_B(oa, others, dict);
  const auto k = b.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) fail(ErrorKind::IllConditioned, "B_-n is not positive definite");
  const Eigen::MatrixXd binv = llt.solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::VectorXd col = dict.theta.col(static_cast<Eigen::Index>(n));
  return {col.dot(binv * col), col.dot(binv * y), y.dot(binv * y) + 2.0 * b0};
}

namespace {

struct Factored {
  double logdet;
  double quad;
};

Factored factor_b(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                  const sensing::Dictionary& dict, const Eigen::VectorXd& y) {
  if (static_cast<std::size_t>(y.size()) != dict.k()) fail(ErrorKind::Shape, "y length does not match K");
  const Eigen::MatrixXd b = dense_B(alpha_active, active, dict);
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) fail(ErrorKind::IllConditioned, "B is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  return {2.0 * l.diagonal().array().log().sum(), y.dot(llt.solve(y))};
}

}  // namespace

double log_evidence_mpe(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                        double beta, const sensing::Dictionary& dict, const Eigen::VectorXd& y) {
  if (!(beta > 0.0)) fail(ErrorKind::InvalidHyperparameter, "beta must be positive");
  const auto f = factor_b(alpha_active, active, dict, y);
  const double k = static_cast<double>(dict.k());
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) - k * std::log(beta) + f.logdet + beta * f.quad);
}

double log_evidence_ipe(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
                        double a0, double b0, const sensing::Dictionary& dict,
                        const Eigen::VectorXd& y) {
  if (!(a0 > 0.0) || !(b0 > 0.0)) {
    fail(ErrorKind::InvalidHyperparameter, "Student-t evidence needs a0 > 0 and b0 > 0");
  }
  const auto f = factor_b(alpha_active, active, dict, y);
  const double k = static_cast<double>(dict.k());
  return std::lgamma(a0 + 0.5 * k) - std::lgamma(a0) -
         0.5 * k * std::log(2.0 * std::numbers::pi * b0) - 0.5 * f.logdet -
         (a0 + 0.5 * k) * std::log1p(f.quad / (2.0 * b0));
}

double y_quad(const Eigen::VectorXd& alpha_active, const std::vector<std::size_t>& active,
              const sensing::Dictionary& dict, const Eigen::VectorXd& y) {
  return factor_b(alpha_active, active, dict, y).quad;
}

}  // namespace dense
}  // namespace bcs

namespace bcs {
namespace {

double factor_scale(const SblState& state) {
  return state.factor_kind == FactorKind::Sigma ? state.beta : 1.0;
}

void check_factor(const Eigen::MatrixXd& p, const char* what) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (!(p(i, i) > 0.0) || !std::isfinite(p(i, i))) {
      fail(ErrorKind::NumericalBreakdown, std::string(what) + ": posterior factor lost its positive diagonal");
    }
  }
  if (static_cast<std::size_t>(p.rows()) <= kFullPdCheckMax && p.rows() > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(p);
    if (llt.info() != Eigen::Success) {
      fail(ErrorKind::NumericalBreakdown, std::string(what) + ": posterior factor is not positive definite");
    }
  }
}

template <typename Vec>
void erase_at(Vec& v, Eigen::Index j) {
  const Eigen::Index tail = v.size() - j - 1;
  if (tail > 0) v.segment(j, tail) = v.segment(j + 1, tail).eval();
  v.conservativeResize(v.size() - 1);
}

void erase_column(Eigen::MatrixXd& m, Eigen::Index j) {
  const Eigen::Index tail = m.cols() - j - 1;
  if (tail > 0) m.middleCols(j, tail) = m.middleCols(j + 1, tail).eval();
  m.conservativeResize(Eigen::NoChange, m.cols() - 1);
}

Eigen::Index require_active(const SblState& state, std::size_t n) {
  if (n >= state.n_total() || state.position[n] < 0) {
    fail(ErrorKind::Shape, "basis term " + std::to_string(n) + " is not active");
  }
  return state.position[n];
}

// Shared by re-estimation and deletion. With l = Lambda e_j and coefficient
// kappa in C^-1 units: Lambda -= kappa l l^T, mu -= kappa mu_j l,
// S += kappa (G_a l)^2, Q += kappa mu_j (G_a l), G += kappa mu_j^2.
Eigen::MatrixXd downdated_factor(const SblState& state, Eigen::Index j, double kappa) {
  const Eigen::VectorXd p = state.post_factor.col(j);
  return state.post_factor - (kappa * factor_scale(state)) * (p * p.transpose());
}

void downdate_caches(SblState& state, Eigen::Index j, double kappa) {
  const Eigen::VectorXd l = factor_scale(state) * state.post_factor.col(j);
  const double mj = state.mu[j];
  const Eigen::VectorXd z = state.gram_active * l;
  state.cap_s.array() += kappa * z.array().square();
  state.cap_q += (kappa * mj) * z;
  if (state.cap_g.size() > 0) state.cap_g.array() += kappa * mj * mj;
  state.mu -= (kappa * mj) * l;
}

}  // namespace

void add_term(SblState& state, const Problem& problem, std::size_t n, double alpha) {
  if (n >= state.n_total() || state.position[n] >= 0) {
    fail(ErrorKind::Shape, "basis term " + std::to_string(n) + " is already active");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    fail(ErrorKind::InvalidHyperparameter, "added alpha must be finite and positive");
  }
  const auto ni = static_cast<Eigen::Index>(n);
  const double denom = alpha + state.cap_s[ni];
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    fail(ErrorKind::NumericalBreakdown, "alpha + S is not positive for term " + std::to_string(n));
  }
  const double scale = factor_scale(state);
  const double lnn = 1.0 / denom;
  const double qn = state.cap_q[ni];
  const double mun = lnn * qn;
  const auto na = static_cast<Eigen::Index>(state.n_active());

  const Eigen::VectorXd v = state.gram_active.row(ni).transpose();
  const Eigen::VectorXd w = scale * (state.post_factor * v);

  Eigen::MatrixXd next(na + 1, na + 1);
  next.topLeftCorner(na, na) = state.post_factor + (lnn / scale) * (w * w.transpose());
  next.topRightCorner(na, 1) = -(lnn / scale) * w;
  next.bottomLeftCorner(1, na) = next.topRightCorner(na, 1).transpose();
  next(na, na) = lnn / scale;
  check_factor(next, "add");

  const Eigen::VectorXd gcol = problem.theta().transpose() * problem.theta().col(ni);
  const Eigen::VectorXd z = gcol - state.gram_active * w;
  state.cap_s.array() -= lnn * z.array().square();
  state.cap_q -= mun * z;
  if (state.cap_g.size() > 0) state.cap_g.array() -= lnn * qn * qn;

  state.mu -= mun * w;
  state.mu.conservativeResize(na + 1);
  state.mu[na] = mun;
  state.alpha.conservativeResize(na + 1);
  state.alpha[na] = alpha;
  state.post_factor = std::move(next);
  state.gram_active.conservativeResize(Eigen::NoChange, na + 1);
  state.gram_active.col(na) = gcol;
  state.active.push_back(n);
  state.position[n] = na;
}

void reestimate_term(SblState& state, std::size_t n, double new_alpha) {
  const Eigen::Index j = require_active(state, n);
  if (!(new_alpha > 0.0) || !std::isfinite(new_alpha)) {
    fail(ErrorKind::InvalidHyperparameter, "re-estimated alpha must be finite and positive");
  }
  const double delta = new_alpha - state.alpha[j];
  const double ljj = state.lambda_diag(j);
  const double denom = delta * ljj + 1.0;
  if (!(denom > 0.0)) {
    fail(ErrorKind::NumericalBreakdown, "re-estimation of term " + std::to_string(n) +
                                            " would make the posterior factor indefinite");
  }
  const double kappa = delta / denom;
  Eigen::MatrixXd next = downdated_factor(state, j, kappa);
  check_factor(next, "re-estimate");
  downdate_caches(state, j, kappa);
  state.post_factor = std::move(next);
  state.alpha[j] = new_alpha;
}

void delete_term(SblState& state, std::size_t n) {
  const Eigen::Index j = require_active(state, n);
  const double ljj = state.lambda_diag(j);
  if (!(ljj > 0.0)) fail(ErrorKind::NumericalBreakdown, "posterior diagonal is not positive");
  const Eigen::MatrixXd next = downdated_factor(state, j, 1.0 / ljj);
  const Eigen::Index na = next.rows();
  Eigen::MatrixXd reduced(na - 1, na - 1);
  for (Eigen::Index r = 0, rr = 0; r < na; ++r) {
    if (r == j) continue;
    for (Eigen::Index c = 0, cc = 0; c < na; ++c) {
      if (c == j) continue;
      reduced(rr, cc++) = next(r, c);
    }
    ++rr;
  }
  // A Schur complement of a positive definite matrix; the diagonal test
  // catches accumulated drift.
  for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
    if (!(reduced(i, i) > 0.0)) {
      fail(ErrorKind::NumericalBreakdown, "delete: posterior factor lost its positive diagonal");
    }
  }

  downdate_caches(state, j, 1.0 / ljj);
  state.post_factor = std::move(reduced);
  erase_at(state.mu, j);
  erase_at(state.alpha, j);
  erase_column(state.gram_active, j);
  state.active.erase(state.active.begin() + j);
  state.position[n] = -1;
  for (std::size_t k = static_cast<std::size_t>(j); k < state.active.size(); ++k)
    state.position[state.active[k]] = static_cast<std::ptrdiff_t>(k);
}

}  // namespace bcs
