#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "support.hpp"

#include "bcs/sbl_core.hpp"

using namespace bcs;
using testing::kind_of;
using testing::rel;

namespace {

struct Instance {
  sensing::Dictionary dict;
  Eigen::VectorXd y;
  std::vector<std::size_t> active;
  Eigen::VectorXd alpha;
};

Instance random_instance(std::size_t k, std::size_t n, std::size_t n_active, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Instance in{testing::random_dict(k, n, seed), Eigen::VectorXd(), testing::pick(n, n_active, rng), Eigen::VectorXd()};
  in.y = testing::randn(k, rng);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  in.alpha.resize(static_cast<Eigen::Index>(n_active));
  for (Eigen::Index j = 0; j < in.alpha.size(); ++j) in.alpha[j] = std::exp(u(rng));
  return in;
}

Eigen::MatrixXd theta_active(const Instance& in) {
  Eigen::MatrixXd t(in.dict.theta.rows(), static_cast<Eigen::Index>(in.active.size()));
  for (std::size_t j = 0; j < in.active.size(); ++j) t.col(static_cast<Eigen::Index>(j)) = in.dict.theta.col(in.active[j]);
  return t;
}

// Gaussian log density with explicitly assembled covariance, via LU.
double brute_gaussian(const Eigen::MatrixXd& cov, const Eigen::VectorXd& y) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  const double k = static_cast<double>(y.size());
  return -0.5 * k * std::log(2 * std::numbers::pi) - 0.5 * std::log(lu.determinant()) -
         0.5 * y.dot(lu.solve(y));
}

void expect_matches_dense(const SblState& s, const Problem& p, double tol) {
  SblState ref = s;
  set_model(ref, p, s.active, s.alpha);
  CHECK(rel(s.mu, ref.mu) < tol);
  CHECK(rel(s.post_factor, ref.post_factor) < tol);
  CHECK(rel(s.cap_s, ref.cap_s) < tol);
  CHECK(rel(s.cap_q, ref.cap_q) < tol);
  if (s.factor_kind == FactorKind::Lambda) CHECK(rel(s.cap_g, ref.cap_g) < tol);
  CHECK(rel(s.gram_active, ref.gram_active) < tol);
}

}  // namespace

TEST_CASE("dense_B examples") {
  const auto d = testing::random_dict(8, 16, 1);
  CHECK(dense::dense_B(Eigen::VectorXd(), {}, d) == Eigen::MatrixXd::Identity(8, 8));

  const auto id = sensing::build_dictionary(sensing::projection_from_matrix(Eigen::MatrixXd::Identity(4, 4), "id"));
  // Column 0 of the 4-point Haar dictionary is constant 1/2.
  Eigen::VectorXd one(1);
  one << 1.0;
  const Eigen::MatrixXd b = dense::dense_B(one, {0}, id);
  CHECK((b - (Eigen::MatrixXd::Identity(4, 4) + Eigen::MatrixXd::Constant(4, 4, 0.25))).cwiseAbs().maxCoeff() < 1e-15);

  const auto in = random_instance(8, 16, 3, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense::dense_B(in.alpha, in.active, in.dict));
  CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-12);

  Eigen::VectorXd neg = in.alpha;
  neg[0] = -1.0;
  CHECK(kind_of([&] { dense::dense_B(neg, in.active, in.dict); }) == ErrorKind::InvalidHyperparameter);
}

TEST_CASE("dense_posterior examples") {
  const auto in = random_instance(16, 32, 4, 3);
  const auto zero = dense::dense_posterior(in.alpha, in.active, 2.0, in.dict, Eigen::VectorXd::Zero(16));
  CHECK(zero.mu.isZero(0.0));

  const auto id = sensing::build_dictionary(sensing::projection_from_matrix(Eigen::MatrixXd::Identity(8, 8), "id"));
  std::mt19937_64 rng(4);
  const Eigen::VectorXd y = testing::randn(8, rng);
  Eigen::VectorXd tiny(1);
  tiny << 1e-12;
  const auto ls = dense::dense_posterior(tiny, {5}, 1.0, id, y);
  CHECK(std::abs(ls.mu[0] - id.theta.col(5).dot(y)) < 1e-10);

  // Woodbury path with a pseudo-inverse of B.
  const double beta = 0.7;
  const auto post = dense::dense_posterior(in.alpha, in.active, beta, in.dict, in.y);
  const Eigen::MatrixXd ta = theta_active(in);
  const Eigen::MatrixXd ainv = in.alpha.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(16, 16) + ta * ainv * ta.transpose();
  const Eigen::MatrixXd binv = b.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::VectorXd mu = ainv * ta.transpose() * binv * in.y;
  const Eigen::MatrixXd cov = (ainv - ainv * ta.transpose() * binv * ta * ainv) / beta;
  CHECK(rel(post.mu, mu) < 1e-10);
  CHECK(rel(post.cov, cov) < 1e-10);
}

TEST_CASE("dense_factors examples") {
  const auto in = random_instance(12, 32, 0, 5);
  const auto f = dense::dense_factors(Eigen::VectorXd(), {}, in.dict, in.y, 0.3, 7);
  CHECK(rel(f.s, in.dict.theta.col(7).squaredNorm()) < 1e-12);
  CHECK(rel(f.q, in.dict.theta.col(7).dot(in.y)) < 1e-12);
  CHECK(rel(f.g, in.y.squaredNorm() + 0.6) < 1e-12);

  const auto full = random_instance(12, 32, 4, 6);
  const auto g0 = dense::dense_factors(full.alpha, full.active, full.dict, full.y, 0.0, 1);
  const auto g1 = dense::dense_factors(full.alpha, full.active, full.dict, full.y, 2.0, 1);
  CHECK(g1.g - g0.g == doctest::Approx(4.0));
}

TEST_CASE("log evidence against brute-force densities") {
  const auto id2 = sensing::build_dictionary(sensing::projection_from_matrix(Eigen::MatrixXd::Identity(2, 2), "id"));
  CHECK(dense::log_evidence_mpe(Eigen::VectorXd(), {}, 1.0, id2, Eigen::VectorXd::Zero(2)) ==
        doctest::Approx(-std::log(2 * std::numbers::pi)));

  const auto in = random_instance(10, 32, 4, 7);
  const double beta = 1.9;
  const double k = 10.0;
  CHECK(dense::log_evidence_mpe(Eigen::VectorXd(), {}, beta, in.dict, in.y) ==
        doctest::Approx(-0.5 * k * std::log(2 * std::numbers::pi) + 0.5 * k * std::log(beta) -
                        0.5 * beta * in.y.squaredNorm()).epsilon(1e-12));

  const Eigen::MatrixXd b = dense::dense_B(in.alpha, in.active, in.dict);
  const double brute = brute_gaussian(b / beta, in.y);
  CHECK(std::abs(dense::log_evidence_mpe(in.alpha, in.active, beta, in.dict, in.y) - brute) < 1e-10);

  // Student-t density written out directly.
  const double a0 = 1.3, b0 = 0.4;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
  const double quad = in.y.dot(lu.solve(in.y));
  const double t = std::lgamma(a0 + k / 2) - std::lgamma(a0) - 0.5 * k * std::log(2 * std::numbers::pi * b0) -
                   0.5 * std::log(lu.determinant()) - (a0 + k / 2) * std::log1p(quad / (2 * b0));
  CHECK(std::abs(dense::log_evidence_ipe(in.alpha, in.active, a0, b0, in.dict, in.y) - t) < 1e-10);

  CHECK(kind_of([&] { dense::log_evidence_ipe(in.alpha, in.active, 1.0, 0.0, in.dict, in.y); }) ==
        ErrorKind::InvalidHyperparameter);
}

TEST_CASE("one-dimensional Student-t with one degree of freedom is Cauchy") {
  const auto d = testing::random_dict(1, 2, 8);
  for (double y1 : {0.0, 0.4, -3.0}) {
    Eigen::VectorXd y(1);
    y << y1;
    const double cauchy = -std::log(std::numbers::pi) - std::log1p(y1 * y1);
    CHECK(dense::log_evidence_ipe(Eigen::VectorXd(), {}, 0.5, 0.5, d, y) == doctest::Approx(cauchy).epsilon(1e-12));
  }
}

TEST_CASE("Student-t evidence tends to the Gaussian one") {
  const auto in = random_instance(12, 32, 3, 9);
  const double beta = 0.8, a0 = 1e8;
  const double gauss = dense::log_evidence_mpe(in.alpha, in.active, beta, in.dict, in.y);
  const double t = dense::log_evidence_ipe(in.alpha, in.active, a0, a0 / beta, in.dict, in.y);
  CHECK(std::abs(gauss - t) < 1e-3);
}

TEST_CASE("y_quad identities") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto in = random_instance(20, 32, 5, seed);
    const auto p = Problem::make(in.dict, in.y);
    SblState s = empty_state(p, FactorKind::Lambda);
    CHECK(y_quad(s, p) == doctest::Approx(in.y.squaredNorm()).epsilon(1e-14));
    set_model(s, p, in.active, in.alpha);
    const double dense_yq = dense::y_quad(in.alpha, in.active, in.dict, in.y);
    CHECK(rel(y_quad(s, p), dense_yq) < 1e-9);
    const Eigen::VectorXd theta_mu = theta_active(in) * s.mu;
    CHECK(rel(y_quad(s, p) + in.y.dot(theta_mu), in.y.squaredNorm()) < 1e-9);
  }
  const auto in = random_instance(20, 32, 3, 30);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(20);
  const auto p = Problem::make(in.dict, zero);
  SblState s = empty_state(p, FactorKind::Sigma);
  set_model(s, p, in.active, in.alpha);
  CHECK(y_quad(s, p) == 0.0);
}

TEST_CASE("empty-model caches") {
  const auto in = random_instance(12, 32, 0, 31);
  const auto p = Problem::make(in.dict, in.y);
  SblState s = empty_state(p, FactorKind::Lambda);
  for (std::size_t m = 0; m < 32; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    CHECK(rel(s.cap_s[mi], in.dict.theta.col(mi).squaredNorm()) < 1e-14);
    CHECK(rel(s.cap_q[mi], in.dict.theta.col(mi).dot(in.y)) < 1e-14);
    CHECK(rel(s.cap_g[mi], in.y.squaredNorm()) < 1e-14);
  }
}

TEST_CASE("cached factors match dense_factors") {
  for (std::uint64_t seed = 40; seed < 60; ++seed) {
    const auto in = random_instance(12, 32, 1 + seed % 6, seed);
    const auto p = Problem::make(in.dict, in.y);
    for (auto kind : {FactorKind::Sigma, FactorKind::Lambda}) {
      SblState s = empty_state(p, kind);
      s.beta = 1.7;
      s.b0 = 0.25;
      set_model(s, p, in.active, in.alpha);
      for (std::size_t m = 0; m < 32; ++m) {
        const auto f = s.factors(m);
        const auto d = dense::dense_factors(in.alpha, in.active, in.dict, in.y, 0.25, m);
        CHECK(rel(f.s, d.s) < 1e-9);
        CHECK(rel(f.q, d.q) < 1e-9);
        if (kind == FactorKind::Lambda) CHECK(rel(f.g, d.g) < 1e-9);
        if (!s.is_active(m)) {
          const auto mi = static_cast<Eigen::Index>(m);
          CHECK(f.s == s.cap_s[mi]);
          CHECK(f.q == s.cap_q[mi]);
        }
      }
      const auto mu_dense = dense::dense_posterior(in.alpha, in.active, s.beta, in.dict, in.y);
      CHECK(rel(s.mu, mu_dense.mu) < 1e-9);
      if (kind == FactorKind::Sigma) CHECK(rel(s.post_factor, mu_dense.cov) < 1e-9);
      else CHECK(rel(s.post_factor, Eigen::MatrixXd(mu_dense.cov * s.beta)) < 1e-9);
    }
  }
}

TEST_CASE("posterior forms take over when alpha - S cancels") {
  auto in = random_instance(12, 32, 3, 61);
  in.alpha[1] = 1e-6;
  const auto p = Problem::make(in.dict, in.y);
  SblState s = empty_state(p, FactorKind::Lambda);
  s.b0 = 0.1;
  set_model(s, p, in.active, in.alpha);
  const std::size_t m = in.active[1];
  REQUIRE(std::abs(s.alpha_of(m) - s.cap_s[static_cast<Eigen::Index>(m)]) <
          SblState::kGuardRelative * s.alpha_of(m));
  const auto f = s.factors(m);
  const auto d = dense::dense_factors(in.alpha, in.active, in.dict, in.y, 0.1, m);
  CHECK(rel(f.s, d.s) < 1e-8);
  CHECK(rel(f.q, d.q) < 1e-8);
  CHECK(rel(f.g, d.g) < 1e-8);
  CHECK(s.alpha_minus_s(m) > 0.0);
}

TEST_CASE("refresh_caches reproduces set_model") {
  const auto in = random_instance(12, 32, 5, 62);
  const auto p = Problem::make(in.dict, in.y);
  SblState s = empty_state(p, FactorKind::Lambda);
  s.b0 = 0.5;
  set_model(s, p, in.active, in.alpha);
  SblState r = s;
  r.cap_s.setZero();
  r.cap_q.setZero();
  r.cap_g.setZero();
  refresh_caches(r, p);
  CHECK(rel(r.cap_s, s.cap_s) < 1e-12);
  CHECK(rel(r.cap_q, s.cap_q) < 1e-12);
  CHECK(rel(r.cap_g, s.cap_g) < 1e-12);
}

TEST_CASE("beta and b0 changes") {
  const auto in = random_instance(12, 32, 4, 63);
  const auto p = Problem::make(in.dict, in.y);
  SblState s = empty_state(p, FactorKind::Sigma);
  s.beta = 2.0;
  set_model(s, p, in.active, in.alpha);
  rescale_beta(s, 5.0);
  SblState ref = s;
  set_model(ref, p, in.active, in.alpha);
  CHECK(rel(s.post_factor, ref.post_factor) < 1e-14);
  CHECK(rel(s.cap_s, ref.cap_s) < 1e-14);

  SblState l = empty_state(p, FactorKind::Lambda);
  set_model(l, p, in.active, in.alpha);
  shift_b0(l, 1.25);
  SblState lref = l;
  set_model(lref, p, in.active, in.alpha);
  CHECK(l.b0 == 1.25);
  CHECK(rel(l.cap_g, lref.cap_g) < 1e-14);
}

TEST_CASE("first add and sole delete") {
  const auto in = random_instance(12, 32, 0, 64);
  const auto p = Problem::make(in.dict, in.y);
  SblState s = empty_state(p, FactorKind::Sigma);
  s.beta = 3.0;
  const double a = 0.8;
  add_term(s, p, 4, a);
  const double norm2 = in.dict.theta.col(4).squaredNorm();
  CHECK(rel(s.post_factor(0, 0), 1.0 / (3.0 * (a + norm2))) < 1e-14);
  CHECK(rel(s.mu[0], 3.0 * s.post_factor(0, 0) * in.dict.theta.col(4).dot(in.y)) < 1e-14);
  delete_term(s, 4);
  CHECK(s.n_active() == 0);
  const SblState e = empty_state(p, FactorKind::Sigma);
  CHECK(rel(s.cap_s, e.cap_s) < 1e-12);
  CHECK(rel(s.cap_q, e.cap_q) < 1e-12);

  SblState l = empty_state(p, FactorKind::Lambda);
  l.b0 = 0.5;
  set_model(l, p, {}, Eigen::VectorXd());
  add_term(l, p, 9, a);
  CHECK(rel(l.post_factor(0, 0), 1.0 / (a + in.dict.theta.col(9).squaredNorm())) < 1e-14);
  delete_term(l, 9);
  CHECK((l.cap_g.array() - (in.y.squaredNorm() + 1.0)).abs().maxCoeff() < 1e-10);
}

TEST_CASE("random action sequences track dense recomputation") {
  std::size_t sequences = 0, breakdowns = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t k = 8 + seed % 17, n = 32;
    const auto in = random_instance(k, n, 0, 1000 + seed);
    const auto p = Problem::make(in.dict, in.y);
    const FactorKind kind = seed % 2 ? FactorKind::Sigma : FactorKind::Lambda;
    SblState s = empty_state(p, kind);
    s.beta = 0.5 + static_cast<double>(seed % 5);
    s.b0 = 0.1 * static_cast<double>(seed % 3);
    set_model(s, p, {}, Eigen::VectorXd());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int step = 0; step < 10; ++step) {
      const std::size_t choice = rng() % 3;
      try {
        if (s.n_active() == 0 || (choice == 0 && s.n_active() < std::min<std::size_t>(k - 1, n))) {
          std::size_t m;
          do m = rng() % n;
          while (s.is_active(m));
          add_term(s, p, m, std::exp(u(rng)));
        } else if (choice == 1) {
          reestimate_term(s, s.active[rng() % s.n_active()], std::exp(u(rng)));
        } else {
          delete_term(s, s.active[rng() % s.n_active()]);
        }
      } catch (const Error& e) {
        REQUIRE(e.kind() == ErrorKind::NumericalBreakdown);
        ++breakdowns;
      }
      expect_matches_dense(s, p, 1e-8);
      if (s.n_active() > 0) {
        Eigen::LLT<Eigen::MatrixXd> llt(s.post_factor);
        CHECK(llt.info() == Eigen::Success);
        CHECK((s.post_factor - s.post_factor.transpose()).cwiseAbs().maxCoeff() <=
              1e-10 * s.post_factor.cwiseAbs().maxCoeff());
      }
    }
    ++sequences;
  }
  CHECK(sequences == 1000);
  CHECK(breakdowns == 0);
}

TEST_CASE("failed updates leave the state untouched") {
  const auto in = random_instance(12, 32, 3, 70);
  const auto p = Problem::make(in.dict, in.y);
  SblState s = empty_state(p, FactorKind::Lambda);
  set_model(s, p, in.active, in.alpha);
  std::size_t m = 0;
  while (s.is_active(m)) ++m;
  s.cap_s[static_cast<Eigen::Index>(m)] = -5.0;
  const SblState before = s;
  CHECK(kind_of([&] { add_term(s, p, m, 1.0); }) == ErrorKind::NumericalBreakdown);
  CHECK(s.active == before.active);
  CHECK(s.mu == before.mu);
  CHECK(s.post_factor == before.post_factor);
  CHECK(s.cap_s == before.cap_s);
  CHECK(s.cap_q == before.cap_q);
  CHECK(s.cap_g == before.cap_g);
  CHECK(s.gram_active == before.gram_active);

  SblState t = empty_state(p, FactorKind::Lambda);
  set_model(t, p, in.active, in.alpha);
  t.post_factor(1, 1) = -1.0;
  const SblState tb = t;
  CHECK(kind_of([&] { delete_term(t, in.active[1]); }) == ErrorKind::NumericalBreakdown);
  CHECK(t.active == tb.active);
  CHECK(t.post_factor == tb.post_factor);
  CHECK(t.cap_s == tb.cap_s);

  CHECK(kind_of([&] { add_term(t, p, in.active[0], 1.0); }) == ErrorKind::Shape);
  CHECK(kind_of([&] { reestimate_term(t, in.active[0], -1.0); }) == ErrorKind::InvalidHyperparameter);
  CHECK(kind_of([&] { delete_term(t, m); }) == ErrorKind::Shape);
}

TEST_CASE("seed index maximizes normalized correlation") {
  const auto in = random_instance(16, 32, 0, 71);
  const auto p = Problem::make(in.dict, in.y);
  const std::size_t best = seed_index(p);
  const Eigen::VectorXd score =
      (in.dict.theta.transpose() * in.y).array().square() / in.dict.col_sq_norms.array();
  Eigen::Index arg;
  score.maxCoeff(&arg);
  CHECK(best == static_cast<std::size_t>(arg));
}
