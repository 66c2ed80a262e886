#include <cmath>
#include <random>

#include "doctest.h"
#include "engine_support.hpp"

#include "bcs/bcs_ipe.hpp"
#include "bcs/bcs_mpe.hpp"
#include "bcs/metrics.hpp"

using namespace bcs;
using testing::kind_of;
using testing::rel;

TEST_CASE("gamma_tilde examples") {
  CHECK(ipe::gamma_tilde(2.0, 0.0, 3.0, 10, 1.0) == doctest::Approx(-2.0));
  CHECK(alpha_from_gamma(ipe::gamma_tilde(2.0, 0.0, 3.0, 10, 1.0)) == kInf);
  // Denominator zero at q^2/g = s / (K + 2 a0).
  CHECK(std::isinf(ipe::gamma_tilde(1.0, 1.0, 12.0, 10, 1.0)));
}

TEST_CASE("gamma_tilde shrinks gamma_hat at beta = (K + 2 a0) / g") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const double s = u(rng), g = u(rng), a0 = u(rng);
    const std::size_t k = 3 + rng() % 60;
    const double q = std::sqrt(g * s) * std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const double c = static_cast<double>(k) + 2 * a0;
    const double gt = ipe::gamma_tilde(s, q, g, k, a0);
    const double gh = mpe::gamma_hat(s, q, c / g);
    if (c * q * q / g > s) {
      CHECK(gt < gh);
    } else {
      CHECK(alpha_from_gamma(gt) == kInf);
      CHECK(alpha_from_gamma(gh) == kInf);
    }
  }
}

TEST_CASE("gamma_tilde tends to gamma_hat as a0 grows") {
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc = testing::sparse_scenario(16, 32, 4, 0.05, 600 + seed);
    const auto p = Problem::make(sc.dict, sc.y);
    const double a0 = 1e8;
    SblState s = empty_state(p, FactorKind::Lambda);
    Eigen::VectorXd alpha(2);
    alpha << 0.5, 2.0;
    set_model(s, p, {0, 1}, alpha);
    const double yq = y_quad(s, p);
    const double b0 = a0 * yq / 16.0;
    shift_b0(s, b0);
    const double beta = a0 / b0;
    for (std::size_t m = 2; m < 32; ++m) {
      const auto f = s.factors(m);
      const double gh = mpe::gamma_hat(f.s, f.q, beta);
      if (!(gh > 0.0) || gh > 1e6) continue;
      CHECK(rel(ipe::gamma_tilde(f.s, f.q, f.g, 16, a0), gh) < 1e-3);
      ++checked;
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("update_b0") {
  std::mt19937_64 rng(2);
  const auto dict = testing::random_dict(512, 16, 3);
  Eigen::VectorXd y = testing::randn(512, rng);
  y *= std::sqrt(512.0) / y.norm();
  const auto p = Problem::make(dict, y);
  CHECK(ipe::update_b0(empty_state(p, FactorKind::Lambda), p, 1.0) == doctest::Approx(1.0).epsilon(1e-14));

  const auto sc = testing::sparse_scenario(20, 32, 3, 0.1, 4);
  const auto p2 = Problem::make(sc.dict, sc.y);
  SblState s = empty_state(p2, FactorKind::Lambda);
  CHECK(rel(ipe::update_b0(s, p2, 2.0), 2.0 * sc.y.squaredNorm() / 20.0) < 1e-14);
  Eigen::VectorXd alpha(3);
  alpha << 0.5, 1.0, 2.0;
  set_model(s, p2, {2, 6, 11}, alpha);
  CHECK(rel(ipe::update_b0(s, p2, 1.0), dense::y_quad(alpha, {2, 6, 11}, sc.dict, sc.y) / 20.0) < 1e-9);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(20);
  const auto p3 = Problem::make(sc.dict, zero);
  CHECK(kind_of([&] { ipe::update_b0(empty_state(p3, FactorKind::Lambda), p3, 1.0); }) == ErrorKind::DegenerateData);
}

TEST_CASE("posterior moments") {
  const auto sc = testing::sparse_scenario(16, 32, 3, 0.1, 5);
  const auto p = Problem::make(sc.dict, sc.y);
  SblState s = empty_state(p, FactorKind::Lambda);
  Eigen::VectorXd alpha(3);
  alpha << 0.3, 1.0, 4.0;
  set_model(s, p, {3, 8, 20}, alpha);
  // b0 + yq/2 = a0 + K/2 - 1 gives unit scaling.
  shift_b0(s, 1.0 + 8.0 - 1.0 - 0.5 * y_quad(s, p));
  REQUIRE(s.b0 >= 0.0);
  const auto m = ipe::posterior_moments(s, p);
  CHECK(rel(m.cov, s.post_factor) < 1e-14);
  CHECK(m.mean == s.mu);

  const auto id = sensing::build_dictionary(sensing::projection_from_matrix(Eigen::MatrixXd::Identity(8, 8), "id"));
  std::mt19937_64 rng(6);
  const Eigen::VectorXd y = testing::randn(8, rng);
  const auto pi = Problem::make(id, y);
  SblState one = empty_state(pi, FactorKind::Lambda);
  Eigen::VectorXd a(1);
  a << 0.6;
  one.b0 = 0.2;
  set_model(one, pi, {3}, a);
  const double b_post = 0.2 + 0.5 * y_quad(one, pi);
  const double a_post = 1.0 + 4.0;
  const auto mo = ipe::posterior_moments(one, pi);
  CHECK(rel(mo.cov(0, 0), b_post / ((a_post - 1.0) * (0.6 + 1.0))) < 1e-13);

  const auto d1 = testing::random_dict(1, 2, 1);
  const Eigen::VectorXd y1 = Eigen::VectorXd::Ones(1);
  const auto p1 = Problem::make(d1, y1);
  SblState tiny = empty_state(p1, FactorKind::Lambda);
  tiny.a0 = 0.25;
  CHECK(kind_of([&] { ipe::posterior_moments(tiny, p1); }) == ErrorKind::UndefinedVariance);
}

TEST_CASE("variance ordering at matched states") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc = testing::sparse_scenario(16, 32, 4, 0.1, 700 + seed);
    const auto p = Problem::make(sc.dict, sc.y);
    std::mt19937_64 rng(seed);
    const auto act = testing::pick(32, 4, rng);
    Eigen::VectorXd alpha = (testing::randn(4, rng) * 0.5).array().exp();
    SblState l = empty_state(p, FactorKind::Lambda);
    l.b0 = 0.3;
    set_model(l, p, act, alpha);
    const auto mo = ipe::posterior_moments(l, p);
    const double yq = y_quad(l, p);
    const double beta = (16.0 + 2.0 * l.a0 - 2.0) / (yq + 2.0 * l.b0);
    const auto mp = dense::dense_posterior(alpha, act, beta, sc.dict, sc.y);
    for (Eigen::Index j = 0; j < 4; ++j) {
      CHECK(mo.cov(j, j) >= mp.cov(j, j) * (1.0 - 1e-12));
      CHECK(rel(mo.cov(j, j), mp.cov(j, j)) < 1e-10);
    }
  }
}

TEST_CASE("gain boundaries") {
  const double s = 1.3, g = 2.2, c = 18.0, big_g = 2.5;
  CHECK(ipe::delta_l_reestimate(s, 0.4, big_g, 0.9, 0.9, c) == 0.0);
  for (double eps : {1e-6, 1e-7, 1e-8}) {
    const double q = std::sqrt(g * s / c * (1.0 + eps));
    const double a = alpha_from_gamma(ipe::gamma_tilde(s, q, g, 16, 1.0));
    REQUIRE(std::isfinite(a));
    CHECK(std::abs(ipe::delta_l_add(s, q, g, a, c)) < 1e-10);
  }
  const double q = std::sqrt(g * s / c * 3.0);
  CHECK(ipe::delta_l_add(s, q, g, alpha_from_gamma(ipe::gamma_tilde(s, q, g, 16, 1.0)), c) > 0.0);
}

TEST_CASE("planned gains equal dense Student-t evidence differences") {
  std::size_t actions = 0;
  ipe::IpeSettings settings;
  settings.tie_initial_b0 = true;
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto sc = testing::sparse_scenario(16, 32, 4, 0.05, 800 + seed);
    const auto p = Problem::make(sc.dict, sc.y);
    SblState s = ipe::initial_state(p, settings);
    REQUIRE(s.b0 > 0.0);
    for (int step = 0; step < 25; ++step) {
      const auto plan = ipe::plan_actions(s, p);
      if (!plan) break;
      const double before = dense::log_evidence_ipe(s.alpha, s.active, s.a0, s.b0, sc.dict, sc.y);
      ipe::apply_action(s, p, *plan);
      const double after = dense::log_evidence_ipe(s.alpha, s.active, s.a0, s.b0, sc.dict, sc.y);
      CHECK(std::abs(plan->delta_l - (after - before)) < 1e-8);
      CHECK(after - before >= -1e-10);
      ++actions;
    }
  }
  CHECK(actions > 50);
}

TEST_CASE("initial state") {
  const auto sc = testing::sparse_scenario(16, 32, 4, 0.05, 900);
  const auto p = Problem::make(sc.dict, sc.y);
  const SblState s = ipe::initial_state(p);
  CHECK(s.b0 == 0.0);
  CHECK(s.n_active() == 1);
  CHECK(s.active[0] == seed_index(p));
  CHECK(s.alpha[0] == 1.0);
  ipe::IpeSettings bad;
  bad.a0 = -1.0;
  CHECK(kind_of([&] { bad.validate(16); }) == ErrorKind::InvalidHyperparameter);
}

TEST_CASE("single-atom recovery") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto dict = testing::random_dict(64, 128, 1000 + seed);
    const std::size_t n = 5 + 29 * seed;
    const double c = -0.7 + static_cast<double>(seed);
    const Eigen::VectorXd y = c * dict.theta.col(static_cast<Eigen::Index>(n));
    const auto r = ipe::reconstruct(dict, y);
    REQUIRE(r.active.size() == 1);
    CHECK(r.active[0] == n);
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(128);
    truth[static_cast<Eigen::Index>(n)] = c;
    CHECK(metrics::strict_re(truth, r.mean_coeffs) < 1e-6);
  }
}

TEST_CASE("approximately sparse data: effective error below strict error") {
  std::size_t wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    Eigen::VectorXd w = 0.01 * testing::randn(512, rng);
    for (std::size_t i : testing::pick(512, 32, rng)) w[static_cast<Eigen::Index>(i)] = std::normal_distribution<double>()(rng);
    const auto dict = testing::random_dict(300, 512, 2000 + seed);
    const Eigen::VectorXd y = dict.theta * w;
    const auto r = ipe::reconstruct(dict, y);
    const auto id = metrics::top_indices(w, 32);
    if (metrics::effective_re(w, r.mean_coeffs, id) < metrics::strict_re(w, r.mean_coeffs)) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("deterministic with zero off the active set") {
  const auto sc = testing::sparse_scenario(40, 64, 6, 0.02, 901);
  const auto a = ipe::reconstruct(sc.dict, sc.y);
  const auto b = ipe::reconstruct(sc.dict, sc.y);
  CHECK(a.mean_coeffs == b.mean_coeffs);
  CHECK(a.coeff_std == b.coeff_std);
  std::vector<bool> on(64, false);
  for (std::size_t m : a.active) on[m] = true;
  for (Eigen::Index m = 0; m < 64; ++m)
    if (!on[static_cast<std::size_t>(m)]) CHECK((a.mean_coeffs[m] == 0.0 && a.coeff_std[m] == 0.0));
  CHECK(kind_of([&] { ipe::reconstruct(sc.dict, Eigen::VectorXd::Zero(40)); }) == ErrorKind::DegenerateData);
}
