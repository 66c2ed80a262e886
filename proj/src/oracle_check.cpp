#include "bcs/oracle_check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "bcs/bcs_ipe.hpp"
#include "bcs/bcs_mpe.hpp"
#include "bcs/error.hpp"
#include "bcs/sensing.hpp"

namespace bcs::oracle {
namespace {

struct Labels {
  const char* delta_l;
  const char* factor;
  const char* mu;
  const char* s;
  const char* q;
  const char* g;
};

// Update equations by engine and action kind.
Labels labels_for(bool ipe, ActionKind kind) {
  if (!ipe) {
    switch (kind) {
      case ActionKind::Add: return {"Eq (49)", "Eq (50)", "Eq (51)", "Eq (52)", "Eq (53)", ""};
      case ActionKind::Reestimate: return {"Eq (54)", "Eq (55)", "Eq (56)", "Eq (57)", "Eq (58)", ""};
      case ActionKind::Delete: return {"Eq (59)", "Eq (60)", "Eq (61)", "Eq (62)", "Eq (63)", ""};
    }
  }
  switch (kind) {
    case ActionKind::Add: return {"Eq (66)", "Eq (67)", "Eq (68)", "Eq (69)", "Eq (70)", "Eq (71)"};
    case ActionKind::Reestimate: return {"Eq (72)", "Eq (73)", "Eq (74)", "Eq (75)", "Eq (76)", "Eq (77)"};
    case ActionKind::Delete: return {"Eq (78)", "Eq (79)", "Eq (80)", "Eq (81)", "Eq (82)", "Eq (83)"};
  }
  return {};
}

double rel_dev(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  if (got.rows() != want.rows() || got.cols() != want.cols()) return kInf;
  if (got.size() == 0) return 0.0;
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

class Recorder {
 public:
  Recorder(AlgorithmReport& report, double tol) : report_(report), tol_(tol) {}
  void add(const std::string& label, double dev) { add(label, dev, tol_); }
  void add(const std::string& label, double dev, double tol) {
    auto& d = report_.deviations[label];
    ++d.checks;
    if (!(dev <= tol)) ++d.breaches;
    if (!(dev <= d.max_dev)) d.max_dev = std::isnan(dev) ? kInf : std::max(dev, d.max_dev);
  }

 private:
  AlgorithmReport& report_;
  double tol_;
};

double dense_evidence(const SblState& st, const Problem& problem, bool ipe) {
  return ipe ? dense::log_evidence_ipe(st.alpha, st.active, st.a0, st.b0, *problem.dict, problem.y)
             : dense::log_evidence_mpe(st.alpha, st.active, st.beta, *problem.dict, problem.y);
}

void compare_state(const SblState& state, const Problem& problem, bool ipe, const Labels& lab,
                   Recorder& rec, bool inject) {
  SblState st = state;
  if (inject) st.cap_s.array() += 1e-3;

  const auto& dict = *problem.dict;
  const dense::Posterior post =
      dense::dense_posterior(st.alpha, st.active, ipe ? 1.0 : st.beta, dict, problem.y);
  rec.add(lab.mu, rel_dev(st.mu, post.mu));
  rec.add(lab.factor, rel_dev(st.post_factor, post.cov));

  const auto n = static_cast<Eigen::Index>(st.n_total());
  const Eigen::MatrixXd b = dense::dense_B(st.alpha, st.active, dict);
  const Eigen::MatrixXd binv = b.llt().solve(Eigen::MatrixXd::Identity(b.rows(), b.cols()));
  const Eigen::MatrixXd bt = binv * dict.theta;
  Eigen::VectorXd s_dense(n), q_dense(n), s_small(n), q_small(n), g_small(n), s_got(n), q_got(n), g_got(n);
  const Eigen::VectorXd by = binv * problem.y;
  for (Eigen::Index m = 0; m < n; ++m) {
    s_dense[m] = dict.theta.col(m).dot(bt.col(m));
    q_dense[m] = dict.theta.col(m).dot(by);
    const FactorTriple f = dense::dense_factors(st.alpha, st.active, dict, problem.y, st.b0,
                                                static_cast<std::size_t>(m));
    s_small[m] = f.s;
    q_small[m] = f.q;
    g_small[m] = f.g;
    const FactorTriple c = st.factors(static_cast<std::size_t>(m));
    s_got[m] = c.s;
    q_got[m] = c.q;
    g_got[m] = c.g;
  }
  rec.add(lab.s, rel_dev(st.cap_s, s_dense));
  rec.add(lab.q, rel_dev(st.cap_q, q_dense));
  rec.add("Eq (45)/(47)", rel_dev(s_got, s_small));
  rec.add("Eq (46)/(48)", rel_dev(q_got, q_small));
  if (ipe) {
    const double g_dense = problem.y.dot(by) + 2.0 * st.b0;
    rec.add(lab.g, rel_dev(st.cap_g, Eigen::VectorXd::Constant(n, g_dense)));
    rec.add("Eq (64)/(65)", rel_dev(g_got, g_small));
  }
}

struct Instance {
  sensing::Dictionary dict;
  Eigen::VectorXd y;
};

Instance make_instance(std::size_t k, std::size_t n, std::size_t sparsity, double noise, std::uint64_t seed) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto setup = sensing::generate_projection(k, n, rng());
  Instance inst{sensing::build_dictionary(setup), {}};
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t t = 0; t < std::min(sparsity, n); ++t) w[static_cast<Eigen::Index>(idx[t])] = normal(rng);
  inst.y = inst.dict.theta * w;
  for (Eigen::Index i = 0; i < inst.y.size(); ++i) inst.y[i] += noise * normal(rng);
  return inst;
}

void run_instance(const Instance& inst, bool ipe, const CheckConfig& cfg, AlgorithmReport& report) {
  const Problem problem = Problem::make(inst.dict, inst.y);
  SblState state;
  if (ipe) {
    ipe::IpeSettings settings;
    settings.tie_initial_b0 = true;
    state = ipe::initial_state(problem, settings);
  } else {
    state = mpe::initial_state(problem);
  }
  Recorder rec(report, cfg.tolerance);
  ++report.instances;

  for (std::size_t round = 0; round < cfg.outer_rounds; ++round) {
    for (std::size_t it = 0; it < cfg.max_actions_per_round; ++it) {
      const Survey sv = ipe ? ipe::survey(state, problem) : mpe::survey(state, problem);
      if (!sv.best) break;
      if (!sv.any_structural && sv.max_log_alpha_change < 1e-6) break;
      if (sv.best->delta_l < 1e-12) break;
      const ActionPlan plan = *sv.best;
      const double before = dense_evidence(state, problem, ipe);
      SblState next = state;
      try {
        if (ipe) ipe::apply_action(next, problem, plan);
        else mpe::apply_action(next, problem, plan);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NumericalBreakdown) throw;
        break;
      }
      state = std::move(next);
      ++report.actions;
      const double after = dense_evidence(state, problem, ipe);
      const Labels lab = labels_for(ipe, plan.kind);
      rec.add(lab.delta_l, std::abs(plan.delta_l - (after - before)), cfg.delta_l_tolerance);
      report.worst_monotonic = std::min(report.worst_monotonic, after - before);
      rec.add("evidence monotonicity", std::max(0.0, -(after - before)), cfg.monotonic_tolerance);
      compare_state(state, problem, ipe, lab, rec, cfg.inject_fault);
    }
    if (ipe) shift_b0(state, ipe::update_b0(state, problem, state.a0));
    else rescale_beta(state, mpe::update_beta(state, problem));
    refresh_caches(state, problem);
  }
}

}  // namespace

void CheckConfig::validate() const {
  if (sizes.empty()) fail(ErrorKind::Usage, "oracle check needs at least one (K, N) size");
  for (const auto& [k, n] : sizes) {
    if (k < 3 || n < 2 || k > 24 || n > 32) {
      fail(ErrorKind::Usage, "oracle check sizes must satisfy 3 <= K <= 24 and N <= 32");
    }
  }
  if (!(tolerance > 0.0) || min_instances == 0) fail(ErrorKind::Usage, "oracle check tolerances must be positive");
}

bool AlgorithmReport::pass() const {
  for (const auto& [label, d] : deviations)
    if (d.breaches > 0) return false;
  return true;
}

bool CheckReport::pass() const {
  return std::all_of(algorithms.begin(), algorithms.end(), [](const AlgorithmReport& a) { return a.pass(); });
}

std::vector<std::string> CheckReport::breached_labels() const {
  std::set<std::string> out;
  for (const auto& a : algorithms)
    for (const auto& [label, d] : a.deviations)
      if (d.breaches > 0) out.insert(label);
  return {out.begin(), out.end()};
}

std::string CheckReport::to_string() const {
  std::ostringstream os;
  char buf[256];
  for (const auto& a : algorithms) {
    std::snprintf(buf, sizeof buf, "%s: %zu instances, %zu actions, worst evidence change %.3e\n",
                  a.algorithm.c_str(), a.instances, a.actions, a.worst_monotonic);
    os << buf;
    for (const auto& [label, d] : a.deviations) {
      std::snprintf(buf, sizeof buf, "  %-22s max deviation %.3e over %zu checks%s\n", label.c_str(), d.max_dev,
                    d.checks, d.breaches > 0 ? "  MISMATCH" : "");
      os << buf;
    }
  }
  for (const auto& label : breached_labels()) os << label << " mismatch\n";
  std::snprintf(buf, sizeof buf, "%s (%.2f s)\n", pass() ? "PASS" : "FAIL", seconds);
  os << buf;
  return os.str();
}

CheckReport run(const CheckConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  CheckReport report;
  for (bool ipe : {false, true}) {
    AlgorithmReport ar;
    ar.algorithm = ipe ? "ipe" : "mpe";
    std::uint64_t counter = 0;
    while ((ar.instances < config.min_instances || ar.actions < config.min_actions) &&
           ar.instances < config.max_instances) {
      const auto& [k, n] = config.sizes[counter % config.sizes.size()];
      const Instance inst = make_instance(k, n, config.sparsity, config.noise_std, config.seed + counter);
      ++counter;
      run_instance(inst, ipe, config, ar);
    }
    report.algorithms.push_back(std::move(ar));
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace bcs::oracle
