#include "bcs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bcs/error.hpp"

namespace bcs::metrics {

double strict_re(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate) {
  if (truth.size() != estimate.size()) fail(ErrorKind::Shape, "truth and estimate lengths differ");
  const double den = truth.squaredNorm();
  if (!(den > 0.0)) fail(ErrorKind::UndefinedRatio, "relative error of a zero reference is undefined");
  return (truth - estimate).squaredNorm() / den;
}

double effective_re(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate,
                    const std::vector<std::size_t>& id) {
  if (truth.size() != estimate.size()) fail(ErrorKind::Shape, "truth and estimate lengths differ");
  if (id.empty()) fail(ErrorKind::Shape, "index set is empty");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i : id) {
    if (i >= static_cast<std::size_t>(truth.size())) fail(ErrorKind::Shape, "index out of range");
    const auto ii = static_cast<Eigen::Index>(i);
    const double d = truth[ii] - estimate[ii];
    num += d * d;
    den += truth[ii] * truth[ii];
  }
  if (!(den > 0.0)) fail(ErrorKind::UndefinedRatio, "reference is zero on the index set");
  return num / den;
}

std::vector<std::size_t> top_indices(const Eigen::VectorXd& coeffs, std::size_t t) {
  const auto n = static_cast<std::size_t>(coeffs.size());
  if (t < 1 || t > n) fail(ErrorKind::Shape, "top-t count must lie in 1..N");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(coeffs[static_cast<Eigen::Index>(a)]) > std::abs(coeffs[static_cast<Eigen::Index>(b)]);
  });
  order.resize(t);
  std::sort(order.begin(), order.end());
  return order;
}

Eigen::VectorXd denoise_by_energy(const Eigen::VectorXd& coeffs, double fraction) {
  if (!(fraction >= 0.0) || !(fraction < 1.0)) {
    fail(ErrorKind::InvalidFraction, "energy fraction must lie in [0, 1), got " + std::to_string(fraction));
  }
  const auto n = static_cast<std::size_t>(coeffs.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(coeffs[static_cast<Eigen::Index>(a)]) < std::abs(coeffs[static_cast<Eigen::Index>(b)]);
  });
  const double budget = fraction * coeffs.squaredNorm();
  Eigen::VectorXd out = coeffs;
  double spent = 0.0;
  for (std::size_t i : order) {
    const double e = coeffs[static_cast<Eigen::Index>(i)] * coeffs[static_cast<Eigen::Index>(i)];
    if (spent + e > budget) break;
    spent += e;
    out[static_cast<Eigen::Index>(i)] = 0.0;
  }
  return out;
}

double acceptance_rate(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) fail(ErrorKind::EmptySample, "acceptance rate of an empty sample");
  const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return e < threshold; });
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorKind::Shape, "rank correlation needs equal-length samples");
  if (a.size() < 2) fail(ErrorKind::EmptySample, "rank correlation needs at least two pairs");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace bcs::metrics
