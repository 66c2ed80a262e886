#include "bcs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "bcs/error.hpp"

namespace bcs::synthetic {
namespace {

std::vector<std::size_t> choose_positions(std::size_t n, std::size_t t, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(t);
  return idx;
}

void check(std::size_t n, std::size_t t) {
  if (n < 2) fail(ErrorKind::InvalidSize, "segment length must be at least 2");
  if (t < 1 || t > n) fail(ErrorKind::InvalidSize, "sparsity must lie in 1..N");
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Eigen::VectorXd exact_sparse(std::size_t n, std::size_t t, std::uint64_t seed) {
  check(n, t);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i : choose_positions(n, t, rng)) w[static_cast<Eigen::Index>(i)] = normal(rng);
  return w;
}

Eigen::VectorXd approx_sparse(std::size_t n, std::size_t t, double floor_sigma, std::uint64_t seed) {
  check(n, t);
  if (!(floor_sigma >= 0.0)) fail(ErrorKind::InvalidHyperparameter, "floor sigma must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = floor_sigma * normal(rng);
  for (std::size_t i : choose_positions(n, t, rng)) w[static_cast<Eigen::Index>(i)] = normal(rng);
  return w;
}

Eigen::VectorXd lognormal_coeffs(std::size_t n, double spread, std::uint64_t seed) {
  check(n, 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double mag = std::exp(spread * normal(rng));
    w[i] = (rng() & 1U) ? mag : -mag;
  }
  return w;
}

std::string Spec::describe() const {
  char buf[96];
  switch (kind) {
    case Kind::ExactSparse: std::snprintf(buf, sizeof buf, "exact:%zu", t); break;
    case Kind::ApproxSparse: std::snprintf(buf, sizeof buf, "approx:%zu:%.17g", t, floor_sigma); break;
    case Kind::Lognormal: std::snprintf(buf, sizeof buf, "lognormal:%.17g", spread); break;
  }
  return buf;
}

namespace {

std::optional<double> whole_number(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
  return std::stod(text);
}

std::optional<double> real(const std::string& text) {
  std::size_t used = 0;
  try {
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::logic_error&) {
  }
  return std::nullopt;
}

}  // namespace

Spec parse_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  Spec spec;
  if (parts.size() == 2 && parts[0] == "exact") {
    const auto t = whole_number(parts[1]);
    if (t && *t >= 1) {
      spec.kind = Kind::ExactSparse;
      spec.t = static_cast<std::size_t>(*t);
      return spec;
    }
  }
  if (parts.size() == 3 && parts[0] == "approx") {
    const auto t = whole_number(parts[1]);
    const auto sigma = real(parts[2]);
    if (t && *t >= 1 && sigma && *sigma >= 0.0) {
      spec.kind = Kind::ApproxSparse;
      spec.t = static_cast<std::size_t>(*t);
      spec.floor_sigma = *sigma;
      return spec;
    }
  }
  if ((parts.size() == 1 || parts.size() == 2) && parts[0] == "lognormal") {
    const auto spread = parts.size() == 2 ? real(parts[1]) : std::optional<double>(spec.spread);
    if (spread && *spread > 0.0) {
      spec.kind = Kind::Lognormal;
      spec.spread = *spread;
      return spec;
    }
  }
  fail(ErrorKind::Usage, "unrecognized synthetic signal spec '" + text +
                             "' (expected exact:T, approx:T:SIGMA or lognormal[:SPREAD])");
}

Eigen::VectorXd generate(const Spec& spec, std::size_t n, std::uint64_t seed) {
  switch (spec.kind) {
    case Kind::ExactSparse: return exact_sparse(n, spec.t, seed);
    case Kind::ApproxSparse: return approx_sparse(n, spec.t, spec.floor_sigma, seed);
    case Kind::Lognormal: return lognormal_coeffs(n, spec.spread, seed);
  }
  return {};
}

}  // namespace bcs::synthetic
