#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bcs::oracle {

struct CheckConfig {
  std::vector<std::pair<std::size_t, std::size_t>> sizes{{16, 32}};  // (K, N)
  std::uint64_t seed = 1;
  std::size_t min_instances = 50;
  std::size_t min_actions = 1000;  // per algorithm
  std::size_t max_instances = 500;
  std::size_t outer_rounds = 6;
  std::size_t max_actions_per_round = 60;
  std::size_t sparsity = 4;
  double noise_std = 0.05;
  double tolerance = 1e-8;            // relative, caches and posterior
  double delta_l_tolerance = 1e-8;    // absolute, predicted vs dense gain
  double monotonic_tolerance = 1e-10;
  // Perturbs every cached S by 1e-3 before comparing (exercises the report path).
  bool inject_fault = false;

  void validate() const;
};

struct Deviation {
  double max_dev = 0.0;
  std::size_t checks = 0;
  std::size_t breaches = 0;
};

struct AlgorithmReport {
  std::string algorithm;
  std::size_t instances = 0;
  std::size_t actions = 0;
  double worst_monotonic = 0.0;  // most negative dense evidence change seen
  std::map<std::string, Deviation> deviations;  // keyed by equation label
  bool pass() const;
};

struct CheckReport {
  std::vector<AlgorithmReport> algorithms;
  double seconds = 0.0;
  bool pass() const;
  std::vector<std::string> breached_labels() const;
  std::string to_string() const;
};

CheckReport run(const CheckConfig& config);

}  // namespace bcs::oracle
