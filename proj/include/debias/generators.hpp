#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "debias/bias_spec.hpp"
#include "debias/types.hpp"

namespace debias {

// Synthetic biased multi-source datasets with known ground-truth biasing
// functions. All generators are deterministic given the config seed, and
// each source draws from its own child stream so adding a source never
// perturbs earlier ones.

// Class-imbalance scenario: M classes split into K consecutive meta-classes
// of size n_C = M/K; source k carries meta-classes C_k and C_{k+1} (cyclic),
// with overlap weight gamma.
struct ClassImbalanceConfig {
  int num_classes = 10;        // M
  int num_sources = 5;         // K, must divide M
  double gamma = 0.2;          // in [0, 0.5]
  std::vector<std::size_t> source_sizes;  // n_k
  std::uint64_t seed = 0;
  // Optional relabeling applied before the consecutive-block split
  // (the block structure itself is kept fixed).
  std::vector<int> class_permutation;
};

// Label sampling distribution p_k(y) of source k.
std::vector<double> class_probabilities(const ClassImbalanceConfig& cfg, int k);

struct GeneratedCollection {
  DatasetCollection data;
  std::vector<BiasSpec> true_specs;
};

GeneratedCollection gen_class_imbalance(
    const ClassImbalanceConfig& cfg,
    const std::map<int, std::vector<Observation>>& pool);

// HSV-bin scenario: 8 boxes from per-coordinate median splits of a
// population of 3-dim embeddings, ramped biasing functions of width
// gamma_ramp, sources sampled with replacement proportionally to omega_k.
struct HsvBinConfig {
  std::vector<Observation> population;
  double gamma_ramp = 1.0;
  std::vector<std::size_t> source_sizes;  // 8 entries
  std::uint64_t seed = 0;
};

struct Bin {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct HsvGenerated {
  DatasetCollection data;
  std::vector<BiasSpec> true_specs;
  std::vector<Bin> bins;
  std::vector<double> medians;
};

// Bin l for binary code l = 4 b_H + 2 b_S + b_V over medians h.
Bin hsv_bin(int l, const std::vector<double>& medians);

HsvGenerated gen_hsv_bins(const HsvBinConfig& cfg);

// Long-tail source sizes n_k proportional to alpha^k, rounded by largest
// remainder so they sum to `total` exactly.
std::vector<std::size_t> long_tail_sizes(std::size_t total, int k,
                                         double alpha);
std::vector<std::size_t> balanced_sizes(std::size_t total, int k);

// Power-law modality bias: target proportions proportional to
// gamma^(-floor(K/2)/sigma(k)) * p_k with a random permutation sigma, drawn
// without replacement in multinomial rounds until some pool is exhausted.
struct PowerLawConfig {
  std::vector<double> base_proportions;  // p_k, sums to 1
  double gamma = 1.0;                    // in (0, 1]
  std::uint64_t seed = 0;
  std::vector<int> sigma;  // optional explicit permutation of {1..K}
};

std::vector<double> power_law_proportions(const PowerLawConfig& cfg,
                                          const std::vector<int>& sigma);

DatasetCollection gen_power_law(
    const PowerLawConfig& cfg,
    const std::map<int, std::vector<Observation>>& pool);

// Two-point space Z = {1, 2}, p_test uniform, omega_k(1) = R_k,
// omega_k(2) = 1, so p_k(1) = R_k / (1 + R_k).
struct TwoPointConfig {
  double r1 = 1.0;
  double r2 = 1.0;
  std::size_t n1 = 100;
  std::size_t n2 = 100;
  std::uint64_t seed = 0;
};

GeneratedCollection gen_two_point(const TwoPointConfig& cfg);

}  // namespace debias
