#pragma once

#include <span>
#include <vector>

#include "debias/bias_spec.hpp"
#include "debias/rng.hpp"
#include "debias/solver.hpp"
#include "debias/types.hpp"

namespace debias {

// Per-observation debiasing weights
//   pi_ki  proportional to  ( sum_l lambda_l omega_l(z_i^(k)) / W_l )^{-1},
// normalized to sum 1; `unnormalized` keeps the raw inverses.
struct WeightVector {
  std::vector<double> pi;
  std::vector<double> unnormalized;

  std::size_t size() const { return pi.size(); }
};

WeightVector compute_pi(const OmegaMatrix& omega, std::span<const double> lambda,
                        std::span<const double> w_hat);

// Population variant: masses of the debiased distribution over weighted rows
// (row_weight_r * inverse_r, normalized). Row weights play the role of the
// pooled distribution masses.
std::vector<double> compute_pi_masses(const WeightedRows& rows,
                                      std::span<const double> lambda,
                                      std::span<const double> w_hat);

enum class DistKey { Label, Stratum };

// Weighted empirical distribution of a discrete key under pi.
struct DebiasedDistribution {
  std::vector<int> support;  // sorted distinct key values
  std::vector<double> mass;  // sums to 1
};

DebiasedDistribution debiased_distribution(const WeightVector& weights,
                                           const DatasetCollection& data,
                                           DistKey key);

// Gini inequality index of a nonnegative weight vector: 0 for uniform
// weights, (n-1)/n when one entry holds all mass. Computed by the sorted
// identity in O(n log n).
double gini(std::span<const double> weights);
inline double gini(const WeightVector& w) { return gini(w.pi); }

double l2_to_reference(const WeightVector& weights,
                       std::span<const double> reference);

// Optional stability cap: clip weights at `max_weight`, renormalize. Off by
// default everywhere; exists for harness stability studies only.
WeightVector cap_weights(WeightVector weights, double max_weight);

// Draw an index from pi by inverse CDF; used when pi acts as sampling
// probabilities rather than loss weights.
class WeightSampler {
 public:
  explicit WeightSampler(std::span<const double> pi);
  std::size_t draw(Rng& rng) const;

 private:
  std::vector<double> cdf_;
};

}  // namespace debias
