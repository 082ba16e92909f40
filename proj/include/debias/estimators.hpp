#pragma once

#include <cstdint>
#include <vector>

#include "debias/bias_spec.hpp"
#include "debias/types.hpp"

namespace debias {

// Approximate biasing functions built from the biased data alone.

// omega_hat_k(y) = n_k^(y), rescaled by its max so values lie in [0,1];
// classes absent from source k get 0. `smoothing` adds a constant count to
// every class before rescaling (default 0: raw counts).
std::vector<BiasSpec> estimate_class_counts(const DatasetCollection& data,
                                            double smoothing = 0.0);

// omega_hat_k = indicator of the coordinatewise [min, max] box of source k's
// embeddings. `margin` inflates the box per coordinate (default 0: the exact
// empirical box).
std::vector<BiasSpec> estimate_boxes(const DatasetCollection& data,
                                     double margin = 0.0);

// Spec whose evaluated values differ from the original by at most `magnitude`
// at every observation, clipped to [0, 1]. Robustness-test scaffolding.
BiasSpec perturb_spec(BiasSpec spec, double magnitude, std::uint64_t seed);

// Quality of an approximation against a ground-truth spec over the training
// collection: sup |omega_hat - omega| and the implied sqrt(n)-scaled
// constant.
struct ApproxQuality {
  double sup_error = 0.0;
  double c_omega_hat = 0.0;  // sup_error * sqrt(n)
};

ApproxQuality assess_approximation(const BiasSpec& estimate,
                                   const BiasSpec& truth,
                                   const DatasetCollection& data);

}  // namespace debias
