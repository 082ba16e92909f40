#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "debias/types.hpp"
#include "debias/weights.hpp"

namespace debias {

// Multinomial logistic regression trained by seeded minibatch momentum
// descent on (optionally pi-weighted) softmax cross-entropy. Deliberately a
// convex model: it isolates the effect of the debiasing weights.
struct LinearModel {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> weights;  // num_classes x dim, row-major
  std::vector<double> bias;     // num_classes

  std::vector<double> logits(std::span<const double> x) const;
  int predict(std::span<const double> x) const;
};

enum class Weighting { Uniform, Pi };
enum class WeightUse { LossReweight, ResampleWithReplacement };

struct TrainConfig {
  int epochs = 30;
  int batch_size = 100;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double l2_penalty = 0.0;
  double init_std = 0.01;
  std::uint64_t seed = 0;
  Weighting weighting = Weighting::Uniform;
  WeightUse weight_use = WeightUse::LossReweight;
};

// LossReweight multiplies per-example losses by n * pi_i; resampling draws
// batch indices from pi. Uniform runs the identical code path with
// pi = 1/n, so the two agree bit-for-bit at equal seeds.
LinearModel train(const DatasetCollection& data, const TrainConfig& cfg,
                  const WeightVector* pi = nullptr);

struct EvalMetrics {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  double mean_loss = 0.0;  // unweighted softmax cross-entropy
};

EvalMetrics evaluate(const LinearModel& model, const DatasetCollection& test);

// Weighted empirical risk sum_i w_i * loss_i (weights summing to 1).
double weighted_risk(const LinearModel& model, const DatasetCollection& data,
                     std::span<const double> weights);

// End-to-end comparison of naive pooled training against debiased training
// on a synthetic class-imbalance scenario: class-conditional isotropic
// Gaussian features with means spread one unit apart, biased sources drawn
// by the class-imbalance generator, omega estimated from counts, weights
// from the solved normalizers, both models trained from the same seed and
// scored on a balanced held-out test set.
struct CompareConfig {
  int num_classes = 8;
  int num_sources = 8;
  double gamma = 0.2;
  std::vector<std::size_t> source_sizes;
  int feature_dim = 16;
  double feature_noise = 0.5;
  int pool_per_class = 2000;
  int test_per_class = 500;
  TrainConfig train;
  std::uint64_t seed = 0;
};

struct CompareReport {
  double naive_accuracy = 0.0;
  double debiased_accuracy = 0.0;
  double gini = 0.0;
  double l2_to_uniform = 0.0;
  bool connected = true;
  EvalMetrics naive_metrics;
  EvalMetrics debiased_metrics;
};

CompareReport compare(const CompareConfig& cfg);

// Class-conditional Gaussian pool used by compare(); exposed for tests.
std::map<int, std::vector<Observation>> gaussian_class_pool(
    int num_classes, int per_class, int dim, double noise, Rng& rng);

}  // namespace debias
