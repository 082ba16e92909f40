#include "debias/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "debias/detail/reduce.hpp"
#include "debias/error.hpp"

namespace debias {

namespace {

std::vector<double> row_inverses(const double* values, std::size_t rows,
                                 std::size_t cols, std::span<const double> lambda,
                                 std::span<const double> w_hat) {
  if (lambda.size() != cols || w_hat.size() != cols) {
    throw_data("compute_pi: lambda/W size does not match K");
  }
  for (double w : w_hat) {
    if (!(w > 0.0)) throw_data("compute_pi: non-positive normalizer estimate");
  }
  std::vector<double> inv(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double denom = 0.0;
    for (std::size_t l = 0; l < cols; ++l) {
      denom += lambda[l] * values[r * cols + l] / w_hat[l];
    }
    if (!(denom > 0.0)) {
      throw_data("compute_pi: observation outside every support (row " +
                 std::to_string(r) + ")");
    }
    inv[r] = 1.0 / denom;
  }
  return inv;
}

double pairwise_sum(std::span<const double> v) {
  auto leaf = [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  };
  auto join = [](double a, double b) { return a + b; };
  return detail::pairwise_reduce<double>(0, v.size(), leaf, join, 0);
}

}  // namespace

WeightVector compute_pi(const OmegaMatrix& omega, std::span<const double> lambda,
                        std::span<const double> w_hat) {
  WeightVector w;
  w.unnormalized = row_inverses(omega.values().data(), omega.rows(),
                                omega.cols(), lambda, w_hat);
  const double total = pairwise_sum(w.unnormalized);
  w.pi.resize(w.unnormalized.size());
  for (std::size_t r = 0; r < w.pi.size(); ++r) {
    w.pi[r] = w.unnormalized[r] / total;
  }
  return w;
}

std::vector<double> compute_pi_masses(const WeightedRows& rows,
                                      std::span<const double> lambda,
                                      std::span<const double> w_hat) {
  std::vector<double> masses = row_inverses(rows.values.data(), rows.rows(),
                                            rows.cols, lambda, w_hat);
  for (std::size_t r = 0; r < masses.size(); ++r) masses[r] *= rows.weights[r];
  const double total = pairwise_sum(masses);
  for (auto& m : masses) m /= total;
  return masses;
}

DebiasedDistribution debiased_distribution(const WeightVector& weights,
                                           const DatasetCollection& data,
                                           DistKey key) {
  if (weights.size() != data.total_size()) {
    throw_data("debiased_distribution: weight vector does not match data");
  }
  std::map<int, double> masses;
  for (std::size_t r = 0; r < weights.size(); ++r) {
    const Observation& obs = data.row(r);
    const int v = key == DistKey::Label ? obs.label : obs.stratum;
    if (v < 0) {
      throw_data("debiased_distribution: observation " + std::to_string(obs.id) +
                 " is missing the requested key");
    }
    masses[v] += weights.pi[r];
  }
  DebiasedDistribution dist;
  for (const auto& [v, m] : masses) {
    dist.support.push_back(v);
    dist.mass.push_back(m);
  }
  return dist;
}

double gini(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw_data("gini: empty weight vector");
  std::vector<double> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end());
  // Sorted identity for sum |x_i - x_j| / (2 n sum x); anchoring at the
  // smallest weight keeps uniform vectors at an exact zero.
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += sorted[i];
    weighted += (2.0 * static_cast<double>(i) + 1.0 - static_cast<double>(n)) *
                (sorted[i] - sorted[0]);
  }
  if (total <= 0.0) return 0.0;
  return weighted / (static_cast<double>(n) * total);
}

double l2_to_reference(const WeightVector& weights,
                       std::span<const double> reference) {
  if (weights.size() != reference.size()) {
    throw_data("l2_to_reference: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = weights.pi[i] - reference[i];
    s += d * d;
  }
  return std::sqrt(s);
}

WeightVector cap_weights(WeightVector weights, double max_weight) {
  if (max_weight <= 0.0) throw_config("cap_weights: cap must be positive");
  for (auto& p : weights.pi) p = std::min(p, max_weight);
  const double total = pairwise_sum(weights.pi);
  for (auto& p : weights.pi) p /= total;
  return weights;
}

WeightSampler::WeightSampler(std::span<const double> pi) {
  cdf_.resize(pi.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    acc += pi[i];
    cdf_[i] = acc;
  }
  if (!(acc > 0.0)) throw_data("WeightSampler: zero total mass");
}

std::size_t WeightSampler::draw(Rng& rng) const {
  const double u = rng.uniform01() * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                               cdf_.size() - 1);
}

}  // namespace debias
