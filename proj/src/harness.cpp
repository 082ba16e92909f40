#include "debias/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "debias/error.hpp"
#include "debias/estimators.hpp"
#include "debias/generators.hpp"
#include "debias/solver.hpp"

namespace debias {

namespace {

// Stable softmax in place.
void softmax(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (auto& x : v) {
    x = std::exp(x - m);
    s += x;
  }
  for (auto& x : v) x /= s;
}

double cross_entropy(const std::vector<double>& probs, int label) {
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

const Observation& checked_row(const DatasetCollection& data, std::size_t r,
                               int dim) {
  const Observation& obs = data.row(r);
  if (!obs.has_label()) {
    throw_data("train: unlabeled observation " + std::to_string(obs.id));
  }
  if (static_cast<int>(obs.features.size()) != dim) {
    throw_data("train: observation " + std::to_string(obs.id) +
               " has feature dimension " + std::to_string(obs.features.size()) +
               ", expected " + std::to_string(dim));
  }
  return obs;
}

}  // namespace

std::vector<double> LinearModel::logits(std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    double v = bias[static_cast<std::size_t>(c)];
    const double* w = weights.data() + static_cast<std::size_t>(c) * dim;
    for (int j = 0; j < dim; ++j) v += w[j] * x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(c)] = v;
  }
  return out;
}

int LinearModel::predict(std::span<const double> x) const {
  const auto l = logits(x);
  return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
}

LinearModel train(const DatasetCollection& data, const TrainConfig& cfg,
                  const WeightVector* pi) {
  const std::size_t n = data.total_size();
  const int m = data.num_classes();
  if (m < 2) throw_data("train: need at least two classes");
  const int dim = static_cast<int>(data.row(0).features.size());
  if (dim == 0) throw_data("train: observations carry no features");

  std::vector<double> example_pi(n, 1.0 / static_cast<double>(n));
  if (cfg.weighting == Weighting::Pi) {
    if (pi == nullptr || pi->size() != n) {
      throw_data("train: weighting requires a weight vector aligned with the "
                 "collection");
    }
    example_pi = pi->pi;
  }

  Rng rng(cfg.seed);
  LinearModel model;
  model.num_classes = m;
  model.dim = dim;
  model.weights.resize(static_cast<std::size_t>(m) * dim);
  model.bias.assign(static_cast<std::size_t>(m), 0.0);
  {
    Rng init_rng = rng.child(0);
    for (auto& w : model.weights) w = cfg.init_std * init_rng.normal();
  }

  std::vector<double> vel_w(model.weights.size(), 0.0);
  std::vector<double> vel_b(model.bias.size(), 0.0);
  std::vector<double> grad_w(model.weights.size());
  std::vector<double> grad_b(model.bias.size());

  Rng order_rng = rng.child(1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const WeightSampler sampler(example_pi);
  const double nd = static_cast<double>(n);
  const int batch = std::min<int>(cfg.batch_size, static_cast<int>(n));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.weight_use == WeightUse::LossReweight) order_rng.shuffle(order);
    const std::size_t batches = (n + batch - 1) / static_cast<std::size_t>(batch);
    for (std::size_t b = 0; b < batches; ++b) {
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      const std::size_t lo = b * static_cast<std::size_t>(batch);
      const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(batch));
      double batch_count = 0.0;
      for (std::size_t s = lo; s < hi; ++s) {
        const std::size_t r = cfg.weight_use == WeightUse::LossReweight
                                  ? order[s]
                                  : sampler.draw(order_rng);
        const Observation& obs = checked_row(data, r, dim);
        auto probs = model.logits(obs.features);
        softmax(probs);
        // LossReweight scales each example's gradient by n * pi_r;
        // resampling already encodes pi in the draw.
        const double scale = cfg.weight_use == WeightUse::LossReweight
                                 ? nd * example_pi[r]
                                 : 1.0;
        for (int c = 0; c < m; ++c) {
          const double delta =
              scale * (probs[static_cast<std::size_t>(c)] - (obs.label == c ? 1.0 : 0.0));
          grad_b[static_cast<std::size_t>(c)] += delta;
          double* gw = grad_w.data() + static_cast<std::size_t>(c) * dim;
          for (int j = 0; j < dim; ++j) {
            gw[j] += delta * obs.features[static_cast<std::size_t>(j)];
          }
        }
        batch_count += 1.0;
      }
      for (std::size_t i = 0; i < grad_w.size(); ++i) {
        const double g = grad_w[i] / batch_count + cfg.l2_penalty * model.weights[i];
        vel_w[i] = cfg.momentum * vel_w[i] + cfg.learning_rate * g;
        model.weights[i] -= vel_w[i];
      }
      for (std::size_t i = 0; i < grad_b.size(); ++i) {
        vel_b[i] = cfg.momentum * vel_b[i] + cfg.learning_rate * (grad_b[i] / batch_count);
        model.bias[i] -= vel_b[i];
      }
    }
  }
  return model;
}

EvalMetrics evaluate(const LinearModel& model, const DatasetCollection& test) {
  EvalMetrics metrics;
  metrics.per_class_accuracy.assign(
      static_cast<std::size_t>(model.num_classes), 0.0);
  std::vector<double> class_counts(static_cast<std::size_t>(model.num_classes),
                                   0.0);
  double hits = 0.0;
  double loss = 0.0;
  const std::size_t n = test.total_size();
  for (std::size_t r = 0; r < n; ++r) {
    const Observation& obs = test.row(r);
    if (!obs.has_label()) {
      throw_data("evaluate: unlabeled observation " + std::to_string(obs.id));
    }
    auto probs = model.logits(obs.features);
    softmax(probs);
    loss += cross_entropy(probs, obs.label);
    const int pred = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    class_counts[static_cast<std::size_t>(obs.label)] += 1.0;
    if (pred == obs.label) {
      hits += 1.0;
      metrics.per_class_accuracy[static_cast<std::size_t>(obs.label)] += 1.0;
    }
  }
  metrics.accuracy = hits / static_cast<double>(n);
  metrics.mean_loss = loss / static_cast<double>(n);
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    if (class_counts[c] > 0.0) metrics.per_class_accuracy[c] /= class_counts[c];
  }
  return metrics;
}

double weighted_risk(const LinearModel& model, const DatasetCollection& data,
                     std::span<const double> weights) {
  if (weights.size() != data.total_size()) {
    throw_data("weighted_risk: weight vector does not match data");
  }
  double risk = 0.0;
  for (std::size_t r = 0; r < weights.size(); ++r) {
    const Observation& obs = data.row(r);
    auto probs = model.logits(obs.features);
    softmax(probs);
    risk += weights[r] * cross_entropy(probs, obs.label);
  }
  return risk;
}

std::map<int, std::vector<Observation>> gaussian_class_pool(
    int num_classes, int per_class, int dim, double noise, Rng& rng) {
  if (dim < num_classes) {
    throw_config("gaussian_class_pool: feature dimension must be >= classes");
  }
  std::map<int, std::vector<Observation>> pool;
  const double coord = 1.0 / std::sqrt(2.0);  // unit pairwise separation
  for (int y = 0; y < num_classes; ++y) {
    Rng class_rng = rng.child(static_cast<std::uint64_t>(y));
    auto& bucket = pool[y];
    bucket.reserve(static_cast<std::size_t>(per_class));
    for (int i = 0; i < per_class; ++i) {
      Observation obs;
      obs.label = y;
      obs.features.resize(static_cast<std::size_t>(dim));
      for (int j = 0; j < dim; ++j) {
        obs.features[static_cast<std::size_t>(j)] =
            (j == y ? coord : 0.0) + noise * class_rng.normal();
      }
      bucket.push_back(std::move(obs));
    }
  }
  return pool;
}

CompareReport compare(const CompareConfig& cfg) {
  Rng rng(cfg.seed);

  Rng pool_rng = rng.child(0);
  const auto pool = gaussian_class_pool(cfg.num_classes, cfg.pool_per_class,
                                        cfg.feature_dim, cfg.feature_noise,
                                        pool_rng);

  ClassImbalanceConfig gen_cfg;
  gen_cfg.num_classes = cfg.num_classes;
  gen_cfg.num_sources = cfg.num_sources;
  gen_cfg.gamma = cfg.gamma;
  gen_cfg.source_sizes = cfg.source_sizes;
  gen_cfg.seed = rng.child(1).next_u64();
  auto gen = gen_class_imbalance(gen_cfg, pool);

  const auto specs = estimate_class_counts(gen.data);
  const auto matrix = build_omega_matrix(specs, gen.data);
  const auto& lambda = gen.data.lambdas();
  const auto res = solve(matrix, lambda,
                         SolverConfig::full_gradient(0.5, 0.0, 1e-10, 200000));
  const WeightVector pi = compute_pi(matrix, lambda, res.w_hat);

  // Balanced held-out test set from fresh draws.
  Rng test_rng = rng.child(2);
  std::vector<SourceDataset> test_sources(1);
  test_sources[0].source_index = 0;
  for (int y = 0; y < cfg.num_classes; ++y) {
    Rng class_rng = test_rng.child(static_cast<std::uint64_t>(y));
    const double coord = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < cfg.test_per_class; ++i) {
      Observation obs;
      obs.label = y;
      obs.features.resize(static_cast<std::size_t>(cfg.feature_dim));
      for (int j = 0; j < cfg.feature_dim; ++j) {
        obs.features[static_cast<std::size_t>(j)] =
            (j == y ? coord : 0.0) + cfg.feature_noise * class_rng.normal();
      }
      obs.id = static_cast<std::int64_t>(test_sources[0].observations.size());
      test_sources[0].observations.push_back(std::move(obs));
    }
  }
  DatasetCollection test(std::move(test_sources), cfg.num_classes);

  TrainConfig naive_cfg = cfg.train;
  naive_cfg.weighting = Weighting::Uniform;
  TrainConfig debiased_cfg = cfg.train;
  debiased_cfg.weighting = Weighting::Pi;

  const LinearModel naive = train(gen.data, naive_cfg);
  const LinearModel debiased = train(gen.data, debiased_cfg, &pi);

  CompareReport report;
  report.naive_metrics = evaluate(naive, test);
  report.debiased_metrics = evaluate(debiased, test);
  report.naive_accuracy = report.naive_metrics.accuracy;
  report.debiased_accuracy = report.debiased_metrics.accuracy;
  report.gini = gini(pi);
  const std::vector<double> uniform(pi.size(),
                                    1.0 / static_cast<double>(pi.size()));
  report.l2_to_uniform = l2_to_reference(pi, uniform);
  report.connected = res.connected;
  return report;
}

}  // namespace debias
