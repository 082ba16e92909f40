#include "debias/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "debias/error.hpp"

namespace debias {

std::vector<BiasSpec> estimate_class_counts(const DatasetCollection& data,
                                            double smoothing) {
  std::vector<BiasSpec> specs;
  specs.reserve(data.num_sources());
  for (const auto& src : data.sources()) {
    std::map<int, double> counts;
    for (int y = 0; y < data.num_classes(); ++y) {
      if (smoothing > 0.0) counts[y] = smoothing;
    }
    for (const auto& obs : src.observations) {
      if (!obs.has_label()) {
        throw_data("estimate_class_counts: unlabeled observation " +
                   std::to_string(obs.id) + " in source " +
                   std::to_string(src.source_index));
      }
      counts[obs.label] += 1.0;
    }
    double max_count = 0.0;
    for (const auto& [y, c] : counts) max_count = std::max(max_count, c);
    std::map<int, double> values;
    for (const auto& [y, c] : counts) {
      if (c > 0.0) values[y] = c / max_count;
    }
    specs.push_back(BiasSpec::tabular(TabularKey::Label, std::move(values)));
  }
  return specs;
}

std::vector<BiasSpec> estimate_boxes(const DatasetCollection& data,
                                     double margin) {
  std::vector<BiasSpec> specs;
  specs.reserve(data.num_sources());
  for (const auto& src : data.sources()) {
    std::vector<double> lo, hi;
    for (const auto& obs : src.observations) {
      if (!obs.has_embedding()) {
        throw_data("estimate_boxes: missing embedding on observation " +
                   std::to_string(obs.id) + " in source " +
                   std::to_string(src.source_index));
      }
      if (lo.empty()) {
        lo = obs.embedding;
        hi = obs.embedding;
        continue;
      }
      if (obs.embedding.size() != lo.size()) {
        throw_data("estimate_boxes: inconsistent embedding dimensions in "
                   "source " +
                   std::to_string(src.source_index));
      }
      for (std::size_t c = 0; c < lo.size(); ++c) {
        lo[c] = std::min(lo[c], obs.embedding[c]);
        hi[c] = std::max(hi[c], obs.embedding[c]);
      }
    }
    specs.push_back(BiasSpec::box(std::move(lo), std::move(hi), margin));
  }
  return specs;
}

BiasSpec perturb_spec(BiasSpec spec, double magnitude, std::uint64_t seed) {
  if (magnitude < 0.0) throw_config("perturb_spec: magnitude must be >= 0");
  spec.perturb_magnitude = magnitude;
  spec.perturb_seed = seed;
  return spec;
}

ApproxQuality assess_approximation(const BiasSpec& estimate,
                                   const BiasSpec& truth,
                                   const DatasetCollection& data) {
  ApproxQuality q;
  for (const auto& src : data.sources()) {
    for (const auto& obs : src.observations) {
      q.sup_error = std::max(
          q.sup_error, std::abs(evaluate_bias(estimate, obs) -
                                evaluate_bias(truth, obs)));
    }
  }
  q.c_omega_hat = q.sup_error * std::sqrt(static_cast<double>(data.total_size()));
  return q;
}

}  // namespace debias
