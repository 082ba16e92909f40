#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace debias {

// A single data point z = (x, y). Label, stratum, embedding and features are
// all optional; -1 / empty mark absence. The 3-dim embedding slot carries
// e.g. an HSV border encoding in [0,1]^3, `features` carries model inputs.
struct Observation {
  std::int64_t id = 0;
  int label = -1;
  int stratum = -1;
  std::vector<double> embedding;
  std::vector<double> features;

  bool has_label() const { return label >= 0; }
  bool has_stratum() const { return stratum >= 0; }
  bool has_embedding() const { return !embedding.empty(); }
};

// Dataset D_k drawn from one biased source.
struct SourceDataset {
  int source_index = 0;
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
};

// K source datasets plus the derived sample-share quantities
// n = sum n_k, lambda_k = n_k / n.
class DatasetCollection {
 public:
  DatasetCollection(std::vector<SourceDataset> sources, int num_classes);

  const std::vector<SourceDataset>& sources() const { return sources_; }
  std::size_t num_sources() const { return sources_.size(); }
  int num_classes() const { return num_classes_; }
  std::size_t total_size() const { return total_; }

  const std::vector<double>& lambdas() const { return lambdas_; }
  double lambda_min() const { return lambda_min_; }

  // Row r enumerates observations source-major; location(r) = (k, i).
  const Observation& row(std::size_t r) const;
  std::pair<int, std::size_t> row_location(std::size_t r) const;

 private:
  std::vector<SourceDataset> sources_;
  std::vector<std::size_t> offsets_;
  std::vector<double> lambdas_;
  double lambda_min_ = 0.0;
  std::size_t total_ = 0;
  int num_classes_ = 0;
};

}  // namespace debias
