#include "debias/types.hpp"

#include <cmath>
#include <string>

#include "debias/error.hpp"

namespace debias {

DatasetCollection::DatasetCollection(std::vector<SourceDataset> sources,
                                     int num_classes)
    : sources_(std::move(sources)), num_classes_(num_classes) {
  if (sources_.empty()) throw_data("DatasetCollection: no sources");
  offsets_.reserve(sources_.size() + 1);
  offsets_.push_back(0);
  for (const auto& s : sources_) {
    if (s.observations.empty()) {
      throw_data("DatasetCollection: source " + std::to_string(s.source_index) +
                 " is empty (n_k >= 1 required)");
    }
    for (const auto& o : s.observations) {
      if (o.has_label() && num_classes_ > 0 && o.label >= num_classes_) {
        throw_data("DatasetCollection: label " + std::to_string(o.label) +
                   " out of range for M=" + std::to_string(num_classes_));
      }
      for (double c : o.embedding) {
        if (!std::isfinite(c)) {
          throw_data("DatasetCollection: non-finite embedding coordinate in "
                     "observation " +
                     std::to_string(o.id));
        }
      }
    }
    total_ += s.observations.size();
    offsets_.push_back(total_);
  }
  lambdas_.reserve(sources_.size());
  lambda_min_ = 1.0;
  for (const auto& s : sources_) {
    const double lk =
        static_cast<double>(s.observations.size()) / static_cast<double>(total_);
    lambdas_.push_back(lk);
    if (lk < lambda_min_) lambda_min_ = lk;
  }
}

const Observation& DatasetCollection::row(std::size_t r) const {
  const auto [k, i] = row_location(r);
  return sources_[static_cast<std::size_t>(k)].observations[i];
}

std::pair<int, std::size_t> DatasetCollection::row_location(std::size_t r) const {
  if (r >= total_) throw_data("DatasetCollection: row index out of range");
  std::size_t k = 0;
  while (offsets_[k + 1] <= r) ++k;
  return {static_cast<int>(k), r - offsets_[k]};
}

}  // namespace debias
