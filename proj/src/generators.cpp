#include "debias/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "debias/error.hpp"
#include "debias/rng.hpp"

namespace debias {

namespace {

// Inverse-CDF draw from a probability vector (linear walk keeps the draw
// order independent of any table layout).
template <class Probs>
std::size_t draw_categorical(Rng& rng, const Probs& p) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

void assign_ids(std::vector<SourceDataset>& sources) {
  std::int64_t id = 0;
  for (auto& s : sources) {
    for (auto& o : s.observations) o.id = id++;
  }
}

double lower_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace

std::vector<double> class_probabilities(const ClassImbalanceConfig& cfg, int k) {
  const int m = cfg.num_classes;
  const int kk = cfg.num_sources;
  if (kk <= 0 || m <= 0 || m % kk != 0) {
    throw_config("class_imbalance: K must divide M");
  }
  if (cfg.gamma < 0.0 || cfg.gamma > 0.5) {
    throw_config("class_imbalance: gamma must lie in [0, 0.5]");
  }
  const int n_c = m / kk;
  std::vector<double> p(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < n_c; ++j) {
    const int own = k * n_c + j;
    const int next = ((k + 1) % kk) * n_c + j;  // C_{K+1} = C_1
    p[static_cast<std::size_t>(own)] += (1.0 - cfg.gamma) / n_c;
    p[static_cast<std::size_t>(next)] += cfg.gamma / n_c;
  }
  if (!cfg.class_permutation.empty()) {
    if (cfg.class_permutation.size() != static_cast<std::size_t>(m)) {
      throw_config("class_imbalance: permutation size must equal M");
    }
    std::vector<double> q(p.size());
    for (int y = 0; y < m; ++y) {
      q[static_cast<std::size_t>(cfg.class_permutation[static_cast<std::size_t>(y)])] =
          p[static_cast<std::size_t>(y)];
    }
    p = std::move(q);
  }
  return p;
}

GeneratedCollection gen_class_imbalance(
    const ClassImbalanceConfig& cfg,
    const std::map<int, std::vector<Observation>>& pool) {
  if (cfg.source_sizes.size() != static_cast<std::size_t>(cfg.num_sources)) {
    throw_config("class_imbalance: need one size per source");
  }
  const Rng root(cfg.seed);
  std::vector<SourceDataset> sources(static_cast<std::size_t>(cfg.num_sources));
  std::vector<BiasSpec> specs;
  const std::vector<double> p_test(static_cast<std::size_t>(cfg.num_classes),
                                   1.0 / cfg.num_classes);
  for (int k = 0; k < cfg.num_sources; ++k) {
    const auto pk = class_probabilities(cfg, k);
    Rng rng = root.child(static_cast<std::uint64_t>(k));
    auto& src = sources[static_cast<std::size_t>(k)];
    src.source_index = k;
    src.observations.reserve(cfg.source_sizes[static_cast<std::size_t>(k)]);
    for (std::size_t j = 0; j < cfg.source_sizes[static_cast<std::size_t>(k)]; ++j) {
      const int y = static_cast<int>(draw_categorical(rng, pk));
      const auto it = pool.find(y);
      if (it == pool.end() || it->second.empty()) {
        throw_data("class_imbalance: empty pool for class " + std::to_string(y));
      }
      Observation obs = it->second[rng.below(it->second.size())];
      obs.label = y;
      src.observations.push_back(std::move(obs));
    }
    specs.push_back(BiasSpec::class_ratio(pk, p_test));
  }
  assign_ids(sources);
  DatasetCollection data(std::move(sources), cfg.num_classes);
  for (auto& spec : specs) spec = normalize_against(std::move(spec), data);
  return {std::move(data), std::move(specs)};
}

Bin hsv_bin(int l, const std::vector<double>& medians) {
  Bin bin;
  bin.lo.resize(3);
  bin.hi.resize(3);
  for (int c = 0; c < 3; ++c) {
    const int bit = (l >> (2 - c)) & 1;  // l = 4 b_H + 2 b_S + b_V
    bin.lo[static_cast<std::size_t>(c)] = bit ? medians[static_cast<std::size_t>(c)] : 0.0;
    bin.hi[static_cast<std::size_t>(c)] = bit ? 1.0 : medians[static_cast<std::size_t>(c)];
  }
  return bin;
}

HsvGenerated gen_hsv_bins(const HsvBinConfig& cfg) {
  constexpr int kBins = 8;
  if (cfg.population.size() < kBins) {
    throw_data("hsv_bins: population must contain at least 8 observations");
  }
  if (cfg.gamma_ramp <= 0.0) throw_config("hsv_bins: gamma_ramp must be > 0");
  if (cfg.source_sizes.size() != kBins) {
    throw_config("hsv_bins: need exactly 8 source sizes");
  }
  std::vector<double> medians(3);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> coord;
    coord.reserve(cfg.population.size());
    for (const auto& obs : cfg.population) {
      if (obs.embedding.size() != 3) {
        throw_data("hsv_bins: population observations need 3-dim embeddings");
      }
      coord.push_back(obs.embedding[static_cast<std::size_t>(c)]);
    }
    const double h = lower_median(coord);
    const auto above = std::count_if(coord.begin(), coord.end(),
                                     [&](double v) { return v > h; });
    const auto below = std::count_if(coord.begin(), coord.end(),
                                     [&](double v) { return v < h; });
    if (above == 0 || below == 0) {
      throw_data("hsv_bins: degenerate population, coordinate " +
                 std::to_string(c) + " does not split at its median");
    }
    medians[static_cast<std::size_t>(c)] = h;
  }

  std::vector<BiasSpec> specs;
  std::vector<Bin> bins;
  for (int l = 0; l < kBins; ++l) {
    Bin bin = hsv_bin(l, medians);
    specs.push_back(BiasSpec::box_ramp(bin.lo, bin.hi, cfg.gamma_ramp));
    bins.push_back(std::move(bin));
  }

  const Rng root(cfg.seed);
  std::vector<SourceDataset> sources(kBins);
  for (int k = 0; k < kBins; ++k) {
    // Cumulative sampling weights omega_k over the population.
    std::vector<double> cum(cfg.population.size());
    double total = 0.0;
    for (std::size_t i = 0; i < cfg.population.size(); ++i) {
      total += evaluate_bias(specs[static_cast<std::size_t>(k)], cfg.population[i]);
      cum[i] = total;
    }
    if (total <= 0.0) {
      throw_data("hsv_bins: bin " + std::to_string(k) +
                 " has zero sampling weight over the population");
    }
    Rng rng = root.child(static_cast<std::uint64_t>(k));
    auto& src = sources[static_cast<std::size_t>(k)];
    src.source_index = k;
    src.observations.reserve(cfg.source_sizes[static_cast<std::size_t>(k)]);
    for (std::size_t j = 0; j < cfg.source_sizes[static_cast<std::size_t>(k)]; ++j) {
      const double u = rng.uniform01() * total;
      const auto it = std::upper_bound(cum.begin(), cum.end(), u);
      const auto idx = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(it - cum.begin(),
                                   static_cast<std::ptrdiff_t>(cum.size()) - 1));
      Observation obs = cfg.population[idx];
      // Stratum records the first bin containing the embedding.
      for (int l = 0; l < kBins; ++l) {
        if (evaluate_bias(specs[static_cast<std::size_t>(l)], obs) == 1.0) {
          obs.stratum = l;
          break;
        }
      }
      src.observations.push_back(std::move(obs));
    }
  }
  assign_ids(sources);
  DatasetCollection data(std::move(sources), 0);
  return {std::move(data), std::move(specs), std::move(bins), std::move(medians)};
}

std::vector<std::size_t> long_tail_sizes(std::size_t total, int k, double alpha) {
  if (alpha <= 0.0 || alpha > 1.0) {
    throw_config("long_tail_sizes: alpha must lie in (0, 1]");
  }
  std::vector<double> w(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    w[static_cast<std::size_t>(i)] = std::pow(alpha, i);
    sum += w[static_cast<std::size_t>(i)];
  }
  // Largest-remainder rounding to hit the exact total.
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k));
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  for (int i = 0; i < k; ++i) {
    const double share = static_cast<double>(total) * w[static_cast<std::size_t>(i)] / sum;
    sizes[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::floor(share));
    assigned += sizes[static_cast<std::size_t>(i)];
    remainders.emplace_back(share - std::floor(share), i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t j = 0; assigned < total; ++j, ++assigned) {
    sizes[static_cast<std::size_t>(remainders[j % remainders.size()].second)] += 1;
  }
  return sizes;
}

std::vector<std::size_t> balanced_sizes(std::size_t total, int k) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), total / k);
  for (std::size_t i = 0; i < total % static_cast<std::size_t>(k); ++i) sizes[i] += 1;
  return sizes;
}

std::vector<double> power_law_proportions(const PowerLawConfig& cfg,
                                          const std::vector<int>& sigma) {
  const std::size_t k = cfg.base_proportions.size();
  if (cfg.gamma <= 0.0 || cfg.gamma > 1.0) {
    throw_config("power_law: gamma must lie in (0, 1]");
  }
  const double half = std::floor(static_cast<double>(k) / 2.0);
  std::vector<double> p(k);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = std::pow(cfg.gamma, -half / sigma[i]) * cfg.base_proportions[i];
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

DatasetCollection gen_power_law(
    const PowerLawConfig& cfg,
    const std::map<int, std::vector<Observation>>& pool) {
  const std::size_t k = cfg.base_proportions.size();
  Rng root(cfg.seed);

  std::vector<int> sigma = cfg.sigma;
  if (sigma.empty()) {
    sigma.resize(k);
    std::iota(sigma.begin(), sigma.end(), 1);
    Rng perm_rng = root.child(0);
    perm_rng.shuffle(sigma);
  }
  const auto p = power_law_proportions(cfg, sigma);

  // Remaining candidate indices per modality.
  std::vector<std::vector<std::size_t>> remaining(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto it = pool.find(static_cast<int>(i));
    if (it == pool.end() || it->second.empty()) {
      throw_data("power_law: empty pool for modality " + std::to_string(i));
    }
    remaining[i].resize(it->second.size());
    std::iota(remaining[i].begin(), remaining[i].end(), 0);
  }

  Rng rng = root.child(1);
  SourceDataset out;
  out.source_index = 0;
  auto min_remaining = [&] {
    std::size_t m = remaining[0].size();
    for (const auto& r : remaining) m = std::min(m, r.size());
    return m;
  };
  for (std::size_t m_samp = min_remaining(); m_samp > 0; m_samp = min_remaining()) {
    // Multinomial round: m_samp category draws from p.
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t j = 0; j < m_samp; ++j) counts[draw_categorical(rng, p)] += 1;
    for (std::size_t i = 0; i < k; ++i) {
      auto& cand = remaining[i];
      for (std::size_t j = 0; j < counts[i]; ++j) {
        // Random subset draw: swap a random candidate to the back and pop it.
        const std::size_t pick = rng.below(cand.size());
        std::swap(cand[pick], cand.back());
        Observation obs = pool.at(static_cast<int>(i))[cand.back()];
        cand.pop_back();
        obs.stratum = static_cast<int>(i);
        out.observations.push_back(std::move(obs));
      }
    }
  }
  if (out.observations.empty()) {
    throw_data("power_law: no observations sampled (a pool was empty)");
  }
  std::int64_t id = 0;
  for (auto& o : out.observations) o.id = id++;
  std::vector<SourceDataset> sources;
  sources.push_back(std::move(out));
  int max_label = -1;
  for (const auto& o : sources[0].observations) max_label = std::max(max_label, o.label);
  return DatasetCollection(std::move(sources), max_label + 1);
}

GeneratedCollection gen_two_point(const TwoPointConfig& cfg) {
  if (cfg.r1 <= 0.0 || cfg.r2 <= 0.0) {
    throw_config("two_point: R_k must be positive");
  }
  const Rng root(cfg.seed);
  const double r[2] = {cfg.r1, cfg.r2};
  const std::size_t n[2] = {cfg.n1, cfg.n2};
  std::vector<SourceDataset> sources(2);
  std::vector<BiasSpec> specs;
  for (int k = 0; k < 2; ++k) {
    Rng rng = root.child(static_cast<std::uint64_t>(k));
    auto& src = sources[static_cast<std::size_t>(k)];
    src.source_index = k;
    const double p1 = r[k] / (1.0 + r[k]);
    src.observations.reserve(n[k]);
    for (std::size_t j = 0; j < n[k]; ++j) {
      Observation obs;
      obs.stratum = rng.uniform01() < p1 ? 1 : 2;
      src.observations.push_back(obs);
    }
    // omega_k(1) = R_k, omega_k(2) = 1, rescaled so the larger value is 1.
    const double top = std::max(r[k], 1.0);
    specs.push_back(BiasSpec::tabular(
        TabularKey::Stratum, {{1, r[k] / top}, {2, 1.0 / top}}));
  }
  assign_ids(sources);
  DatasetCollection data(std::move(sources), 0);
  return {std::move(data), std::move(specs)};
}

}  // namespace debias
