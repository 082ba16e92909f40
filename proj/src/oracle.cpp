#include "debias/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "debias/error.hpp"
#include "debias/generators.hpp"
#include "debias/weights.hpp"

namespace debias {

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return sum / count; }
  double two_std() const {
    const double m = mean();
    const double var = std::max(0.0, sum_sq / count - m * m);
    return 2.0 * std::sqrt(var);
  }
};

}  // namespace

std::vector<double> exact_omegas(const DiscreteProblem& prob) {
  std::vector<double> omegas(prob.num_sources(), 0.0);
  for (std::size_t k = 0; k < prob.num_sources(); ++k) {
    for (std::size_t z = 0; z < prob.num_atoms(); ++z) {
      omegas[k] += prob.omega_at(z, k) * prob.p_test[z];
    }
  }
  return omegas;
}

std::vector<double> exact_pbar(const DiscreteProblem& prob) {
  const auto omegas = exact_omegas(prob);
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    if (!(omegas[k] > 0.0)) {
      throw_data("exact_pbar: source " + std::to_string(k) +
                 " has a zero normalizer");
    }
  }
  std::vector<double> pbar(prob.num_atoms(), 0.0);
  for (std::size_t z = 0; z < prob.num_atoms(); ++z) {
    for (std::size_t k = 0; k < prob.num_sources(); ++k) {
      pbar[z] += prob.lambda[k] * prob.omega_at(z, k) * prob.p_test[z] / omegas[k];
    }
  }
  return pbar;
}

bool problem_connected(const DiscreteProblem& prob) {
  const std::size_t k = prob.num_sources();
  std::vector<std::vector<bool>> adj(k, std::vector<bool>(k, false));
  for (std::size_t z = 0; z < prob.num_atoms(); ++z) {
    if (!(prob.p_test[z] > 0.0)) continue;
    for (std::size_t a = 0; a < k; ++a) {
      if (prob.omega_at(z, a) <= 0.0) continue;
      for (std::size_t b = 0; b < k; ++b) {
        if (prob.omega_at(z, b) > 0.0) adj[a][b] = true;
      }
    }
  }
  std::vector<bool> seen(k, false);
  std::vector<std::size_t> stack = {0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t a = stack.back();
    stack.pop_back();
    for (std::size_t b = 0; b < k; ++b) {
      if (adj[a][b] && !seen[b]) {
        seen[b] = true;
        stack.push_back(b);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
}

std::vector<double> exact_solve(const DiscreteProblem& prob) {
  if (!problem_connected(prob)) {
    throw_numerical("exact_solve: overlap graph of the problem is not "
                    "connected");
  }
  const auto pbar = exact_pbar(prob);
  WeightedRows rows;
  rows.cols = prob.num_sources();
  for (std::size_t z = 0; z < prob.num_atoms(); ++z) {
    if (pbar[z] <= 0.0) continue;
    for (std::size_t k = 0; k < rows.cols; ++k) {
      rows.values.push_back(prob.omega_at(z, k));
    }
    rows.weights.push_back(pbar[z]);
  }
  SolverConfig cfg = SolverConfig::full_gradient(
      /*learning_rate=*/1.0, /*momentum=*/0.0, /*grad_tol=*/1e-12,
      /*max_iters=*/2000000);
  cfg.trace_every = 0;
  const SolverResult res = solve_weighted(rows, prob.lambda, cfg);
  return res.w_hat;
}

DiscreteProblem random_connected_problem(Rng& rng, int max_atoms,
                                         int max_sources, int* rejections) {
  int rejected = 0;
  for (;;) {
    DiscreteProblem prob;
    const std::size_t atoms = 2 + rng.below(static_cast<std::uint64_t>(max_atoms - 1));
    const std::size_t sources = 1 + rng.below(static_cast<std::uint64_t>(max_sources));
    prob.points.resize(atoms);
    for (std::size_t z = 0; z < atoms; ++z) prob.points[z] = static_cast<int>(z);
    prob.p_test.resize(atoms);
    double mass = 0.0;
    for (auto& m : prob.p_test) {
      m = -std::log(1.0 - rng.uniform01());
      mass += m;
    }
    for (auto& m : prob.p_test) m /= mass;
    prob.lambda.resize(sources);
    double lam = 0.0;
    for (auto& l : prob.lambda) {
      l = 0.2 + rng.uniform01();
      lam += l;
    }
    for (auto& l : prob.lambda) l /= lam;
    prob.omega.resize(atoms * sources);
    for (auto& w : prob.omega) {
      w = rng.uniform01() < 0.25 ? 0.0 : 0.05 + 0.95 * rng.uniform01();
    }
    bool valid = true;
    for (std::size_t z = 0; z < atoms && valid; ++z) {
      bool any = false;
      for (std::size_t k = 0; k < sources; ++k) any |= prob.omega_at(z, k) > 0.0;
      valid = any;  // support cover
    }
    for (std::size_t k = 0; k < sources && valid; ++k) {
      bool any = false;
      for (std::size_t z = 0; z < atoms; ++z) any |= prob.omega_at(z, k) > 0.0;
      valid = any;  // Omega_k > 0
    }
    if (valid && problem_connected(prob)) {
      if (rejections) *rejections = rejected;
      return prob;
    }
    ++rejected;
  }
}

namespace {

// Reference estimation procedure of the original study: raw (unrescaled)
// omega values, u initialized from a standard normal, and a fixed budget of
// stock-default ADAM minibatch steps. In the weakly overlapping cells the
// reported Gini levels come from this procedure's travel limits, not from
// the converged empirical minimizer, so the study keeps it verbatim.
std::vector<double> adam_normalizers(const WeightedRows& rows,
                                     std::span<const double> lambda,
                                     std::uint64_t init_seed,
                                     std::uint64_t batch_seed) {
  constexpr double kLr = 1e-3;
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  constexpr int kIters = 4000;
  constexpr int kBatch = 100;
  const std::size_t k = rows.cols;
  const std::size_t n = rows.rows();

  Rng init_rng(init_seed);
  std::vector<double> u(k);
  for (auto& x : u) x = init_rng.normal();

  Rng batch_rng(batch_seed);
  std::vector<double> m(k, 0.0), v(k, 0.0), g(k), e(k);
  double b1t = 1.0, b2t = 1.0;
  for (int t = 1; t <= kIters; ++t) {
    for (std::size_t l = 0; l < k; ++l) g[l] = -lambda[l];
    for (int b = 0; b < kBatch; ++b) {
      const auto row = rows.row(batch_rng.below(n));
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) {
        e[l] = std::exp(u[l]) * row[l];
        s += e[l];
      }
      for (std::size_t l = 0; l < k; ++l) g[l] += e[l] / s / kBatch;
    }
    b1t *= kBeta1;
    b2t *= kBeta2;
    for (std::size_t l = 0; l < k; ++l) {
      m[l] = kBeta1 * m[l] + (1.0 - kBeta1) * g[l];
      v[l] = kBeta2 * v[l] + (1.0 - kBeta2) * g[l] * g[l];
      u[l] -= kLr * (m[l] / (1.0 - b1t)) / (std::sqrt(v[l] / (1.0 - b2t)) + kEps);
    }
  }
  std::vector<double> w(k);
  for (std::size_t l = 0; l < k; ++l) w[l] = lambda[l] * std::exp(-u[l]);
  return w;
}

}  // namespace

TwoPointStudyTable run_two_point_study(std::span<const double> r_grid,
                                       std::size_t n1, std::size_t n2,
                                       int trials, std::uint64_t seed) {
  if (trials < 1) throw_config("two_point_study: trials must be >= 1");
  TwoPointStudyTable table;
  table.r_grid.assign(r_grid.begin(), r_grid.end());
  const Rng root(seed);

  std::size_t cell_index = 0;
  for (double r1 : r_grid) {
    for (double r2 : r_grid) {
      const Rng cell_rng = root.child(cell_index);
      const double raw[2] = {r1, r2};
      const std::vector<double> omega_exact{(1.0 + r1) / 2.0, (1.0 + r2) / 2.0};
      Moments est, diff;
      for (int t = 0; t < trials; ++t) {
        Rng trial_rng = cell_rng.child(static_cast<std::uint64_t>(t));
        TwoPointConfig cfg;
        cfg.r1 = r1;
        cfg.r2 = r2;
        cfg.n1 = n1;
        cfg.n2 = n2;
        cfg.seed = trial_rng.next_u64();
        const auto gen = gen_two_point(cfg);
        const auto& lambda = gen.data.lambdas();

        // Raw omega rows: omega_k(1) = R_k, omega_k(2) = 1.
        WeightedRows rows;
        rows.cols = 2;
        for (const auto& src : gen.data.sources()) {
          for (const auto& obs : src.observations) {
            for (int l = 0; l < 2; ++l) {
              rows.values.push_back(obs.stratum == 1 ? raw[l] : 1.0);
            }
          }
        }
        const std::size_t n = rows.values.size() / 2;
        rows.weights.assign(n, 1.0 / static_cast<double>(n));

        const auto w_hat = adam_normalizers(rows, lambda, trial_rng.next_u64(),
                                            trial_rng.next_u64());
        const auto pi_est = compute_pi_masses(rows, lambda, w_hat);
        const auto pi_true = compute_pi_masses(rows, lambda, omega_exact);
        const double g_est = gini(pi_est);
        const double g_true = gini(pi_true);
        est.add(g_est);
        diff.add(std::abs(g_est - g_true));
      }
      TwoPointStudyCell cell;
      cell.r1 = r1;
      cell.r2 = r2;
      cell.mean_gini = est.mean();
      cell.two_std_gini = est.two_std();
      cell.mean_abs_diff = diff.mean();
      cell.two_std_abs_diff = diff.two_std();
      table.cells.push_back(cell);
      ++cell_index;
    }
  }
  return table;
}

double ThresholdDemo::risk(double theta) const {
  return p * std::pow(theta, 1.0 + alpha) +
         (1.0 - p) * std::pow(1.0 - theta, 1.0 + beta);
}

double ThresholdDemo::theta_for(double p_prime) const {
  const bool tabulated = (alpha == beta) && (alpha == 0.0 || alpha == 0.5 ||
                                             alpha == 1.0 || alpha == 2.0);
  return tabulated ? theta_star_closed(alpha, beta, p_prime)
                   : theta_star_bisect(alpha, beta, p_prime);
}

double ThresholdDemo::excess(double p_prime) const {
  return risk(theta_for(p_prime)) - risk(theta_star);
}

double theta_star_closed(double alpha, double beta, double p) {
  if (alpha == 0.0 && beta == 0.0) {
    if (p < 0.5) return 1.0;
    if (p > 0.5) return 0.0;
    return 0.5;
  }
  if (alpha == 0.5 && beta == 0.5) {
    const double q = 1.0 - p;
    return q * q / (p * p + q * q);
  }
  if (alpha == 1.0 && beta == 1.0) return 1.0 - p;
  if (alpha == 2.0 && beta == 2.0) {
    const double sp = std::sqrt(p);
    const double sq = std::sqrt(1.0 - p);
    return sq / (sp + sq);
  }
  throw_config("theta_star_closed: no tabulated closed form for these shape "
               "parameters");
}

double theta_star_bisect(double alpha, double beta, double p) {
  if (alpha < 0.0 || beta < 0.0) {
    throw_config("theta_star_bisect: shape parameters must be >= 0");
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw_config("theta_star_bisect: p must lie in (0, 1)");
  }
  auto g = [&](double t) {
    const double lhs = p * (1.0 + alpha) * (alpha == 0.0 ? 1.0 : std::pow(t, alpha));
    const double rhs = (1.0 - p) * (1.0 + beta) *
                       (beta == 0.0 ? 1.0 : std::pow(1.0 - t, beta));
    return lhs - rhs;
  };
  if (alpha == 0.0 && beta == 0.0) {
    // Linear risk: minimum sits at a boundary (or everywhere when p = 1/2).
    if (p < 0.5) return 1.0;
    if (p > 0.5) return 0.0;
    return 0.5;
  }
  if (g(0.0) >= 0.0) return 0.0;
  if (g(1.0) <= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

ThresholdDemo threshold_demo(double alpha, double beta, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw_config("threshold_demo: p must lie in (0, 1)");
  }
  ThresholdDemo demo;
  demo.alpha = alpha;
  demo.beta = beta;
  demo.p = p;
  const bool tabulated = (alpha == beta) && (alpha == 0.0 || alpha == 0.5 ||
                                             alpha == 1.0 || alpha == 2.0);
  demo.theta_star = tabulated ? theta_star_closed(alpha, beta, p)
                              : theta_star_bisect(alpha, beta, p);
  if (alpha == 0.0 && beta == 0.0 && p == 0.5) {
    demo.theta_lo = 0.0;  // constant risk: every threshold is optimal
    demo.theta_hi = 1.0;
  } else {
    demo.theta_lo = demo.theta_star;
    demo.theta_hi = demo.theta_star;
  }
  return demo;
}

}  // namespace debias
