#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "debias/rng.hpp"
#include "debias/solver.hpp"

namespace debias {

// Exact brute-force computations on small discrete spaces. Values here are
// raw (unrescaled) biasing values, so normalizers come out on the natural
// scale of the model, e.g. Omega = (1 + R) / 2 in the two-point model.
struct DiscreteProblem {
  std::vector<int> points;      // distinct atoms
  std::vector<double> p_test;   // exact masses, sum 1
  std::vector<double> omega;    // |Z| x K row-major, nonnegative
  std::vector<double> lambda;   // K source shares, sum 1

  std::size_t num_atoms() const { return points.size(); }
  std::size_t num_sources() const { return lambda.size(); }
  double omega_at(std::size_t z, std::size_t k) const {
    return omega[z * num_sources() + k];
  }
};

// Omega_k = sum_z omega_k(z) p_test(z).
std::vector<double> exact_omegas(const DiscreteProblem& prob);

// pbar(z) = sum_k lambda_k omega_k(z) p_test(z) / Omega_k.
std::vector<double> exact_pbar(const DiscreteProblem& prob);

// Solves the population normalizer system by minimizing the population
// objective with rows weighted by the exact pbar masses; returns W with
// W_K = 1. Requires a connected overlap structure.
std::vector<double> exact_solve(const DiscreteProblem& prob);

bool problem_connected(const DiscreteProblem& prob);

// Random problem with positive p_test, sparse omega support, connectivity
// enforced by rejection (rejection count reported through `rejections`).
DiscreteProblem random_connected_problem(Rng& rng, int max_atoms = 8,
                                         int max_sources = 4,
                                         int* rejections = nullptr);

// Monte-Carlo study of the Gini index of the debiasing weights in the
// two-point model over a grid of (R_1, R_2); reports, per cell, the mean and
// twice the standard deviation of the estimated-W Gini, and of its absolute
// difference from the exact-Omega Gini.
struct TwoPointStudyCell {
  double r1 = 0.0;
  double r2 = 0.0;
  double mean_gini = 0.0;
  double two_std_gini = 0.0;
  double mean_abs_diff = 0.0;
  double two_std_abs_diff = 0.0;
};

struct TwoPointStudyTable {
  std::vector<double> r_grid;
  std::vector<TwoPointStudyCell> cells;  // row-major over (r1, r2)

  const TwoPointStudyCell& cell(std::size_t i1, std::size_t i2) const {
    return cells[i1 * r_grid.size() + i2];
  }
};

TwoPointStudyTable run_two_point_study(std::span<const double> r_grid,
                                       std::size_t n1, std::size_t n2,
                                       int trials, std::uint64_t seed);

// Analytic threshold classifier on [0,1] with class-conditional densities
// f_+(x) = (1+alpha) x^alpha and f_-(x) = (1+beta)(1-x)^beta; the risk of
// threshold t is R(t) = p t^{1+alpha} + (1-p)(1-t)^{1+beta}.
struct ThresholdDemo {
  double alpha = 1.0;
  double beta = 1.0;
  double p = 0.5;
  double theta_star = 0.5;
  // Minimizer set [theta_lo, theta_hi]; degenerate except when the risk is
  // constant (alpha = beta = 0 at p = 1/2).
  double theta_lo = 0.5;
  double theta_hi = 0.5;

  double risk(double theta) const;
  double theta_for(double p_prime) const;
  // Excess risk of using the threshold tuned for p_prime on class
  // probability p.
  double excess(double p_prime) const;
};

ThresholdDemo threshold_demo(double alpha, double beta, double p);

// Tabulated closed forms for (alpha, beta) in {(0,0), (1/2,1/2), (1,1),
// (2,2)}; throws for other shapes.
double theta_star_closed(double alpha, double beta, double p);

// Bisection on the stationarity equation
// p (1+alpha) t^alpha = (1-p)(1+beta)(1-t)^beta.
double theta_star_bisect(double alpha, double beta, double p);

}  // namespace debias
