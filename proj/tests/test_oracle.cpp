#include <doctest.h>

#include <cmath>
#include <vector>

#include "debias/error.hpp"
#include "debias/oracle.hpp"
#include "debias/weights.hpp"

using namespace debias;

namespace {

DiscreteProblem two_point_problem(double r1, double r2, double lambda1) {
  DiscreteProblem prob;
  prob.points = {1, 2};
  prob.p_test = {0.5, 0.5};
  prob.omega = {r1, r2,   // z = 1
                1.0, 1.0};  // z = 2
  prob.lambda = {lambda1, 1.0 - lambda1};
  return prob;
}

}  // namespace

TEST_CASE("exact omegas: two-point closed form (1 + R) / 2") {
  const auto prob = two_point_problem(1.0, 10.0, 0.5);
  const auto omegas = exact_omegas(prob);
  CHECK(omegas[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(omegas[1] == doctest::Approx(5.5).epsilon(1e-15));

  const auto zero = exact_omegas(two_point_problem(0.0, 1.0, 0.5));
  CHECK(zero[0] == doctest::Approx(0.5).epsilon(1e-15));

  DiscreteProblem unit;
  unit.points = {0, 1, 2};
  unit.p_test = {0.2, 0.3, 0.5};
  unit.omega = {1, 1, 1, 1, 1, 1};
  unit.lambda = {0.4, 0.6};
  for (double w : exact_omegas(unit)) CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("exact pbar: mixture of renormalized sources") {
  const auto prob = two_point_problem(1.0, 10.0, 0.5);
  const auto pbar = exact_pbar(prob);
  CHECK(pbar[0] == doctest::Approx(0.5 * 0.5 + 0.5 * (10.0 / 11.0)).epsilon(1e-15));
  CHECK(pbar[0] + pbar[1] == doctest::Approx(1.0).epsilon(1e-12));

  DiscreteProblem unbiased = two_point_problem(1.0, 1.0, 0.3);
  const auto flat = exact_pbar(unbiased);
  CHECK(flat[0] == doctest::Approx(0.5));
  CHECK(flat[1] == doctest::Approx(0.5));

  DiscreteProblem single;
  single.points = {0, 1};
  single.p_test = {0.25, 0.75};
  single.omega = {1.0, 0.5};
  single.lambda = {1.0};
  const auto p1 = exact_pbar(single);
  // K = 1: pbar equals the single biased source p_1
  const double norm = 0.25 * 1.0 + 0.75 * 0.5;
  CHECK(p1[0] == doctest::Approx(0.25 / norm).epsilon(1e-12));
}

TEST_CASE("exact solve: two-point ratios and symmetric cases") {
  const auto w = exact_solve(two_point_problem(1.0, 10.0, 0.5));
  CHECK(w[1] == 1.0);
  CHECK(w[0] == doctest::Approx(1.0 / 5.5).epsilon(1e-8));

  const auto sym = exact_solve(two_point_problem(4.0, 4.0, 0.5));
  CHECK(sym[0] == doctest::Approx(sym[1]).epsilon(1e-10));

  DiscreteProblem single;
  single.points = {0, 1};
  single.p_test = {0.5, 0.5};
  single.omega = {1.0, 0.25};
  single.lambda = {1.0};
  const auto w1 = exact_solve(single);
  REQUIRE(w1.size() == 1);
  CHECK(w1[0] == 1.0);
}

TEST_CASE("exact solve recovers omega ratios on random connected problems") {
  Rng rng(1234);
  int total_rejections = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int rej = 0;
    const auto prob = random_connected_problem(rng, 8, 4, &rej);
    total_rejections += rej;
    const auto w = exact_solve(prob);
    const auto omegas = exact_omegas(prob);
    const std::size_t k = prob.num_sources();
    for (std::size_t l = 0; l < k; ++l) {
      const double expected = omegas[l] / omegas[k - 1];
      CHECK(std::abs(w[l] - expected) / expected < 1e-6);
    }

    // inversion identity: the debiased masses reproduce p_test
    WeightedRows rows;
    rows.cols = k;
    const auto pbar = exact_pbar(prob);
    for (std::size_t z = 0; z < prob.num_atoms(); ++z) {
      for (std::size_t l = 0; l < k; ++l) {
        rows.values.push_back(prob.omega_at(z, l));
      }
      rows.weights.push_back(pbar[z]);
    }
    const auto masses = compute_pi_masses(rows, prob.lambda, w);
    for (std::size_t z = 0; z < prob.num_atoms(); ++z) {
      CHECK(std::abs(masses[z] - prob.p_test[z]) < 1e-8);
    }
  }
  CHECK(total_rejections < 1000);  // rejection sampling stays reasonable
}

TEST_CASE("exact solve refuses disconnected problems") {
  DiscreteProblem prob;
  prob.points = {0, 1};
  prob.p_test = {0.5, 0.5};
  prob.omega = {1.0, 0.0,   // source 0 lives on atom 0 only
                0.0, 1.0};  // source 1 on atom 1 only
  prob.lambda = {0.5, 0.5};
  CHECK_FALSE(problem_connected(prob));
  CHECK_THROWS_AS(exact_solve(prob), Error);
}

TEST_CASE("two point study: smoke cells") {
  const std::vector<double> grid{1.0, 10.0};
  const auto table = run_two_point_study(grid, 100, 100, 20, 99);
  REQUIRE(table.cells.size() == 4);
  // (1,1): uniform weights in every trial
  CHECK(table.cell(0, 0).mean_gini == 0.0);
  CHECK(table.cell(0, 0).two_std_gini == 0.0);
  CHECK(table.cell(0, 0).mean_abs_diff == 0.0);
  // (1,10): near the reference level
  CHECK(table.cell(0, 1).mean_gini == doctest::Approx(0.21).epsilon(0.25));
  // grid recorded row-major
  CHECK(table.cell(1, 0).r1 == 10.0);
  CHECK(table.cell(1, 0).r2 == 1.0);
}

TEST_CASE("threshold demo: closed forms against the tabulated values") {
  // alpha = beta = 1: theta* = 1 - p
  CHECK(threshold_demo(1, 1, 0.3).theta_star == doctest::Approx(0.7).epsilon(1e-15));
  // alpha = beta = 2 at p = 1/2: symmetric minimum
  CHECK(threshold_demo(2, 2, 0.5).theta_star == doctest::Approx(0.5).epsilon(1e-15));
  // alpha = beta = 1/2
  const double p = 0.3;
  const double q = 1.0 - p;
  CHECK(threshold_demo(0.5, 0.5, p).theta_star ==
        doctest::Approx(q * q / (p * p + q * q)).epsilon(1e-15));
  // alpha = beta = 0 at p = 1/2: the whole interval minimizes
  const auto flat = threshold_demo(0, 0, 0.5);
  CHECK(flat.theta_lo == 0.0);
  CHECK(flat.theta_hi == 1.0);
  // tabulated set is exactly these four pairs
  CHECK_THROWS_AS(theta_star_closed(1.5, 1.5, 0.5), Error);
}

TEST_CASE("threshold demo: bisection agrees with closed forms") {
  for (double p : {0.1, 0.25, 0.5, 0.62, 0.9}) {
    for (double shape : {0.5, 1.0, 2.0}) {
      const double closed = theta_star_closed(shape, shape, p);
      const double bisect = theta_star_bisect(shape, shape, p);
      CHECK(bisect == doctest::Approx(closed).epsilon(1e-10));
      // stationarity residual
      const double lhs = p * (1 + shape) * std::pow(bisect, shape);
      const double rhs = (1 - p) * (1 + shape) * std::pow(1 - bisect, shape);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("threshold demo: grid-minimization oracle and zero self-excess") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const double alpha = 2.5 * rng.uniform01();
    const double beta = 2.5 * rng.uniform01();
    const double p = 0.05 + 0.9 * rng.uniform01();
    const auto demo = threshold_demo(alpha, beta, p);
    CHECK(demo.theta_star >= 0.0);
    CHECK(demo.theta_star <= 1.0);
    // the returned threshold is a global minimizer up to grid resolution
    double grid_best = 1e300;
    for (int i = 0; i <= 20000; ++i) {
      grid_best = std::min(grid_best, demo.risk(i / 20000.0));
    }
    CHECK(demo.risk(demo.theta_star) <= grid_best + 1e-7);
    CHECK(demo.excess(p) == 0.0);
    CHECK(demo.excess(p * 0.5) >= -1e-12);
  }
}
