#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "debias/bias_spec.hpp"

namespace debias {

// Normalizer estimation: minimize over u in R^K the convex objective
//   D(u) = sum_r w_r * log( sum_l e^{u_l} omega_l(z_r) ) - sum_l lambda_l u_l
// with row weights w_r summing to 1 (1/n for a sample, exact masses for a
// population problem). The substitution u_k = log(lambda_k / W_k) turns the
// normalizer system into this minimization; W_hat_k = lambda_k e^{-u_k}.

// Rows of omega values with probability weights; the shared core consumed by
// both the sample solver and the exact population solver.
struct WeightedRows {
  std::size_t cols = 0;
  std::vector<double> values;   // rows * cols, row-major
  std::vector<double> weights;  // sums to 1

  std::size_t rows() const { return weights.size(); }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
};

WeightedRows uniform_rows(const OmegaMatrix& omega);
// Groups bit-identical rows; weights become multiplicities / n. Exact
// regrouping only, so full-gradient results match the ungrouped sum up to
// summation order.
WeightedRows dedup_rows(const OmegaMatrix& omega);

double objective(const WeightedRows& rows, std::span<const double> lambda,
                 std::span<const double> u, int threads = 1);
std::vector<double> gradient(const WeightedRows& rows,
                             std::span<const double> lambda,
                             std::span<const double> u, int threads = 1);
// Row-major K x K symmetric PSD matrix with the 1-vector in its kernel.
std::vector<double> hessian(const WeightedRows& rows,
                            std::span<const double> lambda,
                            std::span<const double> u, int threads = 1);

double objective(const OmegaMatrix& omega, std::span<const double> lambda,
                 std::span<const double> u, int threads = 1);
std::vector<double> gradient(const OmegaMatrix& omega,
                             std::span<const double> lambda,
                             std::span<const double> u, int threads = 1);
std::vector<double> hessian(const OmegaMatrix& omega,
                            std::span<const double> lambda,
                            std::span<const double> u, int threads = 1);

enum class SolverMode { FullGradient, Minibatch };
enum class SolverInit { Zero, SeededNormal };

struct SolverConfig {
  SolverMode mode = SolverMode::Minibatch;
  int max_iters = 4000;
  int batch_size = 100;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double grad_tol = 1e-8;
  SolverInit init = SolverInit::Zero;
  std::uint64_t init_seed = 0;
  std::uint64_t batch_seed = 0;
  int threads = 1;
  int trace_every = 0;  // 0: every iter (full gradient) / max_iters/40 (minibatch)

  static SolverConfig full_gradient(double learning_rate = 0.5,
                                    double momentum = 0.0,
                                    double grad_tol = 1e-10,
                                    int max_iters = 200000);
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double grad_inf_norm = 0.0;
};

struct SolverResult {
  std::vector<double> u_hat;  // shifted so W_hat_K = 1
  std::vector<double> w_hat;  // lambda_k e^{-u_k}, W_hat_K = 1 exactly
  double final_grad_norm = 0.0;
  int iterations = 0;
  std::vector<TraceEntry> trace;
  bool connected = true;
  std::vector<std::string> warnings;
};

SolverResult solve(const OmegaMatrix& omega, std::span<const double> lambda,
                   const SolverConfig& cfg);
// Population / pre-weighted variant; no source structure, so no overlap-graph
// warning is attached here.
SolverResult solve_weighted(const WeightedRows& rows,
                            std::span<const double> lambda,
                            const SolverConfig& cfg);

// Empirical overlap diagnostics: the directed graph G_n with edge k -> l iff
// some observation of source l has omega_k > 0, the positive lower bound
// epsilon_hat, pairwise support-overlap fractions kappa_hat, the
// second-smallest Hessian eigenvalue at u_hat, and the derived box bound
// U = log(2K/eps) * sum_{t=1}^{K-1} 2^t (lambda_min kappa_min eps)^{-t}.
struct OverlapDiagnostics {
  std::vector<std::vector<bool>> graph;
  bool connected = false;
  double epsilon_hat = 0.0;
  std::vector<std::vector<double>> kappa_hat;
  double sigma2 = 0.0;
  double u_bound = 0.0;
  std::vector<std::string> warnings;
  // Strongly connected components when not connected (for error messages).
  std::vector<std::vector<int>> components;
};

OverlapDiagnostics diagnose(const OmegaMatrix& omega,
                            std::span<const double> lambda,
                            std::span<const double> u_hat, int threads = 1);

// Ascending eigenvalues of a symmetric matrix (row-major k x k) by cyclic
// Jacobi rotations; sized for the small K x K diagnostics here.
std::vector<double> symmetric_eigenvalues(std::vector<double> matrix,
                                          std::size_t k);

}  // namespace debias
