#include "debias/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <string>

#include "debias/detail/reduce.hpp"
#include "debias/error.hpp"
#include "debias/rng.hpp"

namespace debias {

namespace {

constexpr double kZeroOmega = 1e-300;
constexpr double kMonotoneTol = 1e-9;
constexpr int kDivergeWindow = 10;
// Overshooting this far above the starting objective means the step size is
// unusable; fixed-step descent can also diverge by alternation, which the
// consecutive-increase rule alone cannot see.
constexpr double kExplosionMargin = 50.0;

void check_config(const SolverConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) {
    throw_config("solver: learning rate must be positive");
  }
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw_config("solver: momentum must lie in [0, 1)");
  }
  if (cfg.batch_size < 1) throw_config("solver: batch size must be >= 1");
}

void check_shapes(const WeightedRows& rows, std::span<const double> lambda,
                  std::span<const double> u) {
  if (lambda.size() != rows.cols || u.size() != rows.cols) {
    throw_data("solver: lambda/u size does not match K");
  }
}

// log(sum_l e^{u_l} w_l) for one row, max-shifted over the positive entries.
// Returns the log value and fills q with the row softmax e^{u_l} w_l / sum.
double row_logsum(std::span<const double> w, std::span<const double> u,
                  double* q) {
  double u_max = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (w[l] > kZeroOmega && u[l] > u_max) u_max = u[l];
  }
  if (u_max == -std::numeric_limits<double>::infinity()) {
    throw_data("solver: row with all-zero omega values");
  }
  double s = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    const double e = w[l] > kZeroOmega ? std::exp(u[l] - u_max) * w[l] : 0.0;
    q[l] = e;
    s += e;
  }
  for (std::size_t l = 0; l < w.size(); ++l) q[l] /= s;
  return u_max + std::log(s);
}

struct ObjGrad {
  double obj = 0.0;
  std::vector<double> grad;
};

ObjGrad eval_obj_grad(const WeightedRows& rows, std::span<const double> lambda,
                      std::span<const double> u, int threads) {
  check_shapes(rows, lambda, u);
  const std::size_t k = rows.cols;
  auto leaf = [&](std::size_t lo, std::size_t hi) {
    ObjGrad acc;
    acc.grad.assign(k, 0.0);
    std::vector<double> q(k);
    for (std::size_t r = lo; r < hi; ++r) {
      const double w = rows.weights[r];
      const double ls = row_logsum(rows.row(r), u, q.data());
      acc.obj += w * ls;
      for (std::size_t l = 0; l < k; ++l) acc.grad[l] += w * q[l];
    }
    return acc;
  };
  auto join = [](ObjGrad a, ObjGrad b) {
    a.obj += b.obj;
    for (std::size_t l = 0; l < a.grad.size(); ++l) a.grad[l] += b.grad[l];
    return a;
  };
  ObjGrad total = detail::pairwise_reduce<ObjGrad>(
      0, rows.rows(), leaf, join, detail::async_depth_for_threads(threads));
  for (std::size_t l = 0; l < k; ++l) {
    total.obj -= lambda[l] * u[l];
    total.grad[l] -= lambda[l];
  }
  return total;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// u -> u + c so that W_K = lambda_K e^{-u_K} = 1; W_K is then pinned exactly.
void finalize_result(SolverResult& res, std::span<const double> lambda) {
  const std::size_t k = lambda.size();
  const double shift = std::log(lambda[k - 1]) - res.u_hat[k - 1];
  for (auto& ui : res.u_hat) ui += shift;
  res.w_hat.resize(k);
  for (std::size_t l = 0; l < k; ++l) {
    res.w_hat[l] = lambda[l] * std::exp(-res.u_hat[l]);
  }
  res.w_hat[k - 1] = 1.0;
}

std::vector<double> initial_point(std::size_t k, const SolverConfig& cfg) {
  std::vector<double> u(k, 0.0);
  if (cfg.init == SolverInit::SeededNormal) {
    Rng rng(cfg.init_seed);
    for (auto& ui : u) ui = rng.normal();
  }
  return u;
}

SolverResult run_full_gradient(const WeightedRows& rows,
                               std::span<const double> lambda,
                               const SolverConfig& cfg) {
  const std::size_t k = rows.cols;
  SolverResult res;
  res.u_hat = initial_point(k, cfg);
  std::vector<double> velocity(k, 0.0);

  ObjGrad cur = eval_obj_grad(rows, lambda, res.u_hat, cfg.threads);
  res.trace.push_back({0, cur.obj, inf_norm(cur.grad)});
  const double initial_obj = cur.obj;
  const double explosion =
      initial_obj + kExplosionMargin * (1.0 + std::abs(initial_obj));
  int rising = 0;
  int iter = 0;
  while (iter < cfg.max_iters && inf_norm(cur.grad) > cfg.grad_tol) {
    for (std::size_t l = 0; l < k; ++l) {
      velocity[l] = cfg.momentum * velocity[l] + cfg.learning_rate * cur.grad[l];
      res.u_hat[l] -= velocity[l];
    }
    ++iter;
    const double prev_obj = cur.obj;
    cur = eval_obj_grad(rows, lambda, res.u_hat, cfg.threads);
    res.trace.push_back({iter, cur.obj, inf_norm(cur.grad)});
    if (!std::isfinite(cur.obj) || cur.obj > explosion) {
      throw_numerical("solver: objective exploded after " +
                      std::to_string(iter) +
                      " full-gradient steps (diverged; reduce the learning "
                      "rate)");
    }
    if (cur.obj > prev_obj + kMonotoneTol) {
      if (++rising >= kDivergeWindow) {
        throw_numerical("solver: objective increased for " +
                        std::to_string(kDivergeWindow) +
                        " consecutive full-gradient steps (diverged; reduce "
                        "the learning rate)");
      }
    } else {
      rising = 0;
    }
  }
  res.iterations = iter;
  res.final_grad_norm = inf_norm(cur.grad);
  finalize_result(res, lambda);
  return res;
}

SolverResult run_minibatch(const OmegaMatrix& omega,
                           std::span<const double> lambda,
                           const SolverConfig& cfg) {
  const std::size_t k = omega.cols();
  const std::size_t n = omega.rows();
  if (static_cast<std::size_t>(cfg.batch_size) > n) {
    throw_config("solver: batch size exceeds the number of observations");
  }
  const WeightedRows full = uniform_rows(omega);
  const int trace_every =
      cfg.trace_every > 0 ? cfg.trace_every : std::max(1, cfg.max_iters / 40);

  SolverResult res;
  res.u_hat = initial_point(k, cfg);
  std::vector<double> velocity(k, 0.0);
  std::vector<double> grad(k);
  std::vector<double> q(k);
  Rng batch_rng = Rng(cfg.batch_seed).child(1);

  // Stochastic steps hover around the optimum, so the returned point is the
  // best traced iterate by full-gradient norm, not the last one.
  std::vector<double> best_u = res.u_hat;
  double best_norm = std::numeric_limits<double>::infinity();
  auto record = [&](int iter) {
    ObjGrad og = eval_obj_grad(full, lambda, res.u_hat, cfg.threads);
    const double norm = inf_norm(og.grad);
    res.trace.push_back({iter, og.obj, norm});
    if (norm < best_norm) {
      best_norm = norm;
      best_u = res.u_hat;
    }
    return norm;
  };

  record(0);
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    for (std::size_t l = 0; l < k; ++l) grad[l] = -lambda[l];
    for (int b = 0; b < cfg.batch_size; ++b) {
      const std::size_t r = batch_rng.below(n);
      row_logsum(omega.row(r), res.u_hat, q.data());
      for (std::size_t l = 0; l < k; ++l) grad[l] += q[l] / cfg.batch_size;
    }
    for (std::size_t l = 0; l < k; ++l) {
      velocity[l] = cfg.momentum * velocity[l] + cfg.learning_rate * grad[l];
      res.u_hat[l] -= velocity[l];
    }
    if ((iter + 1) % trace_every == 0) {
      if (record(iter + 1) <= cfg.grad_tol) {
        ++iter;
        break;
      }
    }
  }
  if (res.trace.back().iteration != iter) record(iter);
  res.iterations = iter;
  res.u_hat = best_u;
  res.final_grad_norm = best_norm;
  finalize_result(res, lambda);
  return res;
}

std::vector<std::vector<bool>> support_graph(const OmegaMatrix& omega) {
  const std::size_t k = omega.cols();
  std::vector<std::vector<bool>> graph(k, std::vector<bool>(k, false));
  for (std::size_t r = 0; r < omega.rows(); ++r) {
    const auto l = static_cast<std::size_t>(omega.location(r).first);
    for (std::size_t j = 0; j < k; ++j) {
      if (omega.at(r, j) > 0.0) graph[j][l] = true;
    }
  }
  return graph;
}

std::vector<std::vector<int>> strong_components(
    const std::vector<std::vector<bool>>& graph) {
  const std::size_t k = graph.size();
  // Transitive closure is plenty for K sources.
  std::vector<std::vector<bool>> reach = graph;
  for (std::size_t i = 0; i < k; ++i) reach[i][i] = true;
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t i = 0; i < k; ++i) {
      if (!reach[i][m]) continue;
      for (std::size_t j = 0; j < k; ++j) {
        if (reach[m][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<int> comp(k, -1);
  std::vector<std::vector<int>> components;
  for (std::size_t i = 0; i < k; ++i) {
    if (comp[i] >= 0) continue;
    components.emplace_back();
    for (std::size_t j = 0; j < k; ++j) {
      if (comp[j] < 0 && reach[i][j] && reach[j][i]) {
        comp[j] = static_cast<int>(components.size()) - 1;
        components.back().push_back(static_cast<int>(j));
      }
    }
  }
  return components;
}

}  // namespace

WeightedRows uniform_rows(const OmegaMatrix& omega) {
  WeightedRows rows;
  rows.cols = omega.cols();
  rows.values = omega.values();
  rows.weights.assign(omega.rows(),
                      1.0 / static_cast<double>(omega.rows()));
  return rows;
}

WeightedRows dedup_rows(const OmegaMatrix& omega) {
  const std::size_t k = omega.cols();
  std::map<std::vector<double>, std::size_t> counts;
  for (std::size_t r = 0; r < omega.rows(); ++r) {
    const auto row = omega.row(r);
    counts[std::vector<double>(row.begin(), row.end())] += 1;
  }
  WeightedRows rows;
  rows.cols = k;
  rows.values.reserve(counts.size() * k);
  rows.weights.reserve(counts.size());
  for (const auto& [row, c] : counts) {
    rows.values.insert(rows.values.end(), row.begin(), row.end());
    rows.weights.push_back(static_cast<double>(c) /
                           static_cast<double>(omega.rows()));
  }
  return rows;
}

double objective(const WeightedRows& rows, std::span<const double> lambda,
                 std::span<const double> u, int threads) {
  return eval_obj_grad(rows, lambda, u, threads).obj;
}

std::vector<double> gradient(const WeightedRows& rows,
                             std::span<const double> lambda,
                             std::span<const double> u, int threads) {
  return eval_obj_grad(rows, lambda, u, threads).grad;
}

std::vector<double> hessian(const WeightedRows& rows,
                            std::span<const double> lambda,
                            std::span<const double> u, int threads) {
  check_shapes(rows, lambda, u);
  const std::size_t k = rows.cols;
  auto leaf = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> acc(k * k, 0.0);
    std::vector<double> q(k);
    for (std::size_t r = lo; r < hi; ++r) {
      const double w = rows.weights[r];
      row_logsum(rows.row(r), u, q.data());
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          const double diag = a == b ? q[a] : 0.0;
          acc[a * k + b] += w * (diag - q[a] * q[b]);
        }
      }
    }
    return acc;
  };
  auto join = [](std::vector<double> a, std::vector<double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  };
  return detail::pairwise_reduce<std::vector<double>>(
      0, rows.rows(), leaf, join, detail::async_depth_for_threads(threads));
}

double objective(const OmegaMatrix& omega, std::span<const double> lambda,
                 std::span<const double> u, int threads) {
  return objective(uniform_rows(omega), lambda, u, threads);
}

std::vector<double> gradient(const OmegaMatrix& omega,
                             std::span<const double> lambda,
                             std::span<const double> u, int threads) {
  return gradient(uniform_rows(omega), lambda, u, threads);
}

std::vector<double> hessian(const OmegaMatrix& omega,
                            std::span<const double> lambda,
                            std::span<const double> u, int threads) {
  return hessian(uniform_rows(omega), lambda, u, threads);
}

SolverConfig SolverConfig::full_gradient(double learning_rate, double momentum,
                                         double grad_tol, int max_iters) {
  SolverConfig cfg;
  cfg.mode = SolverMode::FullGradient;
  cfg.learning_rate = learning_rate;
  cfg.momentum = momentum;
  cfg.grad_tol = grad_tol;
  cfg.max_iters = max_iters;
  return cfg;
}

SolverResult solve(const OmegaMatrix& omega, std::span<const double> lambda,
                   const SolverConfig& cfg) {
  check_config(cfg);
  if (lambda.size() != omega.cols()) {
    throw_data("solve: lambda size does not match the number of sources");
  }
  SolverResult res = cfg.mode == SolverMode::FullGradient
                         ? run_full_gradient(dedup_rows(omega), lambda, cfg)
                         : run_minibatch(omega, lambda, cfg);
  const auto components = strong_components(support_graph(omega));
  res.connected = components.size() == 1;
  if (!res.connected) {
    std::string msg = "overlap graph is not strongly connected; normalizer "
                      "scales are unidentifiable across components:";
    for (const auto& comp : components) {
      msg += " {";
      for (std::size_t i = 0; i < comp.size(); ++i) {
        msg += (i ? "," : "") + std::to_string(comp[i]);
      }
      msg += "}";
    }
    res.warnings.push_back(msg);
  }
  return res;
}

SolverResult solve_weighted(const WeightedRows& rows,
                            std::span<const double> lambda,
                            const SolverConfig& cfg) {
  check_config(cfg);
  if (cfg.mode != SolverMode::FullGradient) {
    throw_config("solve_weighted: weighted rows support full-gradient mode");
  }
  return run_full_gradient(rows, lambda, cfg);
}

OverlapDiagnostics diagnose(const OmegaMatrix& omega,
                            std::span<const double> lambda,
                            std::span<const double> u_hat, int threads) {
  const std::size_t k = omega.cols();
  const std::size_t n = omega.rows();
  OverlapDiagnostics d;
  d.graph = support_graph(omega);
  d.components = strong_components(d.graph);
  d.connected = d.components.size() == 1;

  d.epsilon_hat = std::numeric_limits<double>::infinity();
  for (double v : omega.values()) {
    if (v > 0.0 && v < d.epsilon_hat) d.epsilon_hat = v;
  }
  if (!std::isfinite(d.epsilon_hat)) d.epsilon_hat = 0.0;

  d.kappa_hat.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = omega.row(r);
    for (std::size_t a = 0; a < k; ++a) {
      if (row[a] <= 0.0) continue;
      for (std::size_t b = 0; b < k; ++b) {
        if (row[b] > 0.0) d.kappa_hat[a][b] += 1.0;
      }
    }
  }
  for (auto& rowk : d.kappa_hat) {
    for (auto& v : rowk) v /= static_cast<double>(n);
  }

  if (k >= 2) {
    const auto h = hessian(omega, lambda, u_hat, threads);
    const auto eigs = symmetric_eigenvalues(h, k);
    d.sigma2 = eigs[1];
  } else {
    d.sigma2 = 0.0;
    d.warnings.push_back("K = 1: second-smallest eigenvalue undefined");
  }

  double lambda_min = 1.0;
  for (double l : lambda) lambda_min = std::min(lambda_min, l);
  double kappa_min = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a != b) kappa_min = std::min(kappa_min, d.kappa_hat[a][b]);
    }
  }
  if (k == 1) {
    d.u_bound = 0.0;
  } else if (kappa_min <= 0.0 || d.epsilon_hat <= 0.0) {
    d.u_bound = std::numeric_limits<double>::infinity();
    d.warnings.push_back("no pairwise overlap for some source pair; the "
                         "localization bound is vacuous");
  } else {
    const double base = 1.0 / (lambda_min * kappa_min * d.epsilon_hat);
    double sum = 0.0;
    double pow2 = 1.0, powb = 1.0;
    for (std::size_t t = 1; t < k; ++t) {
      pow2 *= 2.0;
      powb *= base;
      sum += pow2 * powb;
    }
    d.u_bound = std::log(2.0 * static_cast<double>(k) / d.epsilon_hat) * sum;
  }
  if (!d.connected) {
    d.warnings.push_back("overlap graph not strongly connected");
  }
  return d;
}

std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t k) {
  if (a.size() != k * k) throw_data("symmetric_eigenvalues: bad shape");
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return std::vector<double>(k, 0.0);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) off += a[p * k + q] * a[p * k + q];
    }
    if (off < 1e-30 * scale * scale) break;
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const double apq = a[p * k + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * k + q] - a[p * k + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < k; ++i) {
          const double aip = a[i * k + p];
          const double aiq = a[i * k + q];
          a[i * k + p] = c * aip - s * aiq;
          a[i * k + q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const double api = a[p * k + i];
          const double aqi = a[q * k + i];
          a[p * k + i] = c * api - s * aqi;
          a[q * k + i] = s * api + c * aqi;
        }
      }
    }
  }
  std::vector<double> eigs(k);
  for (std::size_t i = 0; i < k; ++i) eigs[i] = a[i * k + i];
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

}  // namespace debias
