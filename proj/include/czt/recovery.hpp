#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "czt/parallel.hpp"
#include "czt/sampler.hpp"

namespace czt {

enum class SolverMode : std::uint8_t {
  // Equality-constrained basis pursuit, solved by an alternating-direction
  // scheme. Default; matches noiseless measurements.
  kBasisPursuit = 0,
  // l2-penalized (LASSO) form solved by accelerated proximal gradient; for
  // noisy measurements.
  kLasso = 1,
};

struct SolverConfig {
  int max_iters = 2000;
  double abs_tol = 1e-7;
  double rel_tol = 1e-5;
  double penalty_rho = 1.0;
  bool enforce_observed = true;
  SolverMode mode = SolverMode::kBasisPursuit;
  double lasso_lambda = 1e-3;

  bool operator==(const SolverConfig&) const = default;
};

inline void validate(const SolverConfig& cfg) {
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (!(cfg.penalty_rho > 0.0)) throw std::invalid_argument("penalty_rho must be positive");
  if (!(cfg.lasso_lambda > 0.0)) throw std::invalid_argument("lasso_lambda must be positive");
}

struct SolveResult {
  std::vector<double> alpha;
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;  // ||A alpha - y||_2
};

namespace detail {

inline double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline void soft_threshold(const std::vector<double>& in, double t, std::vector<double>& out) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = in[i];
    if (v > t) {
      out[i] = v - t;
    } else if (v < -t) {
      out[i] = v + t;
    } else {
      out[i] = 0.0;
    }
  }
}

// min ||alpha||_1  s.t.  A alpha = y.
// The rows of A are orthonormal (A A^T = I), so the projection onto the
// constraint set is v + A^T (y - A v) and needs no linear solve. x-iterates
// are therefore feasible at every step and are what gets returned.
inline SolveResult solve_bp_admm(const SensingOperator& op, const std::vector<double>& y,
                                 const SolverConfig& cfg) {
  const int n = op.n();
  const int m = op.m();
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  SolveResult res;
  std::vector<double> x(n, 0.0), z(n, 0.0), z_old(n, 0.0), u(n, 0.0), v(n, 0.0), w(n, 0.0);
  std::vector<double> ym(m, 0.0), rm(m, 0.0);

  // Exactly determined: the constraint fixes alpha = A^T y.
  if (m == n) {
    op.apply_transpose(y.data(), x.data());
    op.apply(x.data(), ym.data());
    for (int k = 0; k < m; ++k) rm[k] = ym[k] - y[k];
    res.alpha = std::move(x);
    res.converged = true;
    res.residual_norm = norm2(rm);
    return res;
  }

  op.apply_transpose(y.data(), z.data());  // warm start at min-l2 solution
  // penalty_rho is relative to the data scale, so the shrinkage step starts
  // proportionate for small- and large-amplitude measurements alike.
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::fabs(z[i]));
  if (scale == 0.0) {
    res.alpha = std::move(z);
    res.converged = true;
    res.residual_norm = norm2(y);
    return res;
  }
  double rho = cfg.penalty_rho / scale;

  int it = 0;
  bool converged = false;
  for (it = 1; it <= cfg.max_iters; ++it) {
    for (int i = 0; i < n; ++i) v[i] = z[i] - u[i];
    op.apply(v.data(), ym.data());
    for (int k = 0; k < m; ++k) rm[k] = y[k] - ym[k];
    op.apply_transpose(rm.data(), w.data());
    for (int i = 0; i < n; ++i) x[i] = v[i] + w[i];

    z_old.swap(z);
    for (int i = 0; i < n; ++i) v[i] = x[i] + u[i];
    soft_threshold(v, 1.0 / rho, z);

    double r_norm_sq = 0.0, s_norm_sq = 0.0, x_norm_sq = 0.0, z_norm_sq = 0.0, u_norm_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = x[i] - z[i];
      const double s = rho * (z[i] - z_old[i]);
      u[i] += r;
      r_norm_sq += r * r;
      s_norm_sq += s * s;
      x_norm_sq += x[i] * x[i];
      z_norm_sq += z[i] * z[i];
      u_norm_sq += u[i] * u[i];
    }
    const double r_norm = std::sqrt(r_norm_sq);
    const double s_norm = std::sqrt(s_norm_sq);
    const double eps_pri =
        sqrt_n * cfg.abs_tol + cfg.rel_tol * std::sqrt(std::max(x_norm_sq, z_norm_sq));
    const double eps_dual = sqrt_n * cfg.abs_tol + cfg.rel_tol * rho * std::sqrt(u_norm_sq);
    if (r_norm <= eps_pri && s_norm <= eps_dual) {
      converged = true;
      break;
    }
    // Residual balancing keeps the primal/dual pair on comparable scales.
    if (it % 10 == 0) {
      if (r_norm > 10.0 * s_norm) {
        rho *= 2.0;
        for (int i = 0; i < n; ++i) u[i] *= 0.5;
      } else if (s_norm > 10.0 * r_norm) {
        rho *= 0.5;
        for (int i = 0; i < n; ++i) u[i] *= 2.0;
      }
    }
  }

  op.apply(x.data(), ym.data());
  for (int k = 0; k < m; ++k) rm[k] = ym[k] - y[k];
  res.alpha = std::move(x);
  res.iterations = std::min(it, cfg.max_iters);
  res.converged = converged;
  res.residual_norm = norm2(rm);
  return res;
}

// min 0.5 ||A alpha - y||_2^2 + lambda ||alpha||_1 via FISTA. The operator
// has unit spectral norm, so the step size is 1.
inline SolveResult solve_lasso_fista(const SensingOperator& op, const std::vector<double>& y,
                                     const SolverConfig& cfg) {
  const int n = op.n();
  const int m = op.m();
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  std::vector<double> alpha(n, 0.0), alpha_prev(n, 0.0), beta(n, 0.0), g(n, 0.0);
  std::vector<double> ym(m, 0.0), rm(m, 0.0);
  double t = 1.0;

  SolveResult res;
  int it = 0;
  bool converged = false;
  for (it = 1; it <= cfg.max_iters; ++it) {
    op.apply(beta.data(), ym.data());
    for (int k = 0; k < m; ++k) rm[k] = ym[k] - y[k];
    op.apply_transpose(rm.data(), g.data());

    alpha_prev.swap(alpha);
    for (int i = 0; i < n; ++i) g[i] = beta[i] - g[i];
    soft_threshold(g, cfg.lasso_lambda, alpha);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    double step_sq = 0.0, norm_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = alpha[i] - alpha_prev[i];
      beta[i] = alpha[i] + momentum * d;
      step_sq += d * d;
      norm_sq += alpha[i] * alpha[i];
    }
    t = t_next;
    if (std::sqrt(step_sq) <= sqrt_n * cfg.abs_tol + cfg.rel_tol * std::sqrt(norm_sq)) {
      converged = true;
      break;
    }
  }

  op.apply(alpha.data(), ym.data());
  for (int k = 0; k < m; ++k) rm[k] = ym[k] - y[k];
  res.alpha = std::move(alpha);
  res.iterations = std::min(it, cfg.max_iters);
  res.converged = converged;
  res.residual_norm = norm2(rm);
  return res;
}

}  // namespace detail

// Recovers the transform coefficients of one block from its kept samples.
inline SolveResult solve_basis_pursuit(const SensingOperator& op, const std::vector<double>& y,
                                       const SolverConfig& cfg) {
  validate(cfg);
  if (y.size() != static_cast<std::size_t>(op.m())) {
    throw std::invalid_argument("measurement length mismatch");
  }
  if (op.m() > op.n()) throw std::invalid_argument("more samples than block length");
  for (double v : y) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite measurements");
  }
  if (cfg.mode == SolverMode::kLasso) return detail::solve_lasso_fista(op, y, cfg);
  return detail::solve_bp_admm(op, y, cfg);
}

struct RecoveryResult {
  std::vector<double> x_hat;
  std::vector<double> alpha_hat;
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;
  double wall_time_s = 0.0;
  // True when the block had no kept samples and was filled with a constant
  // instead of being solved.
  bool fallback = false;
};

// Recovers one block. With enforce_observed, entries at kept indices are
// overwritten with the stored values afterwards: observed data is exact and
// must not be degraded by solver tolerance. A block with no kept samples is
// filled with `fallback_value` (the previous block's last recovered sample,
// or zero at the start of a trip).
inline RecoveryResult recover_block(const CompressedBlock& block, const SolverConfig& cfg,
                                    double fallback_value = 0.0) {
  validate(cfg);
  RecoveryResult out;
  const int n = static_cast<int>(block.block_len);
  if (n <= 0) throw std::invalid_argument("empty block");

  if (block.kept_values.empty()) {
    out.x_hat.assign(static_cast<std::size_t>(n), fallback_value);
    out.alpha_hat.assign(static_cast<std::size_t>(n), 0.0);
    out.alpha_hat[0] = fallback_value * std::sqrt(static_cast<double>(n));
    out.fallback = true;
    out.converged = true;
    return out;
  }

  SensingOperator op(block);
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult sol = solve_basis_pursuit(op, block.kept_values, cfg);
  const auto t1 = std::chrono::steady_clock::now();
  out.wall_time_s = std::chrono::duration<double>(t1 - t0).count();

  out.x_hat = idct(sol.alpha);
  if (cfg.enforce_observed) {
    for (std::size_t k = 0; k < block.kept_indices.size(); ++k) {
      out.x_hat[block.kept_indices[k]] = block.kept_values[k];
    }
  }
  out.alpha_hat = std::move(sol.alpha);
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  out.residual_norm = sol.residual_norm;
  return out;
}

struct BlockDiagnostics {
  std::uint32_t ordinal = 0;
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;
  double wall_time_s = 0.0;
  bool fallback = false;
};

struct TripRecovery {
  Signal recovered;
  std::vector<BlockDiagnostics> blocks;
  double mean_time_per_recovery_s = 0.0;  // over solved (non-fallback) blocks
};

// Recovers all blocks of a trip and concatenates them in block order. Blocks
// are independent and may be solved in parallel; results land in per-block
// slots so the output does not depend on the schedule. Empty blocks are
// filled afterwards, in order, from the previous block's last recovered
// value.
inline TripRecovery recover_trip(const CompressedTrip& trip, const SolverConfig& cfg,
                                 int threads = 1) {
  validate(cfg);
  if (trip.blocks.empty()) throw std::invalid_argument("empty trip");

  std::vector<RecoveryResult> results(trip.blocks.size());
  try {
    parallel_for(trip.blocks.size(), threads, [&](std::size_t b) {
      if (trip.blocks[b].kept_values.empty()) return;  // handled sequentially below
      results[b] = recover_block(trip.blocks[b], cfg);
    });
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("block recovery failed: ") + e.what());
  }

  // Constant-extrapolation pass for blocks that kept nothing.
  for (std::size_t b = 0; b < trip.blocks.size(); ++b) {
    if (!trip.blocks[b].kept_values.empty()) continue;
    const double fill = (b == 0 || results[b - 1].x_hat.empty()) ? 0.0 : results[b - 1].x_hat.back();
    results[b] = recover_block(trip.blocks[b], cfg, fill);
  }

  TripRecovery out;
  out.recovered.rate_hz = trip.rate_hz;
  out.recovered.unit = trip.unit;
  out.recovered.samples.reserve(trip.total_len());
  out.blocks.reserve(trip.blocks.size());
  double time_sum = 0.0;
  std::size_t solved = 0;
  for (std::size_t b = 0; b < trip.blocks.size(); ++b) {
    auto& r = results[b];
    out.recovered.samples.insert(out.recovered.samples.end(), r.x_hat.begin(), r.x_hat.end());
    BlockDiagnostics d;
    d.ordinal = trip.blocks[b].ordinal;
    d.iterations = r.iterations;
    d.converged = r.converged;
    d.residual_norm = r.residual_norm;
    d.wall_time_s = r.wall_time_s;
    d.fallback = r.fallback;
    out.blocks.push_back(d);
    if (!r.fallback) {
      time_sum += r.wall_time_s;
      ++solved;
    }
  }
  out.mean_time_per_recovery_s = solved > 0 ? time_sum / static_cast<double>(solved) : 0.0;
  return out;
}

}  // namespace czt
