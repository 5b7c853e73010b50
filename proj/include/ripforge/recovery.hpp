#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ripforge/decompositions.hpp"
#include "ripforge/dictionaries.hpp"
#include "ripforge/errors.hpp"
#include "ripforge/factorize.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge {

struct SparseRecoveryConfig {
  std::size_t k = 1;
  std::size_t max_iters = 50;
  /// Absolute residual tolerance; unset means 1e-6 * ||z||.
  std::optional<double> halt_tol;
};

struct RecoveryResult {
  Vec estimate;
  std::vector<double> residual_trace;  ///< ||z - Phi x|| after each iteration
  std::size_t iterations = 0;
  bool converged = false;
  /// k exceeds a third of the measurements, where CoSaMP has no guarantee.
  bool k_exceeds_guideline = false;
};

namespace detail {

/// Indices of the `count` largest |v| (ties broken by lower index).
inline std::vector<std::size_t> top_indices(std::span<const double> v, std::size_t count) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  count = std::min(count, v.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double fa = std::abs(v[a]), fb = std::abs(v[b]);
                      return fa > fb || (fa == fb && a < b);
                    });
  idx.resize(count);
  return idx;
}

inline double residual_norm(const Mat& phi, std::span<const double> z, std::span<const double> x,
                            Vec& r) {
  r = matvec(phi, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = z[i] - r[i];
  return norm2(r);
}

}  // namespace detail

/// Compressive sampling matched pursuit. Each iteration merges the 2k
/// largest proxy entries with the current support, solves least squares on
/// the merge (pseudo-inverse, so rank deficiency is harmless) and prunes to
/// the k largest. An iterate that would raise the residual is rejected and
/// the loop stops, which keeps the residual trace non-increasing.
inline RecoveryResult cosamp(const Mat& phi, std::span<const double> z,
                             const SparseRecoveryConfig& cfg) {
  const std::size_t m = phi.rows(), n = phi.cols();
  if (z.size() != m) throw DimensionError("cosamp: measurement length does not match operator");
  if (cfg.k == 0 || cfg.k > n) throw DimensionError("cosamp: sparsity must be in [1, n]");
  if (cfg.max_iters == 0) throw DimensionError("cosamp: max_iters must be at least 1");
  if (!phi.all_finite()) throw NumericalError("cosamp: operator has non-finite entries");

  RecoveryResult out;
  out.estimate.assign(n, 0.0);
  out.k_exceeds_guideline = 3 * cfg.k > m;
  const double tol = cfg.halt_tol.value_or(1e-6 * norm2(z));
  Vec r(z.begin(), z.end());
  double rnorm = norm2(r);
  if (rnorm <= tol) {
    out.converged = true;
    return out;
  }
  std::vector<std::size_t> support;
  Vec trial(n), trial_r;
  while (out.iterations < cfg.max_iters) {
    const Vec proxy = matvec_t(phi, r);
    std::vector<std::size_t> merged = detail::top_indices(proxy, 2 * cfg.k);
    merged.insert(merged.end(), support.begin(), support.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    const Vec b = matvec(pinv(select_cols(phi, merged)), z);
    Vec full(n, 0.0);
    for (std::size_t t = 0; t < merged.size(); ++t) full[merged[t]] = b[t];
    std::vector<std::size_t> next = detail::top_indices(full, cfg.k);
    std::sort(next.begin(), next.end());
    std::fill(trial.begin(), trial.end(), 0.0);
    for (std::size_t j : next) trial[j] = full[j];

    const double next_norm = detail::residual_norm(phi, z, trial, trial_r);
    ++out.iterations;
    if (!(next_norm <= rnorm)) {
      out.residual_trace.push_back(rnorm);
      break;
    }
    out.estimate = trial;
    support = std::move(next);
    r = trial_r;
    rnorm = next_norm;
    out.residual_trace.push_back(rnorm);
    if (rnorm <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

/// Recovers dictionary coefficients from z = S D x through the composed
/// operator of a sensing system.
inline RecoveryResult recover_synthesis(const SensingSystem& system, std::span<const double> z,
                                        const SparseRecoveryConfig& cfg) {
  return cosamp(system.composed, z, cfg);
}

/// X -> L X R^T with adjoint Y -> L^T Y R.
struct LinOp2D {
  Mat left;
  Mat right;

  std::size_t in_rows() const { return left.cols(); }
  std::size_t in_cols() const { return right.cols(); }

  Mat apply(const Mat& x) const { return matmul_nt(matmul(left, x), right); }
  Mat adjoint(const Mat& y) const { return matmul(matmul_tn(left, y), right); }
};

/// Pair of real operators producing the real and imaginary channels of a
/// complex measurement from a real coefficient grid.
struct ComplexSplitOp {
  LinOp2D real_part;
  LinOp2D imag_part;

  /// Half the sum of both channels' squared residual norms.
  double fidelity(const Mat& x, const CMat& target) const {
    const Mat rr = real_part.apply(x) - ripforge::real_part(target);
    const Mat ri = imag_part.apply(x) - ripforge::imag_part(target);
    const double a = frobenius_norm(rr), b = frobenius_norm(ri);
    return 0.5 * (a * a + b * b);
  }

  /// Gradient of fidelity().
  Mat gradient(const Mat& x, const CMat& target) const {
    Mat g = real_part.adjoint(real_part.apply(x) - ripforge::real_part(target));
    g += imag_part.adjoint(imag_part.apply(x) - ripforge::imag_part(target));
    return g;
  }

  /// Largest eigenvalue of the normal operator, by power iteration.
  double normal_norm(std::size_t iters = 60) const {
    Mat v(real_part.in_rows(), real_part.in_cols());
    Rng rng(0x5eed);
    for (double& e : v.data()) e = rng.gaussian();
    double lambda = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
      const double nv = frobenius_norm(v);
      if (nv == 0.0) return 0.0;
      v *= 1.0 / nv;
      Mat w = real_part.adjoint(real_part.apply(v));
      w += imag_part.adjoint(imag_part.apply(v));
      lambda = inner(v, w);
      v = std::move(w);
    }
    return lambda;
  }
};

struct FistaOptions {
  double gamma = 0.0035;
  std::size_t max_iters = 500;
  double tol = 1e-7;  ///< relative objective change
  std::optional<Mat> initial;
};

struct FistaResult {
  CoeffGrid grid;
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline double weighted_l1(const Mat& x, const std::vector<bool>& mask) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (mask[k]) s += std::abs(x.data()[k]);
  }
  return s;
}

inline void soft_threshold(Mat& x, const std::vector<bool>& mask, double t) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!mask[k]) continue;
    double& v = x.data()[k];
    v = v > t ? v - t : (v < -t ? v + t : 0.0);
  }
}

}  // namespace detail

/// Proximal gradient with momentum for
///   fidelity(X) + gamma * sum over masked entries |X_ij|.
/// Entries outside the mask take plain gradient steps. A candidate that
/// raises the objective is rejected and momentum restarts from the current
/// iterate, so the objective trace is non-increasing.
inline FistaResult fista_weighted_l1(const ComplexSplitOp& op, const CMat& ytilde,
                                     const std::vector<bool>& highpass_mask,
                                     const FistaOptions& opts) {
  const std::size_t r = op.real_part.in_rows(), c = op.real_part.in_cols();
  if (op.imag_part.in_rows() != r || op.imag_part.in_cols() != c) {
    throw DimensionError("fista: real and imaginary operators disagree on the input shape");
  }
  if (highpass_mask.size() != r * c) throw DimensionError("fista: mask size mismatch");
  if (op.real_part.left.rows() != ytilde.rows() || op.real_part.right.rows() != ytilde.cols()) {
    throw DimensionError("fista: observation shape does not match the operator");
  }
  if (!(opts.gamma >= 0.0)) throw ConfigError("fista: gamma must be non-negative");

  double lip = op.normal_norm() * 1.01;
  if (!(lip > 0.0)) lip = 1.0;
  auto objective = [&](const Mat& x) {
    return op.fidelity(x, ytilde) + opts.gamma * detail::weighted_l1(x, highpass_mask);
  };

  FistaResult out;
  Mat x = opts.initial ? *opts.initial : Mat(r, c);
  if (x.rows() != r || x.cols() != c) throw DimensionError("fista: initial grid shape mismatch");
  Mat y = x;
  double t = 1.0;
  double fx = objective(x);
  out.objective_trace.push_back(fx);
  std::size_t backtracks = 0;
  bool restarted = false;
  while (out.iterations < opts.max_iters) {
    Mat z = y - (1.0 / lip) * op.gradient(y, ytilde);
    detail::soft_threshold(z, highpass_mask, opts.gamma / lip);
    const double fz = objective(z);
    if (!std::isfinite(fz)) {
      if (++backtracks > 30) {
        throw NumericalError("fista: objective is not finite after step-size backtracking");
      }
      lip *= 2.0;
      continue;
    }
    ++out.iterations;
    if (fz > fx) {
      out.objective_trace.push_back(fx);
      // A plain proximal step with a valid step size cannot increase the
      // objective beyond rounding: either x is stationary or the power
      // iteration underestimated the Lipschitz constant.
      if (restarted) {
        if (fz - fx <= 1e-13 * std::abs(fx)) {
          out.converged = true;
          break;
        }
        lip *= 2.0;
        continue;
      }
      // Restart: drop momentum; the next step is a plain proximal step.
      restarted = true;
      y = x;
      t = 1.0;
      continue;
    }
    restarted = false;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    t = t_next;
    const double change = std::abs(fx - fz) / std::max(std::abs(fx), 1e-300);
    x = std::move(z);
    fx = fz;
    out.objective_trace.push_back(fx);
    if (change <= opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.grid.X = std::move(x);
  out.grid.highpass_mask = highpass_mask;
  return out;
}

}  // namespace ripforge
