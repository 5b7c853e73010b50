#pragma once

#include <cmath>
#include <vector>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge {

/// Isotropic total variation with forward differences (zero across the
/// last row/column).
inline double total_variation(const Mat& z) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < z.cols(); ++j) {
      const double dx = i + 1 < z.rows() ? z(i + 1, j) - z(i, j) : 0.0;
      const double dy = j + 1 < z.cols() ? z(i, j + 1) - z(i, j) : 0.0;
      s += std::sqrt(dx * dx + dy * dy);
    }
  }
  return s;
}

namespace detail {

struct DualField {
  Mat px, py;
};

/// div p = -grad^T p for the forward-difference gradient above.
inline Mat divergence(const DualField& p) {
  const std::size_t r = p.px.rows(), c = p.px.cols();
  Mat d(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      double v = 0.0;
      if (i + 1 < r) v += p.px(i, j);
      if (i > 0) v -= p.px(i - 1, j);
      if (j + 1 < c) v += p.py(i, j);
      if (j > 0) v -= p.py(i, j - 1);
      d(i, j) = v;
    }
  }
  return d;
}

/// prox of s * TV at v by Chambolle's dual iteration, warm-started from p.
inline Mat tv_prox(const Mat& v, double s, DualField& p, std::size_t inner) {
  if (s <= 0.0) return v;
  const std::size_t r = v.rows(), c = v.cols();
  constexpr double tau = 0.125;
  for (std::size_t it = 0; it < inner; ++it) {
    Mat u = divergence(p);
    for (std::size_t k = 0; k < u.size(); ++k) u.data()[k] -= v.data()[k] / s;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        const double gx = i + 1 < r ? u(i + 1, j) - u(i, j) : 0.0;
        const double gy = j + 1 < c ? u(i, j + 1) - u(i, j) : 0.0;
        const double den = 1.0 + tau * std::sqrt(gx * gx + gy * gy);
        p.px(i, j) = (p.px(i, j) + tau * gx) / den;
        p.py(i, j) = (p.py(i, j) + tau * gy) / den;
      }
    }
  }
  Mat out = v;
  const Mat d = divergence(p);
  for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] -= s * d.data()[k];
  return out;
}

}  // namespace detail

struct TvOptions {
  double lambda = 5e-5;
  std::size_t max_iters = 200;
  std::size_t inner_iters = 20;
  double tol = 1e-6;
};

struct TvResult {
  Mat Z;
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Approximately minimizes ||Y - R F1 Z F2||_F^2 + lambda TV(Z) over real Z,
/// where R keeps the rows flagged in `rows`. The fidelity gradient is
/// 2 Re(F1^* R (R F1 Z F2 - Y) F2^*), Lipschitz with constant 2 for unitary
/// F1 and F2.
inline TvResult tv_reconstruct(const CMat& y, const std::vector<bool>& rows, const CMat& f1,
                               const CMat& f2, const TvOptions& opts = {}) {
  const std::size_t n1 = f1.cols(), n2 = f2.rows();
  if (y.rows() != f1.rows() || y.cols() != f2.cols() || rows.size() != y.rows()) {
    throw DimensionError("tv: k-space, mask and transform shapes disagree");
  }
  if (!(opts.lambda >= 0.0)) throw ConfigError("tv: lambda must be non-negative");
  const CMat f1h = adjoint(f1), f2h = adjoint(f2);
  auto residual = [&](const Mat& z) {
    CMat w = matmul(matmul(f1, z), f2);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        w(i, j) = (rows[i] ? w(i, j) : Complex(0.0)) - y(i, j);
      }
    }
    return w;
  };
  auto objective = [&](const Mat& z) {
    const double f = frobenius_norm(residual(z));
    return f * f + opts.lambda * total_variation(z);
  };
  auto gradient = [&](const Mat& z) {
    CMat w = residual(z);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      if (!rows[i]) {
        for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = 0.0;
      }
    }
    Mat g = real_part(matmul(matmul(f1h, w), f2h));
    g *= 2.0;
    return g;
  };

  constexpr double step = 0.5;
  TvResult out;
  Mat x(n1, n2), yk(n1, n2);
  detail::DualField p{Mat(n1, n2), Mat(n1, n2)};
  double t = 1.0;
  double fx = objective(x);
  out.objective_trace.push_back(fx);
  bool restarted = false;
  while (out.iterations < opts.max_iters) {
    Mat v = yk - step * gradient(yk);
    Mat z = detail::tv_prox(v, step * opts.lambda, p, opts.inner_iters);
    const double fz = objective(z);
    ++out.iterations;
    if (!(fz <= fx)) {
      out.objective_trace.push_back(fx);
      // Two rejections in a row: the inexact prox cannot make progress.
      if (restarted) {
        out.converged = true;
        break;
      }
      restarted = true;
      yk = x;
      t = 1.0;
      continue;
    }
    restarted = false;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    yk = z + ((t - 1.0) / t_next) * (z - x);
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
  out.Z = std::move(x);
  return out;
}

}  // namespace ripforge
