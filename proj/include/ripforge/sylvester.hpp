#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "ripforge/decompositions.hpp"
#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge {

enum class SylvesterMethod {
  automatic,  ///< spectral when both coefficients are symmetric, else krylov
  spectral,   ///< diagonalize symmetric P and Q, solve entrywise
  krylov,     ///< conjugate gradient on the normal equations
};

struct SylvesterOptions {
  SylvesterMethod method = SylvesterMethod::automatic;
  double tol = 1e-12;
  /// Krylov iteration cap; 0 picks 10 * p * q + 100.
  std::size_t max_iters = 0;
  /// Krylov warm start.
  std::optional<Mat> initial;
};

namespace detail {

inline bool is_symmetric(const Mat& m, double rel = 1e-10) {
  if (!m.is_square()) return false;
  double asym = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double d = m(i, j) - m(j, i);
      asym += 2.0 * d * d;
    }
  }
  return std::sqrt(asym) <= rel * frobenius_norm(m);
}

inline Mat sylvester_apply(const Mat& p, const Mat& q, const Mat& x) {
  Mat y = matmul(p, x);
  y += matmul(x, q);
  return y;
}

inline Mat sylvester_apply_adjoint(const Mat& p, const Mat& q, const Mat& x) {
  Mat y = matmul_tn(p, x);
  y += matmul_nt(x, q);
  return y;
}

inline Mat sylvester_spectral(const Mat& p, const Mat& q, const Mat& c, double tol) {
  const SpectralDecomp ep = sym_eig(p);
  const SpectralDecomp eq = sym_eig(q);
  double scale = 0.0;
  for (double v : ep.eigenvalues) scale = std::max(scale, std::abs(v));
  double qscale = 0.0;
  for (double v : eq.eigenvalues) qscale = std::max(qscale, std::abs(v));
  scale += qscale;

  // Y = Qp^T X Qq solves Lp Y + Y Lq = -Qp^T C Qq.
  Mat ct = matmul(matmul_tn(ep.Q, c), eq.Q);
  for (std::size_t i = 0; i < ct.rows(); ++i) {
    for (std::size_t j = 0; j < ct.cols(); ++j) {
      const double denom = ep.eigenvalues[i] + eq.eigenvalues[j];
      if (std::abs(denom) <= tol * scale) {
        throw SingularityError(
            "Sylvester operator is singular: eigenvalue " +
            std::to_string(ep.eigenvalues[i]) + " of P meets " +
            std::to_string(-eq.eigenvalues[j]) + " = -eigenvalue of Q");
      }
      ct(i, j) = -ct(i, j) / denom;
    }
  }
  return matmul_nt(matmul(ep.Q, ct), eq.Q);
}

inline Mat sylvester_krylov(const Mat& p, const Mat& q, const Mat& c,
                            const SylvesterOptions& opts) {
  const std::size_t max_iters =
      opts.max_iters > 0 ? opts.max_iters : 10 * c.rows() * c.cols() + 100;
  const double coef = frobenius_norm(p) + frobenius_norm(q);
  const double cnorm = frobenius_norm(c);

  Mat x = opts.initial.value_or(Mat(c.rows(), c.cols()));
  x.require_same_shape(c, "Sylvester warm start");
  Mat r = -c;
  r -= sylvester_apply(p, q, x);
  auto converged = [&](const Mat& res) {
    return frobenius_norm(res) <= opts.tol * coef * frobenius_norm(x) + opts.tol * cnorm;
  };
  if (converged(r)) return x;

  Mat z = sylvester_apply_adjoint(p, q, r);
  Mat dir = z;
  double zz = inner(z, z);
  for (std::size_t it = 0; it < max_iters; ++it) {
    if (zz == 0.0) break;
    const Mat w = sylvester_apply(p, q, dir);
    const double ww = inner(w, w);
    if (ww == 0.0) break;
    const double alpha = zz / ww;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x.data()[k] += alpha * dir.data()[k];
      r.data()[k] -= alpha * w.data()[k];
    }
    if ((it + 1) % 50 == 0) {
      r = -c;
      r -= sylvester_apply(p, q, x);
    }
    if (converged(r)) return x;
    z = sylvester_apply_adjoint(p, q, r);
    const double zz_new = inner(z, z);
    const double beta = zz_new / zz;
    zz = zz_new;
    for (std::size_t k = 0; k < dir.size(); ++k) {
      dir.data()[k] = z.data()[k] + beta * dir.data()[k];
    }
  }
  r = -c;
  r -= sylvester_apply(p, q, x);
  if (converged(r)) return x;
  throw SingularityError(
      "Krylov Sylvester solve stalled with residual " +
      std::to_string(frobenius_norm(r)) +
      "; the operator is singular or too ill-conditioned");
}

}  // namespace detail

/// Solves P X + X Q + C = 0 for X (P is p x p, Q is q x q, C is p x q).
inline Mat solve_sylvester(const Mat& p, const Mat& q, const Mat& c,
                           const SylvesterOptions& opts = {}) {
  if (!p.is_square() || !q.is_square() || c.rows() != p.rows() ||
      c.cols() != q.rows()) {
    throw DimensionError("Sylvester shapes do not conform: P " +
                         detail::shape_str(p.rows(), p.cols()) + ", Q " +
                         detail::shape_str(q.rows(), q.cols()) + ", C " +
                         detail::shape_str(c.rows(), c.cols()));
  }
  SylvesterMethod method = opts.method;
  if (method == SylvesterMethod::automatic) {
    method = detail::is_symmetric(p) && detail::is_symmetric(q)
                 ? SylvesterMethod::spectral
                 : SylvesterMethod::krylov;
  }
  if (method == SylvesterMethod::spectral) {
    if (!detail::is_symmetric(p) || !detail::is_symmetric(q)) {
      throw SymmetryError("spectral Sylvester method needs symmetric P and Q");
    }
    return detail::sylvester_spectral(p, q, c, opts.tol);
  }
  return detail::sylvester_krylov(p, q, c, opts);
}

/// ||P X + X Q + C||_F.
inline double sylvester_residual(const Mat& p, const Mat& q, const Mat& c, const Mat& x) {
  Mat r = detail::sylvester_apply(p, q, x);
  r += c;
  return frobenius_norm(r);
}

}  // namespace ripforge
