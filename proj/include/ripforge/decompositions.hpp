#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Q diag(eigenvalues) Q^T, eigenvalues in descending order.
struct SpectralDecomp {
  Mat Q;
  Vec eigenvalues;
};

/// Thin SVD: M = U diag(singular_values) V^T, U is rows x p, V is cols x p,
/// p = min(rows, cols), singular values descending.
struct Svd {
  Mat U;
  Vec singular_values;
  Mat V;

  double sigma_max() const {
    return singular_values.empty() ? 0.0 : singular_values.front();
  }
};

enum class EigenMethod {
  automatic,       ///< Jacobi for small matrices, tridiagonal QL above that
  jacobi,          ///< cyclic Jacobi rotations
  tridiagonal_ql,  ///< Householder tridiagonalization + implicit QL
};

namespace detail {

inline constexpr std::size_t kJacobiMaxDim = 32;

inline void check_symmetric(const Mat& m) {
  if (!m.is_square()) {
    throw DimensionError("symmetric eigendecomposition needs a square matrix, got " +
                         shape_str(m.rows(), m.cols()));
  }
  const double nrm = frobenius_norm(m);
  double asym = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double d = m(i, j) - m(j, i);
      asym += 2.0 * d * d;
    }
  }
  if (std::sqrt(asym) > 1e-10 * nrm) {
    throw SymmetryError("matrix is not symmetric: ||M - M^T||_F = " +
                        std::to_string(std::sqrt(asym)));
  }
}

inline SpectralDecomp sort_descending(Vec values, const Mat& vectors) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  SpectralDecomp out{Mat(n, n), Vec(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = values[order[k]];
    for (std::size_t i = 0; i < n; ++i) out.Q(i, k) = vectors(i, order[k]);
  }
  return out;
}

inline SpectralDecomp jacobi_eig(Mat a) {
  const std::size_t n = a.rows();
  Mat v = Mat::identity(n);
  const double scale = frobenius_norm(a);
  if (scale == 0.0) return sort_descending(Vec(n, 0.0), v);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(2.0 * off) <= kEps * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        double* rp = &a(p, 0);
        double* rq = &a(q, 0);
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = rp[k], aqk = rq[k];
          rp[k] = c * apk - s * aqk;
          rq[k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  Vec d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
  return sort_descending(std::move(d), v);
}

// Householder reduction to tridiagonal form followed by implicit QL, after
// the EISPACK tred2/tql2 pair. The QL phase rotates rows of vt = V^T so the
// inner loop stays contiguous.
inline SpectralDecomp tridiagonal_ql_eig(const Mat& m) {
  const std::size_t n = m.rows();
  if (n == 1) return {Mat::identity(1), Vec{m(0, 0)}};
  Mat V = m;
  Vec d(n), e(n);

  for (std::size_t j = 0; j < n; ++j) d[j] = V(n - 1, j);
  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0, h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = V(i - 1, j);
        V(i, j) = 0.0;
        V(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        V(j, i) = f;
        g = e[j] + V(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += V(k, j) * d[k];
          e[k] += V(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k <= i - 1; ++k) V(k, j) -= (f * e[k] + g * d[k]);
        d[j] = V(i - 1, j);
        V(i, j) = 0.0;
      }
    }
    d[i] = h;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    V(n - 1, i) = V(i, i);
    V(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = V(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += V(k, i + 1) * V(k, j);
        for (std::size_t k = 0; k <= i; ++k) V(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) V(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = V(n - 1, j);
    V(n - 1, j) = 0.0;
  }
  V(n - 1, n - 1) = 1.0;
  e[0] = 0.0;

  Mat vt = transpose(V);
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  double f = 0.0, tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m_idx = l;
    while (m_idx < n) {
      if (std::abs(e[m_idx]) <= kEps * tst1) break;
      ++m_idx;
    }
    if (m_idx > l) {
      int iter = 0;
      do {
        if (++iter > 200) {
          throw NumericalError("tridiagonal QL iteration failed to converge");
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[m_idx];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m_idx; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          double* v0 = &vt(ii, 0);
          double* v1 = &vt(ii + 1, 0);
          for (std::size_t k = 0; k < n; ++k) {
            const double hk = v1[k];
            v1[k] = s * v0[k] + c * hk;
            v0[k] = c * v0[k] - s * hk;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > kEps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
  return sort_descending(std::move(d), transpose(vt));
}

}  // namespace detail

/// Eigendecomposition of a symmetric matrix. The input is checked for
/// symmetry (||M - M^T||_F <= 1e-10 ||M||_F) and then symmetrized exactly.
inline SpectralDecomp sym_eig(const Mat& m, EigenMethod method = EigenMethod::automatic) {
  detail::check_symmetric(m);
  if (m.rows() == 0) return {};
  Mat s = m;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = i + 1; j < s.cols(); ++j) {
      const double avg = 0.5 * (s(i, j) + s(j, i));
      s(i, j) = avg;
      s(j, i) = avg;
    }
  }
  if (method == EigenMethod::automatic) {
    method = s.rows() <= detail::kJacobiMaxDim ? EigenMethod::jacobi
                                               : EigenMethod::tridiagonal_ql;
  }
  return method == EigenMethod::jacobi ? detail::jacobi_eig(std::move(s))
                                       : detail::tridiagonal_ql_eig(s);
}

/// Q f(Lambda) Q^T for a symmetric matrix, f applied to each eigenvalue.
template <class F>
Mat sym_apply(const SpectralDecomp& e, F&& f) {
  const std::size_t n = e.eigenvalues.size();
  Mat qs = e.Q;
  for (std::size_t j = 0; j < n; ++j) {
    const double fj = f(e.eigenvalues[j]);
    for (std::size_t i = 0; i < n; ++i) qs(i, j) *= fj;
  }
  return matmul_nt(qs, e.Q);
}

namespace detail {

// One-sided Jacobi on the rows of wt (= M^T for a tall M): rotating row pairs
// until all are mutually orthogonal. vt accumulates V^T.
inline void hestenes(Mat& wt, Mat& vt) {
  const std::size_t p = wt.rows();
  const std::size_t len = wt.cols();
  Vec norms(p);
  const double tol = kEps * static_cast<double>(std::max<std::size_t>(len, 1));
  for (int sweep = 0; sweep < 80; ++sweep) {
    double largest = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      norms[j] = dot(wt.row(j), wt.row(j));
      largest = std::max(largest, norms[j]);
    }
    // Rows at rounding level of the largest are numerically zero; rotating
    // them against each other only shuffles noise and never settles.
    const double negligible = largest * kEps * kEps;
    bool rotated = false;
    for (std::size_t j = 0; j + 1 < p; ++j) {
      for (std::size_t k = j + 1; k < p; ++k) {
        const double alpha = norms[j];
        const double beta = norms[k];
        if (alpha <= negligible || beta <= negligible) continue;
        double* a = &wt(j, 0);
        double* b = &wt(k, 0);
        double gamma = 0.0;
        for (std::size_t i = 0; i < len; ++i) gamma += a[i] * b[i];
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < len; ++i) {
          const double ai = a[i], bi = b[i];
          a[i] = c * ai - s * bi;
          b[i] = s * ai + c * bi;
        }
        double* va = &vt(j, 0);
        double* vb = &vt(k, 0);
        for (std::size_t i = 0; i < p; ++i) {
          const double ai = va[i], bi = vb[i];
          va[i] = c * ai - s * bi;
          vb[i] = s * ai + c * bi;
        }
        norms[j] = alpha - t * gamma;
        norms[k] = beta + t * gamma;
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("one-sided Jacobi SVD failed to converge");
}

}  // namespace detail

/// Columns orthonormal and orthogonal to range(b); b is rows x cols with
/// cols <= rows. Returns rows x (rows - cols). Householder QR of b: the
/// trailing columns of the full Q.
inline Mat orthonormal_complement(const Mat& b) {
  const std::size_t r = b.rows(), c = b.cols();
  if (c > r) throw DimensionError("orthonormal_complement needs cols <= rows");
  Mat work = b;
  std::vector<Vec> reflectors;
  reflectors.reserve(c);
  for (std::size_t k = 0; k < c; ++k) {
    Vec v(r - k);
    for (std::size_t i = k; i < r; ++i) v[i - k] = work(i, k);
    const double alpha = norm2(v);
    if (alpha == 0.0) {
      reflectors.emplace_back();
      continue;
    }
    v[0] += v[0] >= 0.0 ? alpha : -alpha;
    const double vn = norm2(v);
    for (double& x : v) x /= vn;
    for (std::size_t j = k; j < c; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < r; ++i) s += v[i - k] * work(i, j);
      for (std::size_t i = k; i < r; ++i) work(i, j) -= 2.0 * s * v[i - k];
    }
    reflectors.push_back(std::move(v));
  }
  // Q [0; I] = H_0 H_1 ... H_{c-1} [0; I], applied right to left.
  Mat out(r, r - c);
  for (std::size_t j = 0; j < r - c; ++j) out(c + j, j) = 1.0;
  for (std::size_t k = c; k-- > 0;) {
    const Vec& v = reflectors[k];
    if (v.empty()) continue;
    // Rows k..r-1 only; out is stored row-major so accumulate w = v^T out.
    Vec w(r - c, 0.0);
    for (std::size_t i = k; i < r; ++i) {
      const double vi = v[i - k];
      const double* orow = &out(i, 0);
      for (std::size_t j = 0; j < r - c; ++j) w[j] += vi * orow[j];
    }
    for (std::size_t i = k; i < r; ++i) {
      const double vi = 2.0 * v[i - k];
      double* orow = &out(i, 0);
      for (std::size_t j = 0; j < r - c; ++j) orow[j] -= vi * w[j];
    }
  }
  return out;
}

namespace detail {

/// Replaces columns from `kept` on with an orthonormal complement of the
/// leading ones.
inline void complete_columns(Mat& u, std::size_t kept);

}  // namespace detail

/// Thin singular value decomposition by one-sided Jacobi rotations.
/// The columns are first rotated by the eigenvectors of M^T M, which leaves
/// them nearly orthogonal, so the Jacobi sweeps (which set the accuracy)
/// converge in two or three passes instead of ten.
inline Svd svd(const Mat& m) {
  if (m.rows() < m.cols()) {
    Svd t = svd(transpose(m));
    return {std::move(t.V), std::move(t.singular_values), std::move(t.U)};
  }
  const std::size_t r = m.rows(), p = m.cols();
  Svd out{Mat(r, p), Vec(p), Mat(p, p)};
  if (p == 0) return out;

  Mat vt;
  Mat wt;
  if (p > 1 && max_abs(m) > 0.0) {
    const SpectralDecomp e = sym_eig(matmul_tn(m, m));
    vt = transpose(e.Q);
    wt = matmul_nt(vt, m);  // (M V0)^T
  } else {
    vt = Mat::identity(p);
    wt = transpose(m);
  }
  detail::hestenes(wt, vt);

  Vec sigma(p);
  for (std::size_t j = 0; j < p; ++j) sigma[j] = norm2(wt.row(j));
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  const double smax = sigma[order[0]];
  // Left vectors of negligible singular values are noise; rebuild them as an
  // orthonormal complement so U keeps orthonormal columns.
  const double keep_tol = smax * kEps * static_cast<double>(std::max<std::size_t>(r, 1));
  std::size_t kept = 0;
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t j = order[k];
    out.singular_values[k] = sigma[j];
    for (std::size_t i = 0; i < p; ++i) out.V(i, k) = vt(j, i);
    if (sigma[j] > keep_tol && sigma[j] > 0.0) {
      for (std::size_t i = 0; i < r; ++i) out.U(i, k) = wt(j, i) / sigma[j];
      ++kept;
    }
  }
  if (kept < p) detail::complete_columns(out.U, kept);
  return out;
}

namespace detail {

inline void complete_columns(Mat& u, std::size_t kept) {
  const std::size_t r = u.rows(), p = u.cols();
  const Mat comp = orthonormal_complement(block(u, 0, 0, r, kept));
  for (std::size_t k = kept; k < p; ++k) {
    for (std::size_t i = 0; i < r; ++i) u(i, k) = comp(i, k - kept);
  }
}

}  // namespace detail

/// max(rows, cols) * eps * sigma_max.
inline double default_rank_tol(const Mat& m, const Svd& s) {
  return static_cast<double>(std::max(m.rows(), m.cols())) * kEps * s.sigma_max();
}

inline std::size_t rank_from_svd(const Svd& s, double tol) {
  return static_cast<std::size_t>(std::count_if(
      s.singular_values.begin(), s.singular_values.end(),
      [tol](double v) { return v > tol; }));
}

inline std::size_t numerical_rank(const Mat& m, std::optional<double> rank_tol = {}) {
  const Svd s = svd(m);
  return rank_from_svd(s, rank_tol.value_or(default_rank_tol(m, s)));
}

/// Pseudo-inverse from an existing SVD, keeping the leading `rank` triplets.
inline Mat pinv_from_svd(const Svd& s, std::size_t rank) {
  const std::size_t rows = s.U.rows(), cols = s.V.rows();
  Mat vs(cols, rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const double inv = 1.0 / s.singular_values[k];
    for (std::size_t i = 0; i < cols; ++i) vs(i, k) = s.V(i, k) * inv;
  }
  return matmul_nt(vs, block(s.U, 0, 0, rows, rank));
}

/// Moore-Penrose pseudo-inverse, singular values <= rank_tol treated as zero.
inline Mat pinv(const Mat& m, std::optional<double> rank_tol = {}) {
  const Svd s = svd(m);
  const double tol = rank_tol.value_or(default_rank_tol(m, s));
  return pinv_from_svd(s, rank_from_svd(s, tol));
}

/// Flip column signs so that the first component with magnitude above
/// 1e-10 is positive. Makes bases derived from decompositions reproducible.
inline void canonicalize_signs(Mat& basis) {
  for (std::size_t j = 0; j < basis.cols(); ++j) {
    for (std::size_t i = 0; i < basis.rows(); ++i) {
      if (std::abs(basis(i, j)) > 1e-10) {
        if (basis(i, j) < 0.0) {
          for (std::size_t k = 0; k < basis.rows(); ++k) basis(k, j) = -basis(k, j);
        }
        break;
      }
    }
  }
}

/// Orthonormal bases of the row space and nullspace of m, from one SVD.
struct RangeNullBases {
  Mat range;  ///< cols x rank, spans the row space (range of m^T)
  Mat null;   ///< cols x (cols - rank)
  std::size_t rank = 0;
  Svd decomposition;
};

inline RangeNullBases range_null_bases(const Mat& m, std::optional<double> rank_tol = {}) {
  RangeNullBases out;
  out.decomposition = svd(m);
  const double tol = rank_tol.value_or(default_rank_tol(m, out.decomposition));
  out.rank = rank_from_svd(out.decomposition, tol);
  out.range = block(out.decomposition.V, 0, 0, m.cols(), out.rank);
  out.null = orthonormal_complement(out.range);
  canonicalize_signs(out.null);
  return out;
}

/// Orthonormal basis of {x : m x = 0}; zero columns when m has full column rank.
inline Mat nullspace_basis(const Mat& m, std::optional<double> rank_tol = {}) {
  return range_null_bases(m, rank_tol).null;
}

namespace detail {
inline Mat append_complement(const Mat& b);
}  // namespace detail

/// Appends orthonormal columns spanning range(b)^perp so the result is
/// square and invertible. The leading columns are b, untouched.
inline Mat complete_to_invertible(const Mat& b, std::optional<double> rank_tol = {}) {
  if (b.cols() > b.rows()) {
    throw DimensionError("complete_to_invertible needs rows >= cols, got " +
                         detail::shape_str(b.rows(), b.cols()));
  }
  if (b.cols() > 0) {
    const Svd s = svd(b);
    const double tol = rank_tol.value_or(default_rank_tol(b, s));
    const std::size_t rank = rank_from_svd(s, tol);
    if (rank < b.cols()) {
      throw RankError("columns are linearly dependent (rank " +
                          std::to_string(rank) + " < " + std::to_string(b.cols()) + ")",
                      rank, b.cols());
    }
  }
  return detail::append_complement(b);
}

namespace detail {

/// complete_to_invertible without the rank check, for callers that know
/// the columns are independent.
inline Mat append_complement(const Mat& b) {
  if (b.is_square()) return b;
  Mat comp = orthonormal_complement(b);
  canonicalize_signs(comp);
  return hcat(b, comp);
}

}  // namespace detail

/// LU factorization with partial pivoting of a square matrix.
class Lu {
 public:
  explicit Lu(Mat a) : lu_(std::move(a)), piv_(lu_.rows()) {
    if (!lu_.is_square()) throw DimensionError("LU needs a square matrix");
    const std::size_t n = lu_.rows();
    std::iota(piv_.begin(), piv_.end(), 0);
    const double scale = max_abs(lu_);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
      }
      if (std::abs(lu_(p, k)) <= kEps * scale * static_cast<double>(n) ||
          lu_(p, k) == 0.0) {
        throw SingularityError("matrix is singular to working precision");
      }
      if (p != k) {
        std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
        std::swap(piv_[k], piv_[p]);
      }
      const double inv = 1.0 / lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double l = lu_(i, k) * inv;
        lu_(i, k) = l;
        if (l == 0.0) continue;
        double* ri = &lu_(i, 0);
        const double* rk = &lu_(k, 0);
        for (std::size_t j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
      }
    }
  }

  /// Solves A X = B.
  Mat solve(const Mat& b) const {
    const std::size_t n = lu_.rows();
    if (b.rows() != n) throw DimensionError("LU solve: right-hand side rows mismatch");
    Mat x(n, b.cols());
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(b.row(piv_[i]).begin(), b.row(piv_[i]).end(), x.row(i).begin());
    }
    const std::size_t m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
      double* xi = &x(i, 0);
      for (std::size_t k = 0; k < i; ++k) {
        const double l = lu_(i, k);
        if (l == 0.0) continue;
        const double* xk = &x(k, 0);
        for (std::size_t j = 0; j < m; ++j) xi[j] -= l * xk[j];
      }
    }
    for (std::size_t i = n; i-- > 0;) {
      double* xi = &x(i, 0);
      for (std::size_t k = i + 1; k < n; ++k) {
        const double u = lu_(i, k);
        if (u == 0.0) continue;
        const double* xk = &x(k, 0);
        for (std::size_t j = 0; j < m; ++j) xi[j] -= u * xk[j];
      }
      const double inv = 1.0 / lu_(i, i);
      for (std::size_t j = 0; j < m; ++j) xi[j] *= inv;
    }
    return x;
  }

 private:
  Mat lu_;
  std::vector<std::size_t> piv_;
};

inline Mat inverse(const Mat& a) { return Lu(a).solve(Mat::identity(a.rows())); }

/// sigma_max / sigma_min; infinity when singular.
inline double condition_number(const Mat& a) {
  const Svd s = svd(a);
  if (s.singular_values.empty()) return 1.0;
  const double smin = s.singular_values.back();
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s.sigma_max() / smin;
}

}  // namespace ripforge
