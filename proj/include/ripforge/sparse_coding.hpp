#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"
#include "ripforge/rng.hpp"

namespace ripforge {

/// Sparse code as parallel support/value lists.
struct SparseCode {
  std::vector<std::size_t> support;
  Vec values;

  Vec dense(std::size_t n) const {
    Vec x(n, 0.0);
    for (std::size_t k = 0; k < support.size(); ++k) x[support[k]] = values[k];
    return x;
  }
};

namespace detail {

/// Incremental Cholesky factor of the Gram submatrix of the chosen atoms.
class GrowingCholesky {
 public:
  /// Appends an atom with Gram column g (against previous atoms) and
  /// diagonal entry gkk. Returns false if the atom is (numerically) in the
  /// span of the previous ones.
  bool push(std::span<const double> g, double gkk) {
    const std::size_t n = size_;
    Vec w(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = g[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_[i][k] * w[k];
      w[i] = s / l_[i][i];
    }
    const double d2 = gkk - dot(w, w);
    if (!(d2 > 1e-12 * gkk)) return false;
    w.push_back(std::sqrt(d2));
    l_.push_back(std::move(w));
    ++size_;
    return true;
  }

  /// Solves L L^T x = b.
  Vec solve(std::span<const double> b) const {
    const std::size_t n = size_;
    Vec y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_[i][k] * y[k];
      y[i] = s / l_[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = y[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= l_[k][i] * x[k];
      x[i] = s / l_[i][i];
    }
    return x;
  }

  std::size_t size() const { return size_; }

 private:
  std::vector<Vec> l_;
  std::size_t size_ = 0;
};

}  // namespace detail

/// Orthogonal matching pursuit with precomputed correlations. `dty` is
/// D^T y, `gram` is D^T D and `yy` is ||y||^2. Stops after `max_atoms`
/// atoms or once the residual norm is at most `tol`.
inline SparseCode omp_gram(const Mat& gram, std::span<const double> dty, double yy,
                           std::size_t max_atoms, double tol) {
  const std::size_t n = gram.rows();
  SparseCode code;
  detail::GrowingCholesky chol;
  Vec alpha(dty.begin(), dty.end());
  std::vector<bool> used(n, false);
  Vec rhs;
  double res2 = yy;
  while (code.support.size() < max_atoms && res2 > tol * tol) {
    std::size_t best = n;
    double best_val = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double v = std::abs(alpha[j]);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    if (best == n || best_val <= 1e-14 * std::sqrt(yy)) break;
    Vec g(code.support.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = gram(code.support[k], best);
    used[best] = true;
    if (!chol.push(g, gram(best, best))) continue;  // dependent atom: skip it
    code.support.push_back(best);
    rhs.push_back(dty[best]);
    code.values = chol.solve(rhs);
    // alpha = D^T y - G_{:,S} x_S; residual energy = yy - x_S^T (D^T y)_S.
    for (std::size_t j = 0; j < n; ++j) {
      double s = dty[j];
      for (std::size_t k = 0; k < code.support.size(); ++k) {
        s -= gram(j, code.support[k]) * code.values[k];
      }
      alpha[j] = s;
    }
    res2 = yy - dot(code.values, rhs);
  }
  return code;
}

/// Orthogonal matching pursuit for one signal against dictionary d.
inline SparseCode omp(const Mat& d, std::span<const double> y, std::size_t max_atoms,
                      double tol = 0.0) {
  if (y.size() != d.rows()) throw DimensionError("omp: signal length does not match dictionary");
  const Mat gram = matmul_tn(d, d);
  return omp_gram(gram, matvec_t(d, y), dot(y, y), std::min(max_atoms, d.rows()), tol);
}

/// Initial atoms closer than this in |cosine| count as the same direction.
inline constexpr double kDuplicateAtomCosine = 0.999;

struct KsvdOptions {
  std::size_t atoms = 1024;
  std::size_t sparsity = 64;
  std::size_t iterations = 50;
  /// Target mean squared error per pixel; coding stops early per patch
  /// once its own squared error reaches error_goal * patch_length.
  double error_goal = 1e-8;
  Seed seed = 0;
};

struct KsvdResult {
  Mat D;
  std::vector<double> error_trace;  ///< mean squared error per pixel, per iteration
  std::size_t replaced_atoms = 0;
};

namespace detail {

inline double code_error(const Mat& d, const Mat& y, std::size_t col, const SparseCode& c) {
  double e = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double r = y(i, col);
    for (std::size_t k = 0; k < c.support.size(); ++k) r -= d(i, c.support[k]) * c.values[k];
    e += r * r;
  }
  return e;
}

/// Least-squares refit of a code on a fixed support.
inline SparseCode refit(const Mat& gram, std::span<const double> dty, const SparseCode& c) {
  GrowingCholesky chol;
  SparseCode out;
  Vec rhs;
  for (std::size_t j : c.support) {
    Vec g(out.support.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = gram(out.support[k], j);
    if (!chol.push(g, gram(j, j))) continue;
    out.support.push_back(j);
    rhs.push_back(dty[j]);
  }
  if (!out.support.empty()) out.values = chol.solve(rhs);
  return out;
}

}  // namespace detail

/// K-SVD dictionary learning over the columns of y. The initial atoms are
/// random training signals (normalized) with pairwise distinct directions. Each iteration sparse-codes
/// every signal with OMP, keeping the previous support's refit when that is
/// better so the error never increases, then updates each atom and its
/// coefficients by a rank-one fit of the residual restricted to its users.
/// Unused atoms are replaced by the worst-represented signal.
inline KsvdResult ksvd_learn(const Mat& y, const KsvdOptions& opts) {
  const std::size_t dim = y.rows(), count = y.cols();
  if (count == 0 || dim == 0) throw DimensionError("K-SVD needs a non-empty training set");
  if (opts.atoms == 0 || opts.atoms > count) {
    throw DimensionError("K-SVD atom count must be in [1, number of patches]");
  }
  if (opts.sparsity == 0) throw DimensionError("K-SVD sparsity must be at least 1");

  KsvdResult out;
  Rng rng(derive(opts.seed, "ksvd-init"));
  {
    // Random training signals in shuffled order, skipping zero signals and
    // near-duplicate directions; Gaussian atoms fill any shortfall.
    std::vector<std::size_t> pool(count);
    std::iota(pool.begin(), pool.end(), 0);
    out.D = Mat(dim, opts.atoms);
    std::size_t filled = 0;
    Vec cand(dim);
    for (std::size_t k = 0; k < count && filled < opts.atoms; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(count - k));
      std::swap(pool[k], pool[pick]);
      for (std::size_t i = 0; i < dim; ++i) cand[i] = y(i, pool[k]);
      const double nrm = norm2(cand);
      if (nrm == 0.0) continue;
      for (double& v : cand) v /= nrm;
      bool duplicate = false;
      for (std::size_t a = 0; a < filled && !duplicate; ++a) {
        double c = 0.0;
        for (std::size_t i = 0; i < dim; ++i) c += out.D(i, a) * cand[i];
        duplicate = std::abs(c) > kDuplicateAtomCosine;
      }
      if (!duplicate) out.D.set_col(filled++, cand);
    }
    for (; filled < opts.atoms; ++filled) {
      for (std::size_t i = 0; i < dim; ++i) out.D(i, filled) = rng.gaussian();
    }
    out.D = normalize_columns(std::move(out.D));
  }
  if (opts.iterations == 0) return out;

  const std::size_t sparsity = std::min(opts.sparsity, dim);
  const double per_signal_tol = std::sqrt(opts.error_goal * static_cast<double>(dim));
  const double pixels = static_cast<double>(dim * count);
  std::vector<SparseCode> codes(count);
  bool have_codes = false;

  for (std::size_t it = 0; it < opts.iterations; ++it) {
    // Sparse coding.
    const Mat gram = matmul_tn(out.D, out.D);
    const Mat dty = matmul_tn(out.D, y);  // atoms x count
    Vec col(opts.atoms);
    std::vector<double> errors(count);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t k = 0; k < opts.atoms; ++k) col[k] = dty(k, s);
      double yy = 0.0;
      for (std::size_t i = 0; i < dim; ++i) yy += y(i, s) * y(i, s);
      SparseCode fresh = omp_gram(gram, col, yy, sparsity, per_signal_tol);
      double err = detail::code_error(out.D, y, s, fresh);
      if (have_codes) {
        SparseCode old = detail::refit(gram, col, codes[s]);
        const double old_err = detail::code_error(out.D, y, s, old);
        if (old_err < err) {
          fresh = std::move(old);
          err = old_err;
        }
      }
      codes[s] = std::move(fresh);
      errors[s] = err;
    }
    have_codes = true;

    // Atom users.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> users(opts.atoms);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t k = 0; k < codes[s].support.size(); ++k) {
        users[codes[s].support[k]].emplace_back(s, k);
      }
    }

    // Residual matrix R = Y - D X, kept up to date through the atom updates.
    Mat r = y;
    for (std::size_t s = 0; s < count; ++s) {
      const SparseCode& c = codes[s];
      for (std::size_t k = 0; k < c.support.size(); ++k) {
        for (std::size_t i = 0; i < dim; ++i) r(i, s) -= out.D(i, c.support[k]) * c.values[k];
      }
    }

    for (std::size_t a = 0; a < opts.atoms; ++a) {
      const auto& us = users[a];
      if (us.empty()) {
        // Dead atom: replace with the normalized worst-represented signal.
        std::size_t worst = 0;
        double worst_err = -1.0;
        for (std::size_t s = 0; s < count; ++s) {
          double e = 0.0;
          for (std::size_t i = 0; i < dim; ++i) e += r(i, s) * r(i, s);
          if (e > worst_err) {
            worst_err = e;
            worst = s;
          }
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < dim; ++i) nrm += r(i, worst) * r(i, worst);
        if (nrm > 0.0) {
          for (std::size_t i = 0; i < dim; ++i) out.D(i, a) = r(i, worst) / std::sqrt(nrm);
          ++out.replaced_atoms;
        }
        continue;
      }
      // E = R + d_a x_a on the users; rank-one fit by alternating least
      // squares started from the current pair, which cannot increase error.
      const std::size_t m = us.size();
      Mat e(dim, m);
      for (std::size_t u = 0; u < m; ++u) {
        const auto [s, k] = us[u];
        const double xv = codes[s].values[k];
        for (std::size_t i = 0; i < dim; ++i) e(i, u) = r(i, s) + out.D(i, a) * xv;
      }
      Vec d = out.D.col(a);
      Vec x(m);
      for (int pass = 0; pass < 3; ++pass) {
        x = matvec_t(e, d);  // d has unit norm: optimal row for fixed d
        const double xx = dot(x, x);
        if (xx == 0.0) break;
        Vec dn = matvec(e, x);
        const double nrm = norm2(dn);
        if (nrm == 0.0) break;
        for (double& v : dn) v /= nrm;
        d = std::move(dn);
      }
      x = matvec_t(e, d);
      out.D.set_col(a, d);
      for (std::size_t u = 0; u < m; ++u) {
        const auto [s, k] = us[u];
        codes[s].values[k] = x[u];
        for (std::size_t i = 0; i < dim; ++i) r(i, s) = e(i, u) - d[i] * x[u];
      }
    }

    double total = 0.0;
    for (double v : r.data()) total += v * v;
    out.error_trace.push_back(total / pixels);
    if (total / pixels <= opts.error_goal) break;
  }
  return out;
}

}  // namespace ripforge
