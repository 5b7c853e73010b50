#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "ripforge/decompositions.hpp"
#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"
#include "ripforge/rng.hpp"

namespace ripforge {

enum class EnsembleKind { gaussian, bernoulli };

inline std::string_view to_string(EnsembleKind k) {
  return k == EnsembleKind::gaussian ? "gaussian" : "bernoulli";
}

inline EnsembleKind parse_ensemble(std::string_view s) {
  if (s == "gaussian") return EnsembleKind::gaussian;
  if (s == "bernoulli") return EnsembleKind::bernoulli;
  throw ConfigError("unknown ensemble '" + std::string(s) + "' (gaussian|bernoulli)");
}

/// l x n matrix with i.i.d. N(0, 1/n) or +-1/sqrt(n) entries.
inline Mat draw_ensemble(EnsembleKind kind, std::size_t l, std::size_t n, Seed seed) {
  if (l == 0 || n == 0) throw DimensionError("ensemble dimensions must be positive");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Mat a(l, n);
  for (double& v : a.data()) {
    v = kind == EnsembleKind::gaussian ? scale * rng.gaussian()
                                       : (rng.coin() ? scale : -scale);
  }
  return a;
}

/// m of l rows, uniform without replacement, kept in ascending order.
struct RowSelector {
  std::size_t m = 0;
  std::size_t l = 0;
  std::vector<std::size_t> indices;

  static RowSelector full(std::size_t l) {
    RowSelector s{l, l, std::vector<std::size_t>(l)};
    std::iota(s.indices.begin(), s.indices.end(), 0);
    return s;
  }

  template <class T>
  BasicMatrix<T> apply(const BasicMatrix<T>& a) const {
    if (a.rows() != l) {
      throw DimensionError("row selector expects " + std::to_string(l) + " rows, got " +
                           std::to_string(a.rows()));
    }
    return select_rows(a, std::span<const std::size_t>(indices));
  }

  Vec apply(std::span<const double> v) const {
    if (v.size() != l) throw DimensionError("row selector length mismatch");
    Vec out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = v[indices[i]];
    return out;
  }

  /// The m x l 0/1 matrix.
  Mat as_matrix() const {
    Mat e(m, l);
    for (std::size_t i = 0; i < m; ++i) e(i, indices[i]) = 1.0;
    return e;
  }
};

/// First m entries of a seeded Fisher-Yates shuffle of 0..l-1.
inline std::vector<std::size_t> sample_without_replacement(std::size_t m, std::size_t l,
                                                           Rng& rng) {
  std::vector<std::size_t> pool(l);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(l - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  return pool;
}

inline RowSelector draw_row_selector(std::size_t m, std::size_t l, Seed seed) {
  if (m == 0 || m > l) {
    throw DimensionError("row selector needs 1 <= m <= l, got m = " + std::to_string(m) +
                         ", l = " + std::to_string(l));
  }
  Rng rng(seed);
  RowSelector s{m, l, sample_without_replacement(m, l, rng)};
  std::sort(s.indices.begin(), s.indices.end());
  return s;
}

enum class RipMode {
  exhaustive,        ///< every support examined; the value is the exact delta_k
  sampled_supports,  ///< exact extremes on random supports; a lower bound
  monte_carlo,       ///< random k-sparse unit vectors; a lower bound
};

struct RipEstimate {
  double delta = 0.0;
  RipMode mode = RipMode::monte_carlo;
  bool exact = false;
  std::size_t supports_examined = 0;
};

namespace detail {

inline double binomial_capped(std::size_t n, std::size_t k, double cap) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c > cap) return c;
  }
  return c;
}

/// max(sigma_max^2 - 1, 1 - sigma_min^2) over one column subset.
inline double support_deviation(const Mat& m, std::span<const std::size_t> support) {
  const Svd s = svd(select_cols(m, support));
  const double hi = s.singular_values.front();
  const double lo = s.singular_values.back();
  return std::max(hi * hi - 1.0, 1.0 - lo * lo);
}

inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline constexpr double kExhaustiveSupportLimit = 1e4;

/// Exact delta_k extremes over `supports` random k-subsets.
inline RipEstimate estimate_rip_delta_sampled_supports(const Mat& m, std::size_t k,
                                                       std::size_t supports, Seed seed) {
  if (k == 0 || k > m.cols()) throw DimensionError("RIP order must be in [1, cols]");
  RipEstimate out{0.0, RipMode::sampled_supports, false, supports};
  for (std::size_t t = 0; t < supports; ++t) {
    Rng rng(derive(seed, t));
    auto s = sample_without_replacement(k, m.cols(), rng);
    std::sort(s.begin(), s.end());
    out.delta = std::max(out.delta, detail::support_deviation(m, s));
  }
  return out;
}

/// Lower bound on the RIP constant of order k. Small problems
/// (C(cols, k) <= 1e4) are exhausted and the result is exact. Otherwise
/// `trials` random k-sparse unit vectors are drawn. Trial t draws one
/// permutation prefix and Gaussian values and also scores every prefix of
/// length j <= k. The Monte Carlo value is also floored by the exact
/// constant of the largest exhaustible order below k (delta_j <= delta_k),
/// so the estimate is non-decreasing in k for a fixed seed.
inline RipEstimate estimate_rip_delta(const Mat& m, std::size_t k, std::size_t trials,
                                      Seed seed) {
  if (k == 0 || k > m.cols()) throw DimensionError("RIP order must be in [1, cols]");
  if (trials == 0) throw DimensionError("RIP estimation needs at least one trial");
  const std::size_t n = m.cols();
  if (detail::binomial_capped(n, k, kExhaustiveSupportLimit) <= kExhaustiveSupportLimit) {
    RipEstimate out{0.0, RipMode::exhaustive, true, 0};
    std::vector<std::size_t> c(k);
    std::iota(c.begin(), c.end(), 0);
    do {
      out.delta = std::max(out.delta, detail::support_deviation(m, c));
      ++out.supports_examined;
    } while (detail::next_combination(c, n));
    return out;
  }
  RipEstimate out{0.0, RipMode::monte_carlo, false, trials};
  for (std::size_t j = k - 1; j >= 1; --j) {
    if (detail::binomial_capped(n, j, kExhaustiveSupportLimit) <= kExhaustiveSupportLimit) {
      out.delta = estimate_rip_delta(m, j, 1, seed).delta;
      break;
    }
  }
  Vec y(m.rows());
  for (std::size_t t = 0; t < trials; ++t) {
    // Support and values depend only on (seed, t), never on k.
    Rng rng(derive(seed, t));
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::fill(y.begin(), y.end(), 0.0);
    double xx = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t pick = j + static_cast<std::size_t>(rng.below(n - j));
      std::swap(pool[j], pool[pick]);
      const double v = rng.gaussian();
      xx += v * v;
      for (std::size_t i = 0; i < m.rows(); ++i) y[i] += m(i, pool[j]) * v;
      if (xx == 0.0) continue;
      out.delta = std::max(out.delta, std::abs(dot(y, y) / xx - 1.0));
    }
  }
  return out;
}

}  // namespace ripforge
