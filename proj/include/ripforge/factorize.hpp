#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "ripforge/decompositions.hpp"
#include "ripforge/ensembles.hpp"
#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge {

enum class FactorMethod { spectral, range, tight_frame };

inline std::string_view to_string(FactorMethod m) {
  switch (m) {
    case FactorMethod::spectral: return "spectral";
    case FactorMethod::range: return "range";
    case FactorMethod::tight_frame: return "tight";
  }
  return "?";
}

inline FactorMethod parse_factor_method(std::string_view s) {
  if (s == "spectral") return FactorMethod::spectral;
  if (s == "range") return FactorMethod::range;
  if (s == "tight" || s == "tight_frame") return FactorMethod::tight_frame;
  throw ConfigError("unknown factorization method '" + std::string(s) +
                    "' (spectral|range|tight)");
}

/// D = G A H with G invertible (l x l) and H orthonormal (n x n).
struct Factorization {
  Mat G;
  Mat G_inv;
  Mat A;
  Mat H;
  double residual = 0.0;     ///< ||G A H - D||_F / ||D||_F
  double orth_defect = 0.0;  ///< ||H H^T - I||_F
  double cond_G = 1.0;
  std::size_t rank = 0;
  FactorMethod method = FactorMethod::spectral;
};

namespace detail {

inline void require_same_dims(const Mat& d, const Mat& a) {
  if (d.rows() != a.rows() || d.cols() != a.cols()) {
    throw DimensionError("dictionary " + shape_str(d.rows(), d.cols()) +
                         " and ensemble " + shape_str(a.rows(), a.cols()) +
                         " must have the same shape");
  }
  if (d.rows() > d.cols()) {
    throw DimensionError("factorization needs l <= n, got " + shape_str(d.rows(), d.cols()));
  }
}

inline void require_equal_rank(std::size_t rank_d, std::size_t rank_a) {
  if (rank_d != rank_a) {
    throw RankError("dictionary rank " + std::to_string(rank_d) + " differs from ensemble rank " +
                        std::to_string(rank_a) + "; no factorization D = GAH exists",
                    rank_d, rank_a);
  }
}

inline void finish(Factorization& f, const Mat& d, std::optional<double> cond = {}) {
  Mat gah = matmul(matmul(f.G, f.A), f.H);
  gah -= d;
  const double dn = frobenius_norm(d);
  f.residual = dn > 0.0 ? frobenius_norm(gah) / dn : frobenius_norm(gah);
  f.orth_defect = orthonormality_defect(f.H);
  f.cond_G = cond ? *cond : condition_number(f.G);
}

}  // namespace detail

/// Spectral construction. With A A^T = Q_A S_A Q_A^T and D D^T = Q_D S_D Q_D^T
/// (descending, zero eigenvalues replaced by one), the map
/// P = Q_A (S_A / S_D)^{1/2} Q_D^T satisfies P D D^T P^T = A A^T and
/// P D = A H for H = A^+ P D + N_A N_D^T. Hence G = P^{-1}.
inline Factorization factor_spectral(const Mat& d, const Mat& a) {
  detail::require_same_dims(d, a);
  const RangeNullBases bd = range_null_bases(d);
  const RangeNullBases ba = range_null_bases(a);
  detail::require_equal_rank(bd.rank, ba.rank);
  const std::size_t l = d.rows(), r = bd.rank;

  const SpectralDecomp ea = sym_eig(matmul_nt(a, a));
  const SpectralDecomp ed = sym_eig(matmul_nt(d, d));
  Vec ratio(l);
  for (std::size_t i = 0; i < l; ++i) {
    const double sa = i < r ? ea.eigenvalues[i] : 1.0;
    const double sd = i < r ? ed.eigenvalues[i] : 1.0;
    ratio[i] = std::sqrt(sa / sd);
  }
  auto scaled = [&](const Mat& left, const Mat& right, bool invert) {
    Mat ls = left;
    for (std::size_t j = 0; j < l; ++j) {
      const double s = invert ? 1.0 / ratio[j] : ratio[j];
      for (std::size_t i = 0; i < l; ++i) ls(i, j) *= s;
    }
    return matmul_nt(ls, right);
  };

  Factorization f;
  f.method = FactorMethod::spectral;
  f.rank = r;
  f.A = a;
  f.G_inv = scaled(ea.Q, ed.Q, false);
  f.G = scaled(ed.Q, ea.Q, true);
  f.H = matmul(pinv_from_svd(ba.decomposition, ba.rank), matmul(f.G_inv, d));
  f.H += matmul_nt(ba.null, bd.null);
  // G = Q_D diag(1/ratio) Q_A^T, so its singular values are 1/ratio.
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  detail::finish(f, d, *hi / *lo);
  return f;
}

/// Range/nullspace construction: G = ext(D U_D) ext(A U_A)^{-1},
/// H = U_A U_D^T + N_A N_D^T, with U_* spanning the row spaces.
inline Factorization factor_range(const Mat& d, const Mat& a) {
  detail::require_same_dims(d, a);
  const RangeNullBases bd = range_null_bases(d);
  const RangeNullBases ba = range_null_bases(a);
  detail::require_equal_rank(bd.rank, ba.rank);

  // D U_D shares D's nonzero singular values, so its columns are independent.
  const Mat ext_d = detail::append_complement(matmul(d, bd.range));
  const Mat ext_a = detail::append_complement(matmul(a, ba.range));

  Factorization f;
  f.method = FactorMethod::range;
  f.rank = bd.rank;
  f.A = a;
  // G = ext_d ext_a^{-1}  <=>  G^T = ext_a^{-T} ext_d^T.
  f.G = transpose(Lu(transpose(ext_a)).solve(transpose(ext_d)));
  f.G_inv = transpose(Lu(transpose(ext_d)).solve(transpose(ext_a)));
  f.H = matmul_nt(ba.range, bd.range);
  f.H += matmul_nt(ba.null, bd.null);
  detail::finish(f, d);
  return f;
}

inline constexpr double kTightFrameTol = 1e-6;

/// Tight-frame construction: G = O (A A^T)^{-1/2}, H = A^T G^T D + N_A N_D^T.
/// Requires ||D D^T - I||_F <= 1e-6 * l and A of full row rank.
inline Factorization factor_tight_frame(const Mat& d, const Mat& a,
                                        std::optional<Mat> rotation = {}) {
  detail::require_same_dims(d, a);
  const std::size_t l = d.rows();
  const double defect = orthonormality_defect(d);
  if (defect > kTightFrameTol * static_cast<double>(l)) {
    throw PreconditionError("dictionary is not a tight frame: ||D D^T - I||_F = " +
                                std::to_string(defect),
                            defect);
  }
  const Mat o = rotation.value_or(Mat::identity(l));
  if (o.rows() != l || !o.is_square()) throw DimensionError("rotation must be l x l");
  if (orthonormality_defect(o) > 1e-8 * static_cast<double>(l)) {
    throw PreconditionError("rotation is not orthonormal", orthonormality_defect(o));
  }
  const RangeNullBases bd = range_null_bases(d);
  const RangeNullBases ba = range_null_bases(a);
  if (ba.rank != l) throw RankError("ensemble must have full row rank", ba.rank, l);
  detail::require_equal_rank(bd.rank, ba.rank);

  const SpectralDecomp ea = sym_eig(matmul_nt(a, a));
  Factorization f;
  f.method = FactorMethod::tight_frame;
  f.rank = l;
  f.A = a;
  f.G = matmul(o, sym_apply(ea, [](double v) { return 1.0 / std::sqrt(v); }));
  f.G_inv = matmul_nt(sym_apply(ea, [](double v) { return std::sqrt(v); }), o);
  f.H = matmul(matmul_tn(a, transpose(f.G)), d);
  f.H += matmul_nt(ba.null, bd.null);
  detail::finish(f, d, std::sqrt(ea.eigenvalues.front() / ea.eigenvalues.back()));
  return f;
}

inline Factorization factorize(FactorMethod method, const Mat& d, const Mat& a) {
  switch (method) {
    case FactorMethod::spectral: return factor_spectral(d, a);
    case FactorMethod::range: return factor_range(d, a);
    case FactorMethod::tight_frame: return factor_tight_frame(d, a);
  }
  throw ConfigError("unknown factorization method");
}

/// (D D^T)^{-1/2} D: the nearest tight frame with the same row space.
inline Mat tight_frame_of(const Mat& d) {
  const SpectralDecomp e = sym_eig(matmul_nt(d, d));
  for (double v : e.eigenvalues) {
    if (v <= 0.0) throw RankError("tight_frame_of needs full row rank", 0, d.rows());
  }
  return matmul(sym_apply(e, [](double v) { return 1.0 / std::sqrt(v); }), d);
}

inline constexpr double kMaxSensingCondition = 1e12;

/// S = E G^{-1} together with the dictionary it senses.
struct SensingSystem {
  Mat S;
  Mat D;
  Mat composed;  ///< S D = E A H
  RowSelector selector;
  Mat A;
  Mat H;
  double cond_G = 1.0;
  bool ill_conditioned = false;  ///< cond(G) above 1e12
};

struct SensingOptions {
  /// Throw instead of flagging when cond(G) exceeds the limit.
  bool strict_conditioning = false;
  double max_condition = kMaxSensingCondition;
};

inline SensingSystem build_sensing(const Factorization& fact, const Mat& d,
                                   const RowSelector& selector,
                                   const SensingOptions& opts = {}) {
  if (fact.residual > 1e-6) {
    throw PreconditionError("factorization residual " + std::to_string(fact.residual) +
                                " exceeds 1e-6",
                            fact.residual);
  }
  if (selector.l != d.rows() || fact.G_inv.rows() != d.rows()) {
    throw DimensionError("row selector covers " + std::to_string(selector.l) +
                         " rows but the dictionary has " + std::to_string(d.rows()));
  }
  SensingSystem s;
  s.cond_G = fact.cond_G;
  s.ill_conditioned = !(fact.cond_G <= opts.max_condition);
  if (s.ill_conditioned && opts.strict_conditioning) {
    throw ConditioningError("G is ill-conditioned (cond " + std::to_string(fact.cond_G) + ")",
                            fact.cond_G);
  }
  s.S = selector.apply(fact.G_inv);
  s.D = d;
  s.composed = matmul(s.S, d);
  s.selector = selector;
  s.A = fact.A;
  s.H = fact.H;
  return s;
}

}  // namespace ripforge
