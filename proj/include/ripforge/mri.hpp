#pragma once

// Undersampled Cartesian MRI: row masks, k-space simulation, fitting of the
// per-dimension factors, the transformed observation and the full
// coefficient-domain reconstruction.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ripforge/decompositions.hpp"
#include "ripforge/dft.hpp"
#include "ripforge/dictionaries.hpp"
#include "ripforge/ensembles.hpp"
#include "ripforge/errors.hpp"
#include "ripforge/factorize.hpp"
#include "ripforge/matrix.hpp"
#include "ripforge/metrics.hpp"
#include "ripforge/recovery.hpp"
#include "ripforge/rng.hpp"
#include "ripforge/sylvester.hpp"
#include "ripforge/tv.hpp"

namespace ripforge {

// ---------------------------------------------------------------- masks

struct AccelMask {
  std::size_t n1 = 0;
  double fraction = 1.0;  ///< share of rows selected
  double center_fraction = 0.0;
  std::vector<bool> selected;

  std::size_t count() const {
    std::size_t c = 0;
    for (bool b : selected) c += b;
    return c;
  }
};

inline constexpr std::size_t kMinMaskRows = 16;

/// round(fraction n1) rows: a block of round(center_fraction n1) rows that
/// wraps around DC (row 0), the rest uniform without replacement.
inline AccelMask make_mask(std::size_t n1, double fraction, double center_fraction, Seed seed) {
  if (n1 < kMinMaskRows) throw ConfigError("mask needs at least 16 rows");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("mask fraction must be in (0, 1]");
  if (!(center_fraction >= 0.0 && center_fraction <= fraction)) {
    throw ConfigError("center fraction must be in [0, fraction]");
  }
  const auto nd = static_cast<double>(n1);
  const auto total = static_cast<std::size_t>(std::lround(fraction * nd));
  const auto center = static_cast<std::size_t>(std::lround(center_fraction * nd));
  AccelMask m{n1, fraction, center_fraction, std::vector<bool>(n1, false)};
  const std::size_t start = (n1 - (center / 2) % n1) % n1;
  for (std::size_t k = 0; k < center; ++k) m.selected[(start + k) % n1] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n1; ++i) {
    if (!m.selected[i]) rest.push_back(i);
  }
  Rng rng(derive(seed, "mask"));
  const std::size_t extra = total - center;
  for (std::size_t k = 0; k < extra; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(rest.size() - k));
    std::swap(rest[k], rest[pick]);
    m.selected[rest[k]] = true;
  }
  return m;
}

/// 4x (8% center) or 8x (4% center) acceleration.
inline AccelMask make_mask(std::size_t n1, int accel, Seed seed) {
  switch (accel) {
    case 4:
      return make_mask(n1, 0.25, 0.08, seed);
    case 8:
      return make_mask(n1, 0.125, 0.04, seed);
    default:
      throw ConfigError("acceleration must be 4 or 8 (use the fraction overload otherwise)");
  }
}

inline AccelMask full_mask(std::size_t n1) {
  return AccelMask{n1, 1.0, 1.0, std::vector<bool>(n1, true)};
}

namespace detail {

template <class M>
M keep_rows(M a, const std::vector<bool>& rows) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (rows[i]) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = 0.0;
  }
  return a;
}

inline void check_mask(const AccelMask& mask, std::size_t rows) {
  if (mask.selected.size() != rows) {
    throw DimensionError("mask has " + std::to_string(mask.selected.size()) +
                         " rows, data has " + std::to_string(rows));
  }
}

}  // namespace detail

// -------------------------------------------------------------- k-space

/// Y = R F1 Z F2 with unselected rows exactly zero.
inline CMat simulate_kspace(const Mat& z, const AccelMask& mask, const CMat& f1, const CMat& f2) {
  detail::check_mask(mask, z.rows());
  return detail::keep_rows(matmul(matmul(f1, z), f2), mask.selected);
}

inline CMat simulate_kspace(const Mat& z, const AccelMask& mask) {
  return simulate_kspace(z, mask, dft_matrix(z.rows()), dft_matrix(z.cols()));
}

/// |F1^* Y F2^*|.
inline Mat zero_fill(const CMat& y) {
  const CMat img = matmul(matmul(adjoint(dft_matrix(y.rows())), y), adjoint(dft_matrix(y.cols())));
  Mat out(img.rows(), img.cols());
  for (std::size_t k = 0; k < img.size(); ++k) out.data()[k] = std::abs(img.data()[k]);
  return out;
}

/// Y F2^* (G2^T)^{-1}.
inline CMat transform_observation(const CMat& y, const CMat& f2, const Mat& g2,
                                  double max_condition = kMaxSensingCondition) {
  if (f2.rows() != y.cols() || g2.rows() != y.cols() || !g2.is_square()) {
    throw DimensionError("transform_observation: shapes do not conform");
  }
  const double cond = condition_number(g2);
  if (!(cond <= max_condition)) {
    throw ConditioningError("G2 is ill-conditioned (cond " + std::to_string(cond) + ")", cond);
  }
  const CMat w = matmul(y, adjoint(f2));
  // X G2^T = W  <=>  G2 X^T = W^T.
  const Lu lu(g2);
  const Mat re = transpose(lu.solve(transpose(real_part(w))));
  const Mat im = transpose(lu.solve(transpose(imag_part(w))));
  return make_complex(re, im);
}

// ------------------------------------------------- factor-fitting solvers

/// Gradient in the form P X + X Q + C, so that setting it to zero is a
/// Sylvester equation.
struct SylvesterForm {
  Mat P, Q, C;

  Mat gradient(const Mat& x) const {
    Mat g = matmul(P, x);
    g += matmul(x, Q);
    g += C;
    return g;
  }
};

namespace detail {

inline Mat symmetrize(Mat m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

inline Mat minus_identity(Mat m) {
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) -= 1.0;
  return m;
}

inline double sq(double v) { return v * v; }

}  // namespace detail

/// Penalized Lagrangian of the G fit:
///   1/2 ||R (F G - I)||^2 + <l1, Gt G - I> + <l2, G Gt - I>
///   + rho/2 (||Gt G - I||^2 + ||G Gt - I||^2).
struct GFitProblem {
  Mat F;  ///< real or imaginary part of the DFT
  std::vector<bool> rows;
  double rho = 0.02;

  double fit(const Mat& g) const {
    return 0.5 * detail::sq(frobenius_norm(
                     detail::keep_rows(detail::minus_identity(matmul(F, g)), rows)));
  }

  double lagrangian(const Mat& g, const Mat& gt, const Mat& l1, const Mat& l2) const {
    const Mat a = detail::minus_identity(matmul(gt, g));
    const Mat b = detail::minus_identity(matmul(g, gt));
    return fit(g) + inner(l1, a) + inner(l2, b) +
           0.5 * rho * (detail::sq(frobenius_norm(a)) + detail::sq(frobenius_norm(b)));
  }

  /// d/dG: (F^T R F + rho Gt^T Gt) G + G (rho Gt Gt^T)
  ///       + Gt^T l1 + l2 Gt^T - F^T R - 2 rho Gt^T.
  SylvesterForm grad_g(const Mat& gt, const Mat& l1, const Mat& l2) const {
    const Mat rf = detail::keep_rows(F, rows);
    Mat p = matmul_tn(F, rf);
    p += rho * matmul_tn(gt, gt);
    Mat c = matmul_tn(gt, l1);
    c += matmul_nt(l2, gt);
    c -= transpose(rf);
    c -= (2.0 * rho) * transpose(gt);
    return {detail::symmetrize(std::move(p)), detail::symmetrize(rho * matmul_nt(gt, gt)),
            std::move(c)};
  }

  /// d/dGt: (rho G^T G) Gt + Gt (rho G G^T) + G^T l2 + l1 G^T - 2 rho G^T.
  SylvesterForm grad_gt(const Mat& g, const Mat& l1, const Mat& l2) const {
    Mat c = matmul_tn(g, l2);
    c += matmul_nt(l1, g);
    c -= (2.0 * rho) * transpose(g);
    return {detail::symmetrize(rho * matmul_tn(g, g)), detail::symmetrize(rho * matmul_nt(g, g)),
            std::move(c)};
  }
};

/// Penalized Lagrangian of the H fit with K = G A:
///   1/2 ||D - K H||^2 + nu/2 ||H - Ht^T||^2 + <l3, Ht H - I> + <l4, H Ht - I>
///   + mu/2 (||Ht H - I||^2 + ||H Ht - I||^2).
struct HFitProblem {
  Mat D;
  Mat K;
  double nu = 0.00016;
  double mu = 0.00024;

  double fit(const Mat& h) const { return 0.5 * detail::sq(frobenius_norm(D - matmul(K, h))); }

  double lagrangian(const Mat& h, const Mat& ht, const Mat& l3, const Mat& l4) const {
    const Mat a = detail::minus_identity(matmul(ht, h));
    const Mat b = detail::minus_identity(matmul(h, ht));
    return fit(h) + 0.5 * nu * detail::sq(frobenius_norm(h - transpose(ht))) + inner(l3, a) +
           inner(l4, b) +
           0.5 * mu * (detail::sq(frobenius_norm(a)) + detail::sq(frobenius_norm(b)));
  }

  /// d/dH: (K^T K + nu I + mu Ht^T Ht) H + H (mu Ht Ht^T)
  ///       - K^T D - nu Ht^T + Ht^T l3 + l4 Ht^T - 2 mu Ht^T.
  SylvesterForm grad_h(const Mat& ht, const Mat& l3, const Mat& l4) const {
    Mat p = matmul_tn(K, K);
    p += mu * matmul_tn(ht, ht);
    for (std::size_t i = 0; i < p.rows(); ++i) p(i, i) += nu;
    Mat c = matmul_tn(ht, l3);
    c += matmul_nt(l4, ht);
    c -= matmul_tn(K, D);
    c -= (nu + 2.0 * mu) * transpose(ht);
    return {detail::symmetrize(std::move(p)), detail::symmetrize(mu * matmul_nt(ht, ht)),
            std::move(c)};
  }

  /// d/dHt: (nu I + mu H^T H) Ht + Ht (mu H H^T) + l3 H^T + H^T l4
  ///        - (2 mu + nu) H^T.
  SylvesterForm grad_ht(const Mat& h, const Mat& l3, const Mat& l4) const {
    Mat p = mu * matmul_tn(h, h);
    for (std::size_t i = 0; i < p.rows(); ++i) p(i, i) += nu;
    Mat c = matmul_nt(l3, h);
    c += matmul_tn(h, l4);
    c -= (nu + 2.0 * mu) * transpose(h);
    return {detail::symmetrize(std::move(p)), detail::symmetrize(mu * matmul_nt(h, h)),
            std::move(c)};
  }
};

struct AdmmOptions {
  std::size_t max_outer = 300;
  double tol = 1e-6;  ///< on ||Xt X - I|| + ||X Xt - I||
};

struct AdmmTraceRow {
  double fit;
  double residual_left;   ///< ||Xt X - I||_F
  double residual_right;  ///< ||X Xt - I||_F
  double lagrangian;
};

struct AdmmResult {
  Mat X;        ///< G or H
  Mat X_tilde;  ///< running inverse (G) or transpose (H) estimate
  Mat dual_left, dual_right;
  std::vector<AdmmTraceRow> trace;
  bool converged = false;
  /// Whether both constraint residuals never grew by more than 1e-8.
  bool residuals_monotone = true;
};

namespace detail {

template <class Problem, class StepX, class StepT>
AdmmResult run_admm(const Problem& prob, Mat x, Mat xt, double penalty, const AdmmOptions& opts,
                    StepX grad_x, StepT grad_t) {
  AdmmResult out;
  const std::size_t n = xt.rows();
  const std::size_t m = x.rows();
  Mat l_left(n, n), l_right(m, m);
  SylvesterOptions sopts;
  sopts.method = SylvesterMethod::spectral;
  auto record = [&]() {
    const Mat a = minus_identity(matmul(xt, x));
    const Mat b = minus_identity(matmul(x, xt));
    AdmmTraceRow row{prob.fit(x), frobenius_norm(a), frobenius_norm(b),
                     prob.lagrangian(x, xt, l_left, l_right)};
    if (!out.trace.empty()) {
      const AdmmTraceRow& prev = out.trace.back();
      if (row.residual_left > prev.residual_left + 1e-8 ||
          row.residual_right > prev.residual_right + 1e-8) {
        out.residuals_monotone = false;
      }
    }
    out.trace.push_back(row);
    return std::make_pair(a, b);
  };
  record();
  for (std::size_t it = 0; it < opts.max_outer; ++it) {
    const SylvesterForm fx = grad_x(xt, l_left, l_right);
    x = solve_sylvester(fx.P, fx.Q, fx.C, sopts);
    const SylvesterForm ft = grad_t(x, l_left, l_right);
    xt = solve_sylvester(ft.P, ft.Q, ft.C, sopts);
    if (!x.all_finite() || !xt.all_finite()) {
      throw NumericalError("factor fit diverged at outer iteration " + std::to_string(it));
    }
    auto [a, b] = record();
    l_left += penalty * a;
    l_right += penalty * b;
    out.trace.back().lagrangian = prob.lagrangian(x, xt, l_left, l_right);
    if (out.trace.back().residual_left + out.trace.back().residual_right <= opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.X = std::move(x);
  out.X_tilde = std::move(xt);
  out.dual_left = std::move(l_left);
  out.dual_right = std::move(l_right);
  return out;
}

}  // namespace detail

/// Fits G so that R (F G - I) is small while G stays invertible, by
/// alternating exact block minimizations of the penalized Lagrangian
/// (each a symmetric Sylvester equation) with dual ascent.
inline AdmmResult optimize_G(const Mat& f_part, const AccelMask& mask, double rho,
                             const Mat& g_init, const Mat& gt_init,
                             const AdmmOptions& opts = {}) {
  detail::check_mask(mask, f_part.rows());
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (!f_part.is_square() || g_init.rows() != f_part.cols() || !g_init.is_square() ||
      gt_init.rows() != g_init.rows() || !gt_init.is_square()) {
    throw DimensionError("optimize_G: shapes do not conform");
  }
  const GFitProblem prob{f_part, mask.selected, rho};
  return detail::run_admm(
      prob, g_init, gt_init, rho, opts,
      [&](const Mat& gt, const Mat& l1, const Mat& l2) { return prob.grad_g(gt, l1, l2); },
      [&](const Mat& g, const Mat& l1, const Mat& l2) { return prob.grad_gt(g, l1, l2); });
}

/// Fits H so that D is close to G A H while H stays nearly orthogonal.
inline AdmmResult optimize_H(const Mat& d, const Mat& g, const Mat& a, double nu, double mu,
                             const Mat& h_init, const Mat& ht_init,
                             const AdmmOptions& opts = {}) {
  if (!(nu > 0.0) || !(mu > 0.0)) throw ConfigError("nu and mu must be positive");
  if (g.cols() != a.rows() || d.rows() != g.rows() || h_init.rows() != a.cols() ||
      h_init.cols() != d.cols() || ht_init.rows() != h_init.cols() ||
      ht_init.cols() != h_init.rows()) {
    throw DimensionError("optimize_H: shapes do not conform");
  }
  const HFitProblem prob{d, matmul(g, a), nu, mu};
  return detail::run_admm(
      prob, h_init, ht_init, mu, opts,
      [&](const Mat& ht, const Mat& l3, const Mat& l4) { return prob.grad_h(ht, l3, l4); },
      [&](const Mat& h, const Mat& l3, const Mat& l4) { return prob.grad_ht(h, l3, l4); });
}

// ------------------------------------------------------- reconstruction

struct MriParams {
  double rho = 0.02;
  double nu = 0.00016;
  double mu = 0.00024;
  double gamma = 0.0035;
  double lambda_tv = 5e-5;
  std::size_t levels = 3;
  std::size_t outer_iters = 300;
  double outer_tol = 1e-6;
  std::size_t fista_iters = 500;
  double fista_tol = 1e-7;
  std::size_t tv_iters = 200;
  std::size_t tv_inner_iters = 20;
  /// Use the same Gaussian matrix in both dimensions (square images only).
  bool tie_ensembles = false;
  /// Skip the fits and use H_R = A^{-1} Re(F1) D1, H_I = A^{-1} Im(F1) D1.
  bool exact_factors = false;
  /// Replace each fitted H by its nearest orthogonal matrix (U V^T).
  bool polar_project_H = false;
};

struct MriFactors {
  Mat G_R, G_I, H_R, H_I;
  Mat A;
  Mat G2, A2, H2;
  std::optional<AdmmResult> fit_G_R, fit_G_I, fit_H_R, fit_H_I;
};

struct MriReconstruction {
  Mat Z;
  CoeffGrid X;
  MriFactors factors;
  FistaResult solve;
  std::optional<double> psnr;
  std::optional<double> ssim;
};

namespace detail {

/// Runs one pipeline stage and prefixes its failure message with the stage
/// name, keeping the error kind.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  }
}

}  // namespace detail

/// Highpass mask of a coefficient grid: everything outside the coarsest
/// approximation block.
inline std::vector<bool> highpass_mask(std::size_t n1, std::size_t n2, std::size_t levels) {
  return CoeffGrid::make_mask(n1, n2, approx_band(n1, levels).length,
                              approx_band(n2, levels).length);
}

/// Orthogonal polar factor U V^T of a square matrix.
inline Mat polar_factor(const Mat& h) {
  const Svd s = svd(h);
  return matmul_nt(s.U, s.V);
}

/// Factors for both dimensions.
inline MriFactors fit_mri_factors(const AccelMask& mask, const Mat& d1, const Mat& d2,
                                  const MriParams& params, Seed seed) {
  const std::size_t n1 = d1.rows(), n2 = d2.rows();
  detail::check_mask(mask, n1);
  MriFactors fac;
  fac.A2 = draw_ensemble(EnsembleKind::gaussian, n2, d2.cols(), derive(seed, "A2"));
  const Factorization f2 = detail::stage("dimension-2 factorization",
                                         [&] { return factor_spectral(d2, fac.A2); });
  fac.G2 = f2.G;
  fac.H2 = f2.H;
  if (params.tie_ensembles) {
    if (n1 != n2 || d1.cols() != d2.cols()) {
      throw ConfigError("tying the ensembles needs equal dimensions");
    }
    fac.A = fac.A2;
  } else {
    fac.A = draw_ensemble(EnsembleKind::gaussian, n1, d1.cols(), derive(seed, "A1"));
  }
  const CMat f1 = dft_matrix(n1);
  const Mat fr = real_part(f1), fi = imag_part(f1);
  if (params.exact_factors) {
    const Lu lu(fac.A);
    fac.G_R = fac.G_I = Mat::identity(n1);
    fac.H_R = lu.solve(matmul(fr, d1));
    fac.H_I = lu.solve(matmul(fi, d1));
    return fac;
  }
  const Factorization init = detail::stage("initial factorization",
                                           [&] { return factor_range(d1, fac.A); });
  AdmmOptions opts{params.outer_iters, params.outer_tol};
  fac.fit_G_R = detail::stage("G fit (real)", [&] {
    return optimize_G(fr, mask, params.rho, init.G, init.G_inv, opts);
  });
  fac.fit_G_I = detail::stage("G fit (imaginary)", [&] {
    return optimize_G(fi, mask, params.rho, init.G, init.G_inv, opts);
  });
  fac.G_R = fac.fit_G_R->X;
  fac.G_I = fac.fit_G_I->X;
  const Mat ht0 = transpose(init.H);
  fac.fit_H_R = detail::stage("H fit (real)", [&] {
    return optimize_H(d1, fac.G_R, fac.A, params.nu, params.mu, init.H, ht0, opts);
  });
  fac.fit_H_I = detail::stage("H fit (imaginary)", [&] {
    return optimize_H(d1, fac.G_I, fac.A, params.nu, params.mu, init.H, ht0, opts);
  });
  fac.H_R = fac.fit_H_R->X;
  fac.H_I = fac.fit_H_I->X;
  if (params.polar_project_H) {
    fac.H_R = polar_factor(fac.H_R);
    fac.H_I = polar_factor(fac.H_I);
  }
  return fac;
}

/// Coefficient-domain reconstruction from masked k-space. With a
/// reference image the result carries PSNR and SSIM (peak 1).
inline MriReconstruction recover_image(const CMat& y, const AccelMask& mask,
                                       const MriParams& params, Seed seed,
                                       const std::optional<Mat>& reference = std::nullopt) {
  const std::size_t n1 = y.rows(), n2 = y.cols();
  detail::check_mask(mask, n1);
  if (reference && (reference->rows() != n1 || reference->cols() != n2)) {
    throw DimensionError("reference image shape does not match k-space");
  }
  const WaveletDict w1 = detail::stage("dictionary", [&] { return cdf97_basis(n1, params.levels); });
  const WaveletDict w2 = detail::stage("dictionary", [&] { return cdf97_basis(n2, params.levels); });

  MriReconstruction out;
  out.factors = fit_mri_factors(mask, w1.D, w2.D, params, seed);
  const MriFactors& fac = out.factors;
  const CMat ytilde = detail::stage("observation transform", [&] {
    return transform_observation(y, dft_matrix(n2), fac.G2);
  });
  const Mat b = matmul(fac.A2, fac.H2);
  const ComplexSplitOp op{
      {detail::keep_rows(matmul(fac.A, fac.H_R), mask.selected), b},
      {detail::keep_rows(matmul(fac.A, fac.H_I), mask.selected), b}};
  FistaOptions fo;
  fo.gamma = params.gamma;
  fo.max_iters = params.fista_iters;
  fo.tol = params.fista_tol;
  out.solve = detail::stage("sparse coding", [&] {
    return fista_weighted_l1(op, ytilde, highpass_mask(n1, n2, params.levels), fo);
  });
  out.X = out.solve.grid;
  out.Z = matmul_nt(matmul(w1.D, out.X.X), w2.D);
  if (reference) {
    out.psnr = psnr(*reference, out.Z);
    out.ssim = ssim(*reference, out.Z);
  }
  return out;
}

}  // namespace ripforge
