// Acceptance checks. One PASS/FAIL line per criterion; `--only <name>` runs a
// single one, `--list` prints the names. Exit status is 0 only when every
// criterion that ran passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ripforge/ripforge.hpp"

using namespace ripforge;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Mat gaussian(std::size_t r, std::size_t c, Seed seed) {
  Rng rng(seed);
  Mat m(r, c);
  for (double& v : m.data()) v = rng.gaussian();
  return m;
}

double rel(const Mat& a, const Mat& b) {
  const double nb = frobenius_norm(b);
  return frobenius_norm(a - b) / (nb > 0.0 ? nb : 1.0);
}

// ------------------------------------------------------- factorization

struct SuiteStats {
  double residual = 0.0, orth_scaled = 0.0, prop_ii = 0.0, identity = 0.0;
  std::size_t pairs = 0;
  double seconds = 0.0;
};

constexpr std::size_t kPairsPerShape = 100;

/// 100 pairs per shape, all three constructions. The tight-frame
/// construction runs on the tight-frame version of the same D.
SuiteStats factorization_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteStats s;
  const std::pair<std::size_t, std::size_t> shapes[] = {{8, 16}, {32, 64}, {128, 256}};
  for (const auto& [l, n] : shapes) {
    for (std::size_t p = 0; p < kPairsPerShape; ++p) {
      const Seed seed = derive(derive(2024, l), p);
      const Mat d = gaussian(l, n, derive(seed, "D"));
      const Mat a = draw_ensemble(EnsembleKind::gaussian, l, n, derive(seed, "A"));
      const RowSelector sel = draw_row_selector(l / 2, l, derive(seed, "E"));
      for (FactorMethod m : {FactorMethod::spectral, FactorMethod::range, FactorMethod::tight_frame}) {
        const Mat dm = m == FactorMethod::tight_frame ? tight_frame_of(d) : d;
        const Factorization f = factorize(m, dm, a);
        s.residual = std::max(s.residual, rel(matmul(matmul(f.G, f.A), f.H), dm));
        const double orth = frobenius_norm(matmul_nt(f.H, f.H) - Mat::identity(n));
        s.orth_scaled = std::max(s.orth_scaled, orth / static_cast<double>(n));
        const double lhs_norm = frobenius_norm(dm);
        s.identity = std::max(s.identity, frobenius_norm(sel.apply(matmul(f.G_inv, dm)) -
                                                         sel.apply(matmul(a, f.H))) /
                                              lhs_norm);
        if (m == FactorMethod::spectral) {
          const Mat lhs = matmul_nt(matmul(f.G_inv, matmul_nt(dm, dm)), f.G_inv);
          s.prop_ii = std::max(s.prop_ii, rel(lhs, matmul_nt(a, a)));
        }
      }
      ++s.pairs;
    }
  }
  s.seconds = seconds_since(t0);
  return s;
}

Outcome factorization_exactness() {
  const SuiteStats s = factorization_suite();
  const bool pass = s.residual <= 1e-8 && s.orth_scaled <= 1e-8 && s.prop_ii <= 1e-8 && s.seconds < 60.0;
  return {pass, fmt("%zu pairs x 3 constructions: max residual %.2e, max ||HH^T-I||/n %.2e, "
                    "spectral covariance identity %.2e, %.1f s (limits 1e-8, 1e-8, 1e-8, 60 s)",
                    s.pairs, s.residual, s.orth_scaled, s.prop_ii, s.seconds)};
}

Outcome selected_rows_identity() {
  const SuiteStats s = factorization_suite();
  return {s.identity <= 1e-8,
          fmt("max ||E G^-1 D - E A H||_F / ||D||_F = %.2e over %zu pairs x 3 constructions "
              "(limit 1e-8)",
              s.identity, s.pairs)};
}

Outcome tight_frame_orthonormal_g() {
  double worst = 0.0;
  for (Seed s = 0; s < 20; ++s) {
    const Mat d = tight_frame_of(gaussian(16, 48, derive(7, 2 * s)));
    const Mat a = tight_frame_of(gaussian(16, 48, derive(7, 2 * s + 1)));
    for (FactorMethod m : {FactorMethod::spectral, FactorMethod::range, FactorMethod::tight_frame}) {
      const Factorization f = factorize(m, d, a);
      worst = std::max(worst, frobenius_norm(matmul_nt(f.G, f.G) - Mat::identity(16)));
    }
  }
  return {worst <= 1e-8,
          fmt("20 tight-frame pairs 16x48, 3 constructions: max ||GG^T - I||_F = %.2e (limit 1e-8)",
              worst)};
}

// ----------------------------------------------------------- Sylvester

// (I (x) P + Q^T (x) I) vec(X) = -vec(C), column-major vec, dense LU.
Mat kronecker_solve(const Mat& p, const Mat& q, const Mat& c) {
  const std::size_t m = p.rows(), n = q.rows(), N = m * n;
  Mat k(N, N);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t a = 0; a < m; ++a) k(j * m + i, j * m + a) += p(i, a);
      for (std::size_t b = 0; b < n; ++b) k(j * m + i, b * m + i) += q(b, j);
    }
  }
  Mat rhs(N, 1);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) rhs(j * m + i, 0) = -c(i, j);
  }
  const Mat v = Lu(k).solve(rhs);
  Mat x(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) x(i, j) = v(j * m + i, 0);
  }
  return x;
}

Outcome sylvester_oracle() {
  double worst_spectral = 0.0, worst_krylov = 0.0, worst_general = 0.0;
  for (Seed s = 0; s < 50; ++s) {
    Rng rng(derive(31, s));
    const std::size_t m = 1 + rng.below(12), n = 1 + rng.below(12);
    const Mat bp = gaussian(m, m, derive(s, 1)), bq = gaussian(n, n, derive(s, 2));
    Mat p = matmul_tn(bp, bp), q = matmul_tn(bq, bq);
    for (std::size_t i = 0; i < m; ++i) p(i, i) += 0.5;
    for (std::size_t i = 0; i < n; ++i) q(i, i) += 0.5;
    const Mat c = gaussian(m, n, derive(s, 3));
    const Mat oracle = kronecker_solve(p, q, c);
    SylvesterOptions so;
    so.method = SylvesterMethod::spectral;
    worst_spectral = std::max(worst_spectral, rel(solve_sylvester(p, q, c, so), oracle));
    so.method = SylvesterMethod::krylov;
    worst_krylov = std::max(worst_krylov, rel(solve_sylvester(p, q, c, so), oracle));

    // Non-symmetric coefficients: only the Krylov path applies.
    Mat pg = gaussian(m, m, derive(s, 4)), qg = gaussian(n, n, derive(s, 5));
    for (std::size_t i = 0; i < m; ++i) pg(i, i) += 2.0 * std::sqrt(static_cast<double>(m)) + 1.0;
    for (std::size_t i = 0; i < n; ++i) qg(i, i) += 2.0 * std::sqrt(static_cast<double>(n)) + 1.0;
    worst_general = std::max(worst_general, rel(solve_sylvester(pg, qg, c, so), kronecker_solve(pg, qg, c)));
  }
  const bool pass = worst_spectral <= 1e-6 && worst_krylov <= 1e-6 && worst_general <= 1e-6;
  return {pass, fmt("50 instances, dims <= 12: spectral %.2e, krylov %.2e, krylov on non-symmetric "
                    "%.2e (limit 1e-6 relative)",
                    worst_spectral, worst_krylov, worst_general)};
}

// ----------------------------------------------------------- gradients

Mat central_difference(const Mat& x, double h, const auto& f) {
  Mat out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      Mat xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      out(i, j) = (f(xp) - f(xm)) / (2 * h);
    }
  }
  return out;
}

Outcome gradient_fidelity() {
  constexpr std::size_t n = 6;
  constexpr double h = 1e-5;
  double wg = 0.0, wgt = 0.0, wh = 0.0, wht = 0.0;
  const MriParams defaults;
  for (Seed s = 0; s < 20; ++s) {
    // Rows of a 4x mask on 16 rows, cut to 6, with DC kept.
    std::vector<bool> rows = make_mask(16, 4, s).selected;
    rows.resize(n);
    rows[0] = true;
    const GFitProblem gp{gaussian(n, n, derive(s, 1)), rows, defaults.rho};
    const Mat g = gaussian(n, n, derive(s, 2)), gt = gaussian(n, n, derive(s, 3));
    const Mat l1 = gaussian(n, n, derive(s, 4)), l2 = gaussian(n, n, derive(s, 5));
    wg = std::max(wg, rel(gp.grad_g(gt, l1, l2).gradient(g),
                          central_difference(g, h, [&](const Mat& v) { return gp.lagrangian(v, gt, l1, l2); })));
    wgt = std::max(wgt, rel(gp.grad_gt(g, l1, l2).gradient(gt),
                            central_difference(gt, h, [&](const Mat& v) { return gp.lagrangian(g, v, l1, l2); })));

    // Default weights, then weights large enough that the coupling terms
    // dominate the comparison.
    for (const auto& [nu, mu] : {std::pair{defaults.nu, defaults.mu}, std::pair{0.3, 0.2}}) {
      const HFitProblem hp{gaussian(n, n, derive(s, 6)), gaussian(n, n, derive(s, 7)), nu, mu};
      const Mat hm = gaussian(n, n, derive(s, 8)), ht = gaussian(n, n, derive(s, 9));
      const Mat l3 = gaussian(n, n, derive(s, 10)), l4 = gaussian(n, n, derive(s, 11));
      wh = std::max(wh, rel(hp.grad_h(ht, l3, l4).gradient(hm),
                            central_difference(hm, h, [&](const Mat& v) { return hp.lagrangian(v, ht, l3, l4); })));
      wht = std::max(wht, rel(hp.grad_ht(hm, l3, l4).gradient(ht),
                              central_difference(ht, h, [&](const Mat& v) { return hp.lagrangian(hm, v, l3, l4); })));
    }
  }
  const double worst = std::max({wg, wgt, wh, wht});
  return {worst <= 1e-5,
          fmt("20 random 6x6 instances each: G %.2e, G~ %.2e, H %.2e, H~ %.2e (limit 1e-5 relative)",
              wg, wgt, wh, wht)};
}

// ---------------------------------------------------- phase transition

Outcome phase_transition_desk() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (EnsembleKind e : {EnsembleKind::gaussian, EnsembleKind::bernoulli}) {
    PhaseTransitionConfig c;
    c.ensemble = e;
    const ExperimentRecord r = run_phase_transition(c);
    double gap = 0.0, gap_ratio = 0.0, drop = 0.0;
    std::vector<double> syn, ben;
    for (const PhasePoint& p : r.points) (p.arm == Arm::synthesis ? syn : ben).push_back(p.success_prob);
    for (std::size_t i = 0; i < syn.size(); ++i) {
      if (std::abs(syn[i] - ben[i]) > gap) {
        gap = std::abs(syn[i] - ben[i]);
        gap_ratio = c.cs_ratios[i];
      }
      if (i > 0) drop = std::max({drop, syn[i - 1] - syn[i], ben[i - 1] - ben[i]});
    }
    const bool ok = gap <= 0.15 && drop <= 0.1;
    pass = pass && ok;
    std::string curve;
    for (std::size_t i = 0; i < syn.size(); ++i) curve += fmt(" %.3f/%.3f", syn[i], ben[i]);
    detail += fmt("%s%s: max |gap| %.3f at m=%zu, max drop %.3f [%s]; curve (factorized/plain):%s",
                  detail.empty() ? "" : "; ", std::string(to_string(e)).c_str(), gap,
                  c.measurements(gap_ratio), drop, ok ? "ok" : "out of tolerance", curve.c_str());
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 600.0;
  return {pass, detail + fmt("; %.1f s (limits: gap 0.15, drop 0.1, 600 s)", secs)};
}

// ------------------------------------------------------------- CoSaMP

Outcome cosamp_exact_recovery() {
  std::size_t exact = 0;
  for (Seed t = 0; t < 200; ++t) {
    Mat phi = gaussian(100, 256, derive(404, 2 * t));
    phi *= 1.0 / std::sqrt(100.0);
    const Vec x = draw_sparse_signal(256, 5, derive(404, 2 * t + 1));
    SparseRecoveryConfig rc;
    rc.k = 5;
    const RecoveryResult r = cosamp(phi, matvec(phi, x), rc);
    double err = 0.0;
    for (std::size_t j = 0; j < 256; ++j) err += (r.estimate[j] - x[j]) * (r.estimate[j] - x[j]);
    if (std::sqrt(err) <= 1e-6) ++exact;
  }
  const double rate = exact / 200.0;
  return {rate >= 0.9, fmt("Gaussian 100x256, k=5: %zu/200 exact (l2 error <= 1e-6), rate %.3f "
                           "(limit 0.90)",
                           exact, rate)};
}

// ------------------------------------------------------------- wavelet

Outcome wavelet_round_trip() {
  const std::pair<std::size_t, std::size_t> sizes[] = {
      {32, 32}, {64, 64}, {96, 96}, {128, 128}, {160, 160}, {256, 256}, {32, 256}, {256, 64}};
  double worst = 0.0;
  std::size_t cases = 0;
  for (const auto& [r, c] : sizes) {
    for (std::size_t levels = 1; levels <= 3; ++levels) {
      const Mat img = gaussian(r, c, derive(r * 1000 + c, levels));
      const Mat coeffs = wavelet_2d(img, levels, WaveletDirection::analyze);
      worst = std::max(worst, rel(wavelet_2d(coeffs, levels, WaveletDirection::synthesize), img));
      ++cases;
    }
  }
  return {worst <= 1e-8, fmt("%zu random images, sizes 32..256, levels 1..3: max relative residual "
                             "%.2e (limit 1e-8)",
                             cases, worst)};
}

// ----------------------------------------------------------------- MRI

Outcome mri_pipeline() {
  // Full mask, no regularization, exact factors.
  const Mat small = make_phantom(64, 64);
  MriParams lossless;
  lossless.gamma = 0.0;
  lossless.exact_factors = true;
  lossless.fista_iters = 5000;
  lossless.fista_tol = 0.0;
  const AccelMask full = full_mask(64);
  const MriReconstruction full_rec = recover_image(simulate_kspace(small, full), full, lossless, 7);
  const double lossless_err = rel(full_rec.Z, small);

  // 128x128 phantom at 4x with the default parameters.
  const Mat img = make_phantom(128, 128);
  const AccelMask mask = make_mask(128, 4, 1);
  const CMat y = simulate_kspace(img, mask);
  const double zf = psnr(img, zero_fill(y));
  const MriParams params;
  const auto t0 = std::chrono::steady_clock::now();
  const MriReconstruction rec = recover_image(y, mask, params, 7, img);
  const double t_prop = seconds_since(t0);
  TvOptions to;
  to.lambda = params.lambda_tv;
  to.max_iters = params.tv_iters;
  to.inner_iters = params.tv_inner_iters;
  const TvResult tv = tv_reconstruct(y, mask.selected, dft_matrix(128), dft_matrix(128), to);
  const double tv_psnr = psnr(img, tv.Z), tv_ssim = ssim(img, tv.Z);

  const bool ok_lossless = lossless_err <= 1e-4;
  const bool ok_gain = *rec.psnr >= zf + 2.0;
  const bool ok_tv = std::isfinite(tv_psnr) && std::isfinite(tv_ssim);
  return {ok_lossless && ok_gain && ok_tv,
          fmt("full mask, gamma=0: relative error %.2e (limit 1e-4) [%s]; 128x128 phantom 4x: "
              "proposed %.2f dB (SSIM %.3f, %.0f s) vs zero-filled %.2f dB, gain %+.2f dB "
              "(need +2.00) [%s]; TV %.2f dB / SSIM %.3f [%s]",
              lossless_err, ok_lossless ? "ok" : "fail", *rec.psnr, *rec.ssim, t_prop, zf,
              *rec.psnr - zf, ok_gain ? "ok" : "fail", tv_psnr, tv_ssim, ok_tv ? "ok" : "fail")};
}

Outcome mask_structure() {
  std::string detail;
  bool pass = true;
  for (std::size_t n1 : {128, 256, 640}) {
    for (const auto& [accel, frac, center_frac] : {std::tuple{4, 0.25, 0.08}, std::tuple{8, 0.125, 0.04}}) {
      const std::size_t want = static_cast<std::size_t>(std::lround(frac * n1));
      const std::size_t want_center = static_cast<std::size_t>(std::lround(center_frac * n1));
      for (Seed s = 0; s < 10; ++s) {
        const AccelMask m = make_mask(n1, accel, s);
        bool ok = m.count() == want;
        // Contiguous block around DC: rows -floor(c/2) .. c - floor(c/2) - 1 (mod n1).
        for (std::size_t k = 0; k < want_center; ++k) {
          ok = ok && m.selected[(n1 - want_center / 2 + k) % n1];
        }
        pass = pass && ok;
      }
      detail += fmt("%sn1=%zu %dx: %zu rows, %zu-row center", detail.empty() ? "" : "; ", n1, accel,
                    want, want_center);
    }
  }
  return {pass, detail + " (10 seeds each)"};
}

// ----------------------------------------------------- reproducibility

Outcome reproducibility() {
  const std::filesystem::path dir = std::filesystem::path(RIPFORGE_TEST_TMP) / "acceptance_repro";
  std::filesystem::create_directories(dir);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  PhaseTransitionConfig c;
  c.ensemble = EnsembleKind::bernoulli;
  c.workers = 1;
  write_phase_outputs(run_phase_transition(c), (dir / "serial").string());
  c.workers = 4;
  write_phase_outputs(run_phase_transition(c), (dir / "parallel").string());
  const bool phase_same = slurp(dir / "serial.csv") == slurp(dir / "parallel.csv");

  MriParams p;
  p.outer_iters = 40;
  p.fista_iters = 100;
  p.tv_iters = 40;
  const std::vector<MriMethod> methods{MriMethod::proposed, MriMethod::tv, MriMethod::zero_fill};
  run_mri_benchmark({"phantom:32"}, {4, 8}, methods, p, 5, (dir / "mri_a").string());
  run_mri_benchmark({"phantom:32"}, {4, 8}, methods, p, 5, (dir / "mri_b").string());
  const bool mri_same = slurp(dir / "mri_a" / "mri_metrics.csv") == slurp(dir / "mri_b" / "mri_metrics.csv");
  return {phase_same && mri_same,
          fmt("desk phase CSV serial vs 4 workers: %s (%zu bytes); MRI metrics CSV rerun: %s",
              phase_same ? "identical" : "DIFFERENT", slurp(dir / "serial.csv").size(),
              mri_same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"factorization_exactness", factorization_exactness},
      {"selected_rows_identity", selected_rows_identity},
      {"tight_frame_orthonormal_g", tight_frame_orthonormal_g},
      {"sylvester_oracle", sylvester_oracle},
      {"gradient_fidelity", gradient_fidelity},
      {"phase_transition_desk", phase_transition_desk},
      {"cosamp_exact_recovery", cosamp_exact_recovery},
      {"wavelet_round_trip", wavelet_round_trip},
      {"mri_pipeline", mri_pipeline},
      {"mask_structure", mask_structure},
      {"reproducibility", reproducibility},
  };
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--list") == 0) {
      for (const Criterion& c : criteria) std::printf("%s\n", c.name);
      return 0;
    }
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--list] [--only <criterion>]\n");
      return 2;
    }
  }
  bool all = true, any = false;
  for (const Criterion& c : criteria) {
    if (!only.empty() && only != c.name) continue;
    any = true;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  if (!any) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return all ? 0 : 1;
}
