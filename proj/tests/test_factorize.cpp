#include <gtest/gtest.h>

#include "ripforge/dictionaries.hpp"
#include "ripforge/factorize.hpp"
#include "test_support.hpp"

using namespace ripforge;
using namespace ripforge::testing;

namespace {

void expect_exact(const Factorization& f, const Mat& d) {
  const double n = static_cast<double>(d.cols());
  EXPECT_LE(f.residual, 1e-8);
  EXPECT_LE(f.orth_defect, 1e-8 * n);
  EXPECT_GT(svd(f.G).singular_values.back(), 0.0);
  EXPECT_LE(rel_diff(matmul(f.G, f.G_inv), Mat::identity(d.rows())), 1e-8);
  // Recompute the residual independently of the library's own diagnostic.
  EXPECT_LE(rel_diff(matmul(matmul(f.G, f.A), f.H), d), 1e-8);
}

}  // namespace

TEST(FactorSpectral, EqualInputsGiveIdentities) {
  const Mat d = random_mat(6, 10, 1);
  const Factorization f = factor_spectral(d, d);
  EXPECT_LE(rel_diff(f.G, Mat::identity(6)), 1e-8);
  EXPECT_LE(rel_diff(f.H, Mat::identity(10)), 1e-8);
}

TEST(FactorSpectral, RandomPairSatisfiesAllIdentities) {
  for (Seed s = 0; s < 5; ++s) {
    const Mat d = random_mat(8, 16, derive(s, 1)), a = random_mat(8, 16, derive(s, 2));
    const Factorization f = factor_spectral(d, a);
    expect_exact(f, d);
    // The inverse of G maps D D^T onto A A^T.
    const Mat lhs = matmul_nt(matmul(f.G_inv, matmul_nt(d, d)), f.G_inv);
    EXPECT_LE(rel_diff(lhs, matmul_nt(a, a)), 1e-8);
    EXPECT_LE(rel_diff(matmul(f.G_inv, d), matmul(a, f.H)), 1e-8);
  }
}

TEST(FactorSpectral, RankDeficientPairs) {
  const Mat d = random_rank(5, 9, 3, 4), a = random_rank(5, 9, 3, 5);
  expect_exact(factor_spectral(d, a), d);
  expect_exact(factor_range(d, a), d);
}

TEST(FactorSpectral, RankMismatchRejected) {
  const Mat d = random_rank(4, 8, 3, 1), a = random_mat(4, 8, 2);
  try {
    factor_spectral(d, a);
    FAIL() << "expected a rank error";
  } catch (const RankError& e) {
    EXPECT_EQ(e.rank_a(), 3u);
    EXPECT_EQ(e.rank_b(), 4u);
  }
  EXPECT_THROW(factor_range(d, a), RankError);
}

TEST(FactorRange, EqualInputs) {
  const Mat d = random_mat(5, 12, 8);
  const Factorization f = factor_range(d, d);
  expect_exact(f, d);
}

TEST(FactorRange, RandomPairAndIdentityForm) {
  const Mat d = random_mat(8, 16, 3), a = random_mat(8, 16, 4);
  const Factorization f = factor_range(d, a);
  expect_exact(f, d);
  // G A U_A = D U_D for the row-space bases.
  const RangeNullBases ba = range_null_bases(a), bd = range_null_bases(d);
  EXPECT_LE(rel_diff(matmul(matmul(f.G, a), ba.range), matmul(d, bd.range)), 1e-8);
}

TEST(FactorRange, SquareInvertibleHasNoNullspace) {
  const Mat d = random_mat(6, 6, 5), a = random_mat(6, 6, 6);
  const Factorization f = factor_range(d, a);
  expect_exact(f, d);
  const RangeNullBases ba = range_null_bases(a), bd = range_null_bases(d);
  EXPECT_EQ(ba.null.cols(), 0u);
  EXPECT_LE(rel_diff(f.H, matmul_nt(ba.range, bd.range)), 1e-12);
}

TEST(FactorTightFrame, BothTightGivesOrthonormalG) {
  const Mat d = tight_frame_of(random_mat(8, 16, 1));
  const Mat a = tight_frame_of(random_mat(8, 16, 2));
  const Factorization f = factor_tight_frame(d, a);
  expect_exact(f, d);
  EXPECT_LE(orthonormality_defect(f.G), 1e-8);
}

TEST(FactorTightFrame, SameFrameGivesIdentity) {
  const Mat d = tight_frame_of(random_mat(6, 14, 3));
  EXPECT_LE(rel_diff(factor_tight_frame(d, d).G, Mat::identity(6)), 1e-8);
}

TEST(FactorTightFrame, GaussianEnsembleAndRotation) {
  const Mat d = tight_frame_of(random_mat(8, 16, 4));
  const Mat a = draw_ensemble(EnsembleKind::gaussian, 8, 16, 5);
  expect_exact(factor_tight_frame(d, a), d);
  expect_exact(factor_tight_frame(d, a, random_orthonormal(8, 6)), d);
}

TEST(FactorTightFrame, NonTightRejectedWithMeasuredDefect) {
  const Mat d = random_mat(4, 9, 1);
  try {
    factor_tight_frame(d, random_mat(4, 9, 2));
    FAIL() << "expected precondition error";
  } catch (const PreconditionError& e) {
    EXPECT_NEAR(e.measured(), orthonormality_defect(d), 1e-12);
  }
}

TEST(Factorize, ShapeChecks) {
  EXPECT_THROW(factor_spectral(Mat(3, 5), Mat(3, 6)), DimensionError);
  EXPECT_THROW(factor_range(Mat(6, 3), Mat(6, 3)), DimensionError);
}

TEST(BuildSensing, IdentityCase) {
  const Mat d = random_mat(5, 9, 1);
  const Factorization f = factor_spectral(d, d);
  const SensingSystem s = build_sensing(f, d, RowSelector::full(5));
  EXPECT_LE(rel_diff(s.S, Mat::identity(5)), 1e-8);
  EXPECT_LE(rel_diff(s.composed, d), 1e-8);
}

TEST(BuildSensing, ComposedEqualsSelectedAH) {
  const Mat d = random_mat(8, 16, 2), a = random_mat(8, 16, 3);
  for (auto method : {FactorMethod::spectral, FactorMethod::range}) {
    const Factorization f = factorize(method, d, a);
    const RowSelector e = draw_row_selector(4, 8, 7);
    const SensingSystem s = build_sensing(f, d, e);
    const Mat eah = e.apply(matmul(a, f.H));
    EXPECT_LE(frobenius_norm(s.composed - eah), 1e-8 * frobenius_norm(d));
    EXPECT_FALSE(s.ill_conditioned);
  }
}

TEST(BuildSensing, ConditioningIsSurfaced) {
  Mat d = random_mat(4, 8, 1);
  // Make D nearly rank deficient so G must stretch by ~1e7 in one direction.
  for (std::size_t j = 0; j < 8; ++j) d(3, j) = d(2, j) + 1e-7 * d(3, j);
  const Factorization f = factor_spectral(d, random_mat(4, 8, 2));
  SensingOptions loose;
  loose.max_condition = 1e3;
  const SensingSystem s = build_sensing(f, d, RowSelector::full(4), loose);
  EXPECT_TRUE(s.ill_conditioned);
  SensingOptions strict = loose;
  strict.strict_conditioning = true;
  EXPECT_THROW(build_sensing(f, d, RowSelector::full(4), strict), ConditioningError);
}

TEST(BuildSensing, WaveletDictionaryImprovesRip) {
  // 128 x 1024 wavelet dictionary. Sensing it through the factorization
  // yields E A H, whose RIP estimate should beat raw Gaussian rows applied
  // to the (coherent) dictionary.
  const WaveletDict wd = cdf97_dictionary(128, 5, 1024, 3);
  const Mat a = draw_ensemble(EnsembleKind::gaussian, 128, 1024, 4);
  const Factorization f = factor_range(wd.D, a);
  const SensingSystem s = build_sensing(f, wd.D, draw_row_selector(64, 128, 5));
  const Mat raw = matmul(draw_ensemble(EnsembleKind::gaussian, 64, 128, 6), wd.D);
  // Scale both to unit average column energy before comparing.
  const double composed = estimate_rip_delta(normalize_columns(s.composed), 10, 200, 7).delta;
  const double mismatched = estimate_rip_delta(normalize_columns(raw), 10, 200, 7).delta;
  EXPECT_LT(composed, mismatched);
}
