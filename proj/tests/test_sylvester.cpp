#include <gtest/gtest.h>

#include "ripforge/sylvester.hpp"
#include "test_support.hpp"

using namespace ripforge;
using namespace ripforge::testing;

namespace {

// Dense oracle: (I (x) P + Q^T (x) I) vec(X) = -vec(C), column-major vec.
Mat kronecker_solve(const Mat& p, const Mat& q, const Mat& c) {
  const std::size_t m = p.rows(), n = q.rows(), N = m * n;
  Mat k(N, N);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t row = j * m + i;
      for (std::size_t a = 0; a < m; ++a) k(row, j * m + a) += p(i, a);
      for (std::size_t b = 0; b < n; ++b) k(row, b * m + i) += q(b, j);
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

SylvesterOptions with(SylvesterMethod method, std::size_t max_iters = 0) {
  SylvesterOptions o;
  o.method = method;
  o.max_iters = max_iters;
  return o;
}

}  // namespace

TEST(Sylvester, IdentityCoefficients) {
  const Mat m = random_mat(3, 4, 1);
  const Mat x = solve_sylvester(Mat::identity(3), Mat::identity(4), -2.0 * m);
  EXPECT_LE(rel_diff(x, m), 1e-14);
}

TEST(Sylvester, DiagonalClosedForm) {
  const Mat p{{1.0, 0.0}, {0.0, 2.0}};
  const Mat q{{3.0, 0.0}, {0.0, 4.0}};
  const Mat c{{1.0, -2.0}, {0.5, 7.0}};
  for (auto method : {SylvesterMethod::spectral, SylvesterMethod::krylov}) {
    const Mat x = solve_sylvester(p, q, c, with(method));
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(x(i, j), -c(i, j) / (p(i, i) + q(j, j)), 1e-10);
      }
    }
  }
}

TEST(Sylvester, SymmetricPositiveDefiniteMatchesKronecker) {
  const Mat p = random_spd(6, 1), q = random_spd(6, 2), c = random_mat(6, 6, 3);
  const Mat oracle = kronecker_solve(p, q, c);
  for (auto method : {SylvesterMethod::spectral, SylvesterMethod::krylov}) {
    const Mat x = solve_sylvester(p, q, c, with(method));
    EXPECT_LE(rel_diff(x, oracle), 1e-6);
  }
}

TEST(Sylvester, GeneralCoefficientsUseKrylov) {
  for (Seed s = 0; s < 10; ++s) {
    const std::size_t m = 3 + s % 7, n = 2 + (s * 5) % 9;
    Mat p = random_mat(m, m, derive(s, 1));
    Mat q = random_mat(n, n, derive(s, 2));
    for (std::size_t i = 0; i < m; ++i) p(i, i) += 2.0 * std::sqrt(static_cast<double>(m));
    for (std::size_t i = 0; i < n; ++i) q(i, i) += 2.0 * std::sqrt(static_cast<double>(n));
    const Mat c = random_mat(m, n, derive(s, 3));
    const Mat oracle = kronecker_solve(p, q, c);
    const Mat x = solve_sylvester(p, q, c);
    EXPECT_LE(rel_diff(x, oracle), 1e-6);
    const double bound = 1e-12 * (frobenius_norm(p) + frobenius_norm(q)) * frobenius_norm(x) +
                         1e-12 * frobenius_norm(c);
    EXPECT_LE(sylvester_residual(p, q, c, x), 1.0001 * bound);
  }
}

TEST(Sylvester, WarmStartAtSolutionReturnsImmediately) {
  const Mat p = random_spd(4, 5), q = random_spd(3, 6), c = random_mat(4, 3, 7);
  const Mat x = kronecker_solve(p, q, c);
  SylvesterOptions opts = with(SylvesterMethod::krylov, 1);
  opts.initial = x;
  const Mat y = solve_sylvester(p, q, c, opts);
  EXPECT_LE(rel_diff(y, x), 1e-9);
}

TEST(Sylvester, SingularPencilIsReported) {
  const Mat p{{1.0, 0.0}, {0.0, 2.0}};
  const Mat q{{-2.0, 0.0}, {0.0, 5.0}};
  EXPECT_THROW(solve_sylvester(p, q, random_mat(2, 2, 1), with(SylvesterMethod::spectral)),
               SingularityError);
  EXPECT_THROW(solve_sylvester(p, q, random_mat(2, 2, 1),
                               with(SylvesterMethod::krylov, 200)),
               SingularityError);
}

TEST(Sylvester, ShapeAndSymmetryChecks) {
  EXPECT_THROW(solve_sylvester(Mat(2, 2), Mat(3, 3), Mat(3, 2)), DimensionError);
  EXPECT_THROW(solve_sylvester(Mat{{1, 2}, {0, 1}}, Mat::identity(2), Mat(2, 2),
                               with(SylvesterMethod::spectral)),
               SymmetryError);
}
