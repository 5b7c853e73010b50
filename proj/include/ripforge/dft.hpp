#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge {

/// Unitary DFT matrix: entry (j, k) = n^{-1/2} exp(-2 pi i jk / n).
/// Symmetric, and F F^* = I.
inline CMat dft_matrix(std::size_t n) {
  if (n == 0) throw DimensionError("DFT size must be at least 1");
  CMat f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  // Reduce jk mod n before taking the angle so large products keep full
  // precision.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t e = (j * k) % n;
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(e) /
                           static_cast<double>(n);
      f(j, k) = Complex(scale * std::cos(angle), scale * std::sin(angle));
    }
  }
  return f;
}

/// ||F F^* - I||_F.
inline double unitarity_defect(const CMat& f) {
  CMat g = matmul(f, adjoint(f));
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return frobenius_norm(g);
}

}  // namespace ripforge
