#pragma once

// CDF 9/7 biorthogonal wavelet by lifting, with periodic extension.
// One analysis level splits x into even (s) and odd (d) samples, then
//   d += a (s_i + s_{i+1});  s += b (d_{i-1} + d_i);
//   d += g (s_i + s_{i+1});  s += e (d_{i-1} + d_i);
//   s *= K;  d /= K.
// Multi-level coefficients are laid out [approx | coarsest detail ... finest detail].

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge {

namespace cdf97 {
inline constexpr double kAlpha = -1.58613434205992355842831545133740;
inline constexpr double kBeta = -0.05298011857296141462320426563540;
inline constexpr double kGamma = 0.88291107553093294440017739678630;
inline constexpr double kDelta = 0.44350685204397115990191727725460;
inline constexpr double kScale = 1.14960439886024115979507564219923;
}  // namespace cdf97

/// Smallest approximation band allowed at the deepest level. Periodized
/// atoms wrap onto themselves more and more below this; at length 128 it
/// admits five levels and rejects a sixth.
inline constexpr std::size_t kMinCoarseLength = 4;

inline void check_wavelet_levels(std::size_t len, std::size_t levels) {
  if (levels == 0) throw DimensionError("wavelet transform needs at least one level");
  if (levels >= 8 * sizeof(std::size_t) || len % (std::size_t{1} << levels) != 0 ||
      (len >> levels) < kMinCoarseLength) {
    throw DimensionError("length " + std::to_string(len) + " does not support " +
                         std::to_string(levels) +
                         " wavelet levels (needs a multiple of 2^levels with at least " +
                         std::to_string(kMinCoarseLength) + " coarse samples)");
  }
}

namespace detail {

/// One analysis level on x[0..n), n even, in place; output [s | d].
inline void cdf97_analyze_level(double* x, std::size_t n, std::vector<double>& buf) {
  const std::size_t h = n / 2;
  buf.resize(n);
  double* s = buf.data();
  double* d = buf.data() + h;
  for (std::size_t i = 0; i < h; ++i) {
    s[i] = x[2 * i];
    d[i] = x[2 * i + 1];
  }
  using namespace cdf97;
  for (std::size_t i = 0; i < h; ++i) d[i] += kAlpha * (s[i] + s[(i + 1) % h]);
  for (std::size_t i = 0; i < h; ++i) s[i] += kBeta * (d[(i + h - 1) % h] + d[i]);
  for (std::size_t i = 0; i < h; ++i) d[i] += kGamma * (s[i] + s[(i + 1) % h]);
  for (std::size_t i = 0; i < h; ++i) s[i] += kDelta * (d[(i + h - 1) % h] + d[i]);
  for (std::size_t i = 0; i < h; ++i) {
    x[i] = s[i] * kScale;
    x[h + i] = d[i] / kScale;
  }
}

/// Inverse of cdf97_analyze_level.
inline void cdf97_synthesize_level(double* x, std::size_t n, std::vector<double>& buf) {
  const std::size_t h = n / 2;
  buf.resize(n);
  double* s = buf.data();
  double* d = buf.data() + h;
  using namespace cdf97;
  for (std::size_t i = 0; i < h; ++i) {
    s[i] = x[i] / kScale;
    d[i] = x[h + i] * kScale;
  }
  for (std::size_t i = 0; i < h; ++i) s[i] -= kDelta * (d[(i + h - 1) % h] + d[i]);
  for (std::size_t i = 0; i < h; ++i) d[i] -= kGamma * (s[i] + s[(i + 1) % h]);
  for (std::size_t i = 0; i < h; ++i) s[i] -= kBeta * (d[(i + h - 1) % h] + d[i]);
  for (std::size_t i = 0; i < h; ++i) d[i] -= kAlpha * (s[i] + s[(i + 1) % h]);
  for (std::size_t i = 0; i < h; ++i) {
    x[2 * i] = s[i];
    x[2 * i + 1] = d[i];
  }
}

}  // namespace detail

/// Multi-level forward transform of one signal, in place.
inline void cdf97_analyze(std::span<double> x, std::size_t levels) {
  check_wavelet_levels(x.size(), levels);
  std::vector<double> buf;
  for (std::size_t j = 0, n = x.size(); j < levels; ++j, n /= 2) {
    detail::cdf97_analyze_level(x.data(), n, buf);
  }
}

/// Multi-level inverse transform of one signal, in place.
inline void cdf97_synthesize(std::span<double> x, std::size_t levels) {
  check_wavelet_levels(x.size(), levels);
  std::vector<double> buf;
  for (std::size_t j = levels; j-- > 0;) {
    detail::cdf97_synthesize_level(x.data(), x.size() >> j, buf);
  }
}

/// Offset and length of the level-j detail band (j = 1 finest) in the
/// multi-level layout of a length-n signal.
struct Band {
  std::size_t offset;
  std::size_t length;
};

inline Band detail_band(std::size_t n, std::size_t level) {
  return {n >> level, n >> level};
}

inline Band approx_band(std::size_t n, std::size_t levels) { return {0, n >> levels}; }

enum class WaveletDirection { analyze, synthesize };

/// Separable 2D transform: the full 1D multi-level transform along every
/// row, then along every column. Synthesis of coefficients X therefore
/// equals S1 X S2^T for the 1D synthesis matrices S1, S2.
inline Mat wavelet_2d(const Mat& image, std::size_t levels, WaveletDirection dir) {
  check_wavelet_levels(image.rows(), levels);
  check_wavelet_levels(image.cols(), levels);
  auto run = [&](std::span<double> v) {
    if (dir == WaveletDirection::analyze) {
      cdf97_analyze(v, levels);
    } else {
      cdf97_synthesize(v, levels);
    }
  };
  Mat out = image;
  for (std::size_t i = 0; i < out.rows(); ++i) run(out.row(i));
  std::vector<double> col(out.rows());
  for (std::size_t j = 0; j < out.cols(); ++j) {
    for (std::size_t i = 0; i < out.rows(); ++i) col[i] = out(i, j);
    run(col);
    for (std::size_t i = 0; i < out.rows(); ++i) out(i, j) = col[i];
  }
  return out;
}

/// n x n matrix whose column k is the synthesis of the k-th unit coefficient.
inline Mat cdf97_synthesis_matrix(std::size_t n, std::size_t levels) {
  check_wavelet_levels(n, levels);
  Mat s(n, n);
  std::vector<double> e(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(e.begin(), e.end(), 0.0);
    e[k] = 1.0;
    cdf97_synthesize(e, levels);
    for (std::size_t i = 0; i < n; ++i) s(i, k) = e[i];
  }
  return s;
}

}  // namespace ripforge
