#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"
#include "ripforge/rng.hpp"
#include "ripforge/sparse_coding.hpp"
#include "ripforge/wavelet.hpp"

namespace ripforge {

/// Dictionary with unit-norm columns and the wavelet band of each column.
struct WaveletDict {
  Mat D;
  std::size_t levels = 0;
  std::vector<std::size_t> lowpass_cols;
  std::vector<std::size_t> highpass_cols;
};

inline double max_column_norm_deviation(const Mat& d) {
  double worst = 0.0;
  for (std::size_t j = 0; j < d.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) s += d(i, j) * d(i, j);
    worst = std::max(worst, std::abs(std::sqrt(s) - 1.0));
  }
  return worst;
}

/// Overcomplete 1D dictionary: for each level 1..levels, the level's
/// synthesis wavelet at every one of the signal_len circular shifts,
/// followed by i.i.d. Gaussian columns up to total_cols. Scaling-function
/// atoms are not included. All columns are normalized.
inline WaveletDict cdf97_dictionary(std::size_t signal_len, std::size_t levels,
                                    std::size_t total_cols, Seed seed) {
  check_wavelet_levels(signal_len, levels);
  const std::size_t wavelet_cols = levels * signal_len;
  if (total_cols < wavelet_cols) {
    throw DimensionError("dictionary needs at least " + std::to_string(wavelet_cols) +
                         " columns for " + std::to_string(levels) + " levels");
  }
  WaveletDict out;
  out.levels = levels;
  out.D = Mat(signal_len, total_cols);
  std::vector<double> atom(signal_len);
  for (std::size_t j = 1; j <= levels; ++j) {
    std::fill(atom.begin(), atom.end(), 0.0);
    atom[detail_band(signal_len, j).offset] = 1.0;
    cdf97_synthesize(atom, levels);
    for (std::size_t shift = 0; shift < signal_len; ++shift) {
      const std::size_t col = (j - 1) * signal_len + shift;
      for (std::size_t i = 0; i < signal_len; ++i) {
        out.D((i + shift) % signal_len, col) = atom[i];
      }
      out.highpass_cols.push_back(col);
    }
  }
  Rng rng(derive(seed, "dictionary-tail"));
  for (std::size_t col = wavelet_cols; col < total_cols; ++col) {
    for (std::size_t i = 0; i < signal_len; ++i) out.D(i, col) = rng.gaussian();
  }
  out.D = normalize_columns(std::move(out.D));
  return out;
}

/// Square synthesis dictionary of a multi-level transform with normalized
/// columns; its first n / 2^levels columns are the scaling atoms.
inline WaveletDict cdf97_basis(std::size_t n, std::size_t levels) {
  WaveletDict out;
  out.levels = levels;
  out.D = normalize_columns(cdf97_synthesis_matrix(n, levels));
  const std::size_t low = approx_band(n, levels).length;
  for (std::size_t k = 0; k < n; ++k) {
    (k < low ? out.lowpass_cols : out.highpass_cols).push_back(k);
  }
  return out;
}

/// 2D coefficients with the mask of entries outside the lowpass x lowpass block.
struct CoeffGrid {
  Mat X;
  std::vector<bool> highpass_mask;  ///< row-major, same shape as X

  static std::vector<bool> make_mask(std::size_t rows, std::size_t cols,
                                     std::size_t low_rows, std::size_t low_cols) {
    std::vector<bool> m(rows * cols, true);
    for (std::size_t i = 0; i < low_rows; ++i) {
      for (std::size_t j = 0; j < low_cols; ++j) m[i * cols + j] = false;
    }
    return m;
  }
};

/// Vectorized overlapping patches, one column each, with zero mean.
struct PatchSet {
  Mat patches;
  std::size_t patch_h = 0, patch_w = 0;
  std::size_t stride_h = 1, stride_w = 1;

  std::size_t count() const { return patches.cols(); }
};

inline std::size_t patch_count(std::size_t h, std::size_t w, std::size_t ph,
                               std::size_t pw, std::size_t sh, std::size_t sw) {
  if (ph > h || pw > w) return 0;
  return ((h - ph) / sh + 1) * ((w - pw) / sw + 1);
}

/// Patches of size ph x pw at the given strides, vectorized column by column.
inline PatchSet extract_patches(const Mat& image, std::size_t ph, std::size_t pw,
                                std::size_t sh, std::size_t sw) {
  if (ph == 0 || pw == 0 || ph > image.rows() || pw > image.cols()) {
    throw DimensionError("patch " + detail::shape_str(ph, pw) + " does not fit image " +
                         detail::shape_str(image.rows(), image.cols()));
  }
  if (sh == 0 || sw == 0) throw DimensionError("patch stride must be at least 1");
  const std::size_t ny = (image.rows() - ph) / sh + 1;
  const std::size_t nx = (image.cols() - pw) / sw + 1;
  PatchSet out{Mat(ph * pw, ny * nx), ph, pw, sh, sw};
  std::size_t col = 0;
  for (std::size_t by = 0; by < ny; ++by) {
    for (std::size_t bx = 0; bx < nx; ++bx, ++col) {
      double mean = 0.0;
      for (std::size_t c = 0; c < pw; ++c) {
        for (std::size_t r = 0; r < ph; ++r) {
          const double v = image(by * sh + r, bx * sw + c);
          out.patches(c * ph + r, col) = v;
          mean += v;
        }
      }
      mean /= static_cast<double>(ph * pw);
      for (std::size_t k = 0; k < ph * pw; ++k) out.patches(k, col) -= mean;
    }
  }
  return out;
}

}  // namespace ripforge
