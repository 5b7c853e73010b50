#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge {

/// 10 log10(peak^2 / MSE); +infinity for identical images.
inline double psnr(const Mat& ref, const Mat& test, double peak = 1.0) {
  if (ref.rows() != test.rows() || ref.cols() != test.cols()) {
    throw DimensionError("psnr: image shapes differ");
  }
  if (!(peak > 0.0)) throw DimensionError("psnr: peak must be positive");
  if (ref.size() == 0) throw DimensionError("psnr: empty image");
  double mse = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double d = ref.data()[k] - test.data()[k];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean structural similarity over all fully contained Gaussian windows
/// (11 x 11, sigma 1.5). Images smaller than the window use the largest
/// window that fits.
inline double ssim(const Mat& ref, const Mat& test, double peak = 1.0) {
  if (ref.rows() != test.rows() || ref.cols() != test.cols()) {
    throw DimensionError("ssim: image shapes differ");
  }
  if (!(peak > 0.0)) throw DimensionError("ssim: peak must be positive");
  const std::size_t w = std::min({kSsimWindow, ref.rows(), ref.cols()});
  if (w == 0) throw DimensionError("ssim: empty image");
  std::vector<double> g(w * w);
  const double mid = 0.5 * static_cast<double>(w - 1);
  double gs = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const double di = static_cast<double>(i) - mid, dj = static_cast<double>(j) - mid;
      g[i * w + j] = std::exp(-(di * di + dj * dj) / (2.0 * kSsimSigma * kSsimSigma));
      gs += g[i * w + j];
    }
  }
  for (double& v : g) v /= gs;
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r0 = 0; r0 + w <= ref.rows(); ++r0) {
    for (std::size_t c0 = 0; c0 + w <= ref.cols(); ++c0) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t i = 0; i < w; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          const double wt = g[i * w + j];
          const double x = ref(r0 + i, c0 + j), y = test(r0 + i, c0 + j);
          mx += wt * x;
          my += wt * y;
          sxx += wt * x * x;
          syy += wt * y * y;
          sxy += wt * x * y;
        }
      }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace ripforge
