#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "ripforge/matrix.hpp"

namespace ripforge {

/// Piecewise-smooth head phantom in [0, 1]: modified Shepp-Logan ellipses
/// with a gentle vertical shading inside the skull.
inline Mat make_phantom(std::size_t rows, std::size_t cols) {
  struct Ellipse {
    double value, a, b, x0, y0, phi_deg;
  };
  static constexpr std::array<Ellipse, 10> kEllipses{{
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
      {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
      {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
      {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
  }};
  Mat img(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    // y runs top (+1) to bottom (-1); x runs left (-1) to right (+1).
    const double y = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(rows);
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(cols) - 1.0;
      double v = 0.0;
      for (const Ellipse& e : kEllipses) {
        const double phi = e.phi_deg * 3.14159265358979323846 / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double u = dx * std::cos(phi) + dy * std::sin(phi);
        const double w = -dx * std::sin(phi) + dy * std::cos(phi);
        if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) v += e.value;
      }
      if (v > 0.15) v += 0.08 * y;  // smooth shading of the brain region
      img(i, j) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace ripforge
