#pragma once

// Independent closed-form references used by the test suites.

#include <cmath>
#include <numbers>

#include "mfao/geometry.hpp"

namespace oracle {

using namespace mfao;

/// sigma(x) = base + amp * exp(-|x - c|^2 / (2 w^2)).
struct GaussianSigma {
  double base = 1.0;
  double amp = 0.5;
  mfao::Vec3 c{0.5, 0.5, 0.5};
  double w = 0.2;
  int dim = 3;

  double operator()(const mfao::Vec3& x) const {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
    return base + amp * std::exp(-r2 / (2.0 * w * w));
  }

  /// Exact line integral of sigma over the segment [y, x] via the error function.
  double tau(const mfao::Vec3& x, const mfao::Vec3& y) const {
    mfao::Vec3 d = x - y;
    mfao::Vec3 yc = y - c;
    if (dim == 2) d[2] = yc[2] = 0.0;
    const double L = mfao::norm(d);
    if (L == 0.0) return 0.0;
    const mfao::Vec3 u = (1.0 / L) * d;
    const double b = mfao::dot(u, yc);
    const double d2 = mfao::dot(yc, yc) - b * b;
    const double s = std::sqrt(2.0) * w;
    const double bump = std::exp(-d2 / (2.0 * w * w)) * w * std::sqrt(std::numbers::pi / 2.0) *
                        (std::erf((L + b) / s) - std::erf(b / s));
    return base * L + amp * bump;
  }
};

/// Slope of log(y) against log(x) by least squares.
inline double loglog_slope(const double* x, const double* y, int n) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
