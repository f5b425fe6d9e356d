// rbf_kernel.hpp - Gaussian radial kernel and its partial derivatives
//
// psi(r) = exp(-(r / (c * h_ref))^2). The Gaussian factors as g(dx) * g(dy), so
// every mixed partial is a product of 1D Hermite-type derivatives of g.
#pragma once

#include <array>
#include <cmath>
#include <string>

#include "dvm/errors.hpp"

namespace dvm {

struct KernelParams {
  double shape_parameter = 3.0;  ///< dimensionless width c
  double support_scale = 0.5e-3; ///< length h_ref in meters

  void validate() const {
    if (!(shape_parameter > 0.0) || !std::isfinite(shape_parameter)) {
      throw Error(ErrorKind::ValidationError, "kernel shape_parameter must be > 0");
    }
    if (!(support_scale > 0.0) || !std::isfinite(support_scale)) {
      throw Error(ErrorKind::ValidationError, "kernel support_scale must be > 0");
    }
  }

  /// Exponent coefficient s in psi = exp(-s r^2).
  double decay() const {
    const double w = shape_parameter * support_scale;
    return 1.0 / (w * w);
  }
};

namespace detail {

// k-th derivative of g(t) = exp(-s t^2), k = 0..3.
inline std::array<double, 4> gaussian_1d_jet(double s, double t) {
  const double g = std::exp(-s * t * t);
  return {
      g,
      -2.0 * s * t * g,
      (4.0 * s * s * t * t - 2.0 * s) * g,
      (-8.0 * s * s * s * t * t * t + 12.0 * s * s * t) * g,
  };
}

}  // namespace detail

inline double eval(const KernelParams& params, double dx, double dy) {
  return std::exp(-params.decay() * (dx * dx + dy * dy));
}

/// d^(ax+ay) psi / dx^ax dy^ay for ax, ay in [0, 3].
inline double partial(const KernelParams& params, double dx, double dy, int ax, int ay) {
  if (ax < 0 || ay < 0 || ax > 3 || ay > 3) {
    throw Error(ErrorKind::ValidationError, "kernel partial order out of range");
  }
  const double s = params.decay();
  return detail::gaussian_1d_jet(s, dx)[ax] * detail::gaussian_1d_jet(s, dy)[ay];
}

/// All partials of one total order. entry k holds d^order psi / dx^(order-k) dy^k.
struct KernelPartials {
  int order = 0;
  std::array<double, 4> values{};

  double operator[](int y_order) const { return values.at(y_order); }
};

inline KernelPartials partials(const KernelParams& params, double dx, double dy, int order) {
  if (order < 1 || order > 3) {
    throw Error(ErrorKind::ValidationError, "kernel partials order must be 1, 2 or 3");
  }
  const double s = params.decay();
  const auto gx = detail::gaussian_1d_jet(s, dx);
  const auto gy = detail::gaussian_1d_jet(s, dy);
  KernelPartials out;
  out.order = order;
  for (int k = 0; k <= order; ++k) {
    out.values[k] = gx[order - k] * gy[k];
  }
  return out;
}

/// Every partial up to third order at one offset; the shape builders consume this.
struct KernelJet {
  double v = 0;
  double x = 0, y = 0;
  double xx = 0, xy = 0, yy = 0;
  double xxx = 0, xxy = 0, xyy = 0, yyy = 0;
};

inline KernelJet jet(const KernelParams& params, double dx, double dy) {
  const double s = params.decay();
  const auto gx = detail::gaussian_1d_jet(s, dx);
  const auto gy = detail::gaussian_1d_jet(s, dy);
  KernelJet j;
  j.v = gx[0] * gy[0];
  j.x = gx[1] * gy[0];
  j.y = gx[0] * gy[1];
  j.xx = gx[2] * gy[0];
  j.xy = gx[1] * gy[1];
  j.yy = gx[0] * gy[2];
  j.xxx = gx[3] * gy[0];
  j.xxy = gx[2] * gy[1];
  j.xyy = gx[1] * gy[2];
  j.yyy = gx[0] * gy[3];
  return j;
}

}  // namespace dvm
