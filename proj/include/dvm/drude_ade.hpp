// drude_ade.hpp - Drude dispersion and the flux-density ADE recursions
//
// The constitutive relations D = eps0 (1 - w_ep^2 / (w^2 - j g_e w)) E and its
// magnetic twin become second-order ODEs in time. Central differences for the
// derivatives plus the (n+1 + 2n + n-1)/4 average for the undifferentiated term
// give a two-step recursion
//
//     E^{n+1} = b0 D^{n+1} + b1 D^n + b2 D^{n-1} - a1 E^n - a2 E^{n-1}
//     H^{n+3/2} = d0 B^{n+3/2} + d1 B^{n+1/2} + d2 B^{n-1/2} - c1 H^{n+1/2} - c2 H^{n-1/2}
#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "dvm/constants.hpp"
#include "dvm/errors.hpp"

namespace dvm {

struct DrudeMaterial {
  double omega_ep = 0.0;  ///< electric plasma frequency, rad/s
  double gamma_e = 0.0;   ///< electric collision frequency, rad/s
  double omega_mp = 0.0;  ///< magnetic plasma frequency, rad/s
  double gamma_m = 0.0;   ///< magnetic collision frequency, rad/s

  bool is_vacuum() const { return omega_ep == 0.0 && gamma_e == 0.0 && omega_mp == 0.0 && gamma_m == 0.0; }

  void validate() const {
    for (double v : {omega_ep, gamma_e, omega_mp, gamma_m}) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::ValidationError, "Drude parameters must be finite and >= 0");
      }
    }
  }

  friend bool operator==(const DrudeMaterial&, const DrudeMaterial&) = default;
};

struct AdeCoefficients {
  static constexpr int M = 2;
  double a1 = 0, a2 = 0;
  double b0 = 0, b1 = 0, b2 = 0;
  double c1 = 0, c2 = 0;
  double d0 = 0, d1 = 0, d2 = 0;
  double A = 0;  ///< electric denominator, units of permittivity
  double C = 0;  ///< magnetic denominator, units of permeability
};

inline AdeCoefficients compute_coefficients(const DrudeMaterial& mat, double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorKind::ValidationError, "time step must be > 0");
  }
  mat.validate();
  using constants::eps0;
  using constants::mu0;
  const double dt2 = dt * dt;
  AdeCoefficients k;

  const double we2 = mat.omega_ep * mat.omega_ep;
  k.A = 4.0 * eps0 + 2.0 * dt * eps0 * mat.gamma_e + eps0 * dt2 * we2;
  k.a1 = (2.0 * eps0 * dt2 * we2 - 8.0 * eps0) / k.A;
  k.a2 = (4.0 * eps0 - 2.0 * dt * eps0 * mat.gamma_e + eps0 * dt2 * we2) / k.A;
  k.b0 = (4.0 + 2.0 * dt * mat.gamma_e) / k.A;
  k.b1 = -8.0 / k.A;
  k.b2 = (4.0 - 2.0 * dt * mat.gamma_e) / k.A;

  const double wm2 = mat.omega_mp * mat.omega_mp;
  k.C = 4.0 * mu0 + 2.0 * dt * mu0 * mat.gamma_m + mu0 * dt2 * wm2;
  k.c1 = (2.0 * mu0 * dt2 * wm2 - 8.0 * mu0) / k.C;
  k.c2 = (4.0 * mu0 - 2.0 * dt * mu0 * mat.gamma_m + mu0 * dt2 * wm2) / k.C;
  k.d0 = (4.0 + 2.0 * dt * mat.gamma_m) / k.C;
  k.d1 = -8.0 / k.C;
  k.d2 = (4.0 - 2.0 * dt * mat.gamma_m) / k.C;
  return k;
}

/// E^{n+1} from D at n+1, n, n-1 and E at n, n-1. V is double or Vec2.
template <typename V>
V update_E_from_D(const AdeCoefficients& k, const V& d_next, const V& d_now, const V& d_prev, const V& e_now,
                  const V& e_prev) {
  return k.b0 * d_next + k.b1 * d_now + k.b2 * d_prev - k.a1 * e_now - k.a2 * e_prev;
}

/// Hz^{n+3/2} from Bz at n+3/2, n+1/2, n-1/2 and Hz at n+1/2, n-1/2.
template <typename V>
V update_H_from_B(const AdeCoefficients& k, const V& b_next, const V& b_now, const V& b_prev, const V& h_now,
                  const V& h_prev) {
  return k.d0 * b_next + k.d1 * b_now + k.d2 * b_prev - k.c1 * h_now - k.c2 * h_prev;
}

namespace detail {

inline std::complex<double> drude_relative(double omega_p, double gamma, double omega) {
  if (omega == 0.0 && gamma == 0.0 && omega_p > 0.0) {
    throw Error(ErrorKind::PoleAtZero, "Drude response has a pole at omega = 0 when the collision frequency is 0");
  }
  if (omega_p == 0.0) {
    return {1.0, 0.0};
  }
  using namespace std::complex_literals;
  return 1.0 - omega_p * omega_p / (omega * omega - 1i * gamma * omega);
}

}  // namespace detail

/// Relative permittivity eps_r(w) = 1 - w_ep^2 / (w^2 - j g_e w).
inline std::complex<double> eval_drude_permittivity(const DrudeMaterial& mat, double omega) {
  return detail::drude_relative(mat.omega_ep, mat.gamma_e, omega);
}

/// Relative permeability mu_r(w) = 1 - w_mp^2 / (w^2 - j g_m w).
inline std::complex<double> eval_drude_permeability(const DrudeMaterial& mat, double omega) {
  return detail::drude_relative(mat.omega_mp, mat.gamma_m, omega);
}

/// Steady-state E/D ratio of the electric recursion at angular frequency omega
/// (z = exp(j omega dt)). Converges to 1 / (eps0 eps_r(omega)) as dt -> 0.
inline std::complex<double> electric_recursion_response(const AdeCoefficients& k, double omega, double dt) {
  const std::complex<double> zi = std::polar(1.0, -omega * dt);
  return (k.b0 + k.b1 * zi + k.b2 * zi * zi) / (1.0 + k.a1 * zi + k.a2 * zi * zi);
}

inline std::complex<double> magnetic_recursion_response(const AdeCoefficients& k, double omega, double dt) {
  const std::complex<double> zi = std::polar(1.0, -omega * dt);
  return (k.d0 + k.d1 * zi + k.d2 * zi * zi) / (1.0 + k.c1 * zi + k.c2 * zi * zi);
}

}  // namespace dvm
