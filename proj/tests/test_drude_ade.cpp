#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <array>
#include <numbers>
#include <random>

#include "dvm/constants.hpp"
#include "dvm/drude_ade.hpp"

using namespace dvm;
using constants::eps0;
using constants::mu0;

namespace {

constexpr double kPi = std::numbers::pi;

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

// Taps (n+1, n, n-1) of the second difference, the centred first difference and the
// trapezoidal average applied to x'' + g x' + w2 x, scaled by s.
std::array<double, 3> taps(double dt, double g, double w2, double s) {
  const std::array<double, 3> d2{1.0 / (dt * dt), -2.0 / (dt * dt), 1.0 / (dt * dt)};
  const std::array<double, 3> d1{1.0 / (2 * dt), 0.0, -1.0 / (2 * dt)};
  const std::array<double, 3> avg{0.25, 0.5, 0.25};
  std::array<double, 3> t{};
  for (int i = 0; i < 3; ++i) t[i] = s * (d2[i] + g * d1[i] + w2 * avg[i]);
  return t;
}

}  // namespace

TEST(DrudeAde, ElectricVacuumLimit) {
  for (double dt : {1e-15, 1e-13, 1e-12}) {
    const auto k = compute_coefficients(DrudeMaterial{}, dt);
    EXPECT_TRUE(rel_close(k.a1, -2.0, 1e-14));
    EXPECT_TRUE(rel_close(k.a2, 1.0, 1e-14));
    EXPECT_TRUE(rel_close(k.b0, 1.0 / eps0, 1e-14));
    EXPECT_TRUE(rel_close(k.b1, -2.0 / eps0, 1e-14));
    EXPECT_TRUE(rel_close(k.b2, 1.0 / eps0, 1e-14));
    EXPECT_TRUE(rel_close(k.A, 4.0 * eps0, 1e-14));
  }
}

TEST(DrudeAde, MagneticVacuumLimit) {
  const auto k = compute_coefficients(DrudeMaterial{1e11, 1e9, 0.0, 0.0}, 1e-13);
  EXPECT_TRUE(rel_close(k.c1, -2.0, 1e-14));
  EXPECT_TRUE(rel_close(k.c2, 1.0, 1e-14));
  EXPECT_TRUE(rel_close(k.d0, 1.0 / mu0, 1e-14));
  EXPECT_TRUE(rel_close(k.d1, -2.0 / mu0, 1e-14));
  EXPECT_TRUE(rel_close(k.d2, 1.0 / mu0, 1e-14));
}

TEST(DrudeAde, CoefficientsMatchRederivedDifferenceScheme) {
  const double dt = 1e-13;
  for (const DrudeMaterial m : {DrudeMaterial{1e11, 0.0, 0.0, 0.0}, DrudeMaterial{1e11, 1e9, 3e10, 2e9}}) {
    const auto k = compute_coefficients(m, dt);
    // eps0 (E'' + g E' + wp^2 E) = D'' + g D'
    const auto e = taps(dt, m.gamma_e, m.omega_ep * m.omega_ep, eps0);
    const auto d = taps(dt, m.gamma_e, 0.0, 1.0);
    EXPECT_TRUE(rel_close(k.a1, e[1] / e[0], 1e-12));
    EXPECT_TRUE(rel_close(k.a2, e[2] / e[0], 1e-12));
    EXPECT_TRUE(rel_close(k.b0, d[0] / e[0], 1e-12));
    EXPECT_TRUE(rel_close(k.b1, d[1] / e[0], 1e-12));
    EXPECT_TRUE(rel_close(k.b2, d[2] / e[0], 1e-12));
    const auto h = taps(dt, m.gamma_m, m.omega_mp * m.omega_mp, mu0);
    const auto b = taps(dt, m.gamma_m, 0.0, 1.0);
    EXPECT_TRUE(rel_close(k.c1, h[1] / h[0], 1e-12));
    EXPECT_TRUE(rel_close(k.c2, h[2] / h[0], 1e-12));
    EXPECT_TRUE(rel_close(k.d0, b[0] / h[0], 1e-12));
    EXPECT_TRUE(rel_close(k.d1, b[1] / h[0], 1e-12));
    EXPECT_TRUE(rel_close(k.d2, b[2] / h[0], 1e-12));
  }
}

TEST(DrudeAde, VacuumRecursionIsExact) {
  const auto k = compute_coefficients(DrudeMaterial{}, 1e-13);
  std::mt19937 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> e(50);
  for (auto& v : e) v = n(rng);
  for (std::size_t i = 2; i < e.size(); ++i) {
    const double got = update_E_from_D(k, eps0 * e[i], eps0 * e[i - 1], eps0 * e[i - 2], e[i - 1], e[i - 2]);
    EXPECT_NEAR(got, e[i], 1e-12 * (1.0 + std::abs(e[i])));
    const double h = update_H_from_B(k, mu0 * e[i], mu0 * e[i - 1], mu0 * e[i - 2], e[i - 1], e[i - 2]);
    EXPECT_NEAR(h, e[i], 1e-12 * (1.0 + std::abs(e[i])));
  }
}

TEST(DrudeAde, ZeroHistoriesGiveZero) {
  const auto k = compute_coefficients(DrudeMaterial{1e11, 1e9, 1e11, 1e9}, 1e-13);
  EXPECT_EQ(update_E_from_D(k, 0.0, 0.0, 0.0, 0.0, 0.0), 0.0);
  EXPECT_EQ(update_H_from_B(k, 0.0, 0.0, 0.0, 0.0, 0.0), 0.0);
}

TEST(DrudeAde, SinusoidalSteadyStateAmplitude) {
  const DrudeMaterial m{1e11, 0.0, 0.0, 0.0};
  const double dt = 0.05e-12, w = 2 * kPi * 100e9;
  const auto k = compute_coefficients(m, dt);
  // Lossless recursion keeps its free oscillation; fit it out alongside the driven response.
  const double wn = std::acos(-k.a1 / 2.0) / dt;
  const int n = 20000;
  std::vector<double> e(n, 0.0);
  auto d = [&](int i) { return i < 0 ? 0.0 : std::sin(w * i * dt); };
  for (int i = 1; i < n; ++i) e[i] = update_E_from_D(k, d(i), d(i - 1), d(i - 2), e[i - 1], i >= 2 ? e[i - 2] : 0.0);
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    a.row(i) << std::sin(w * t), std::cos(w * t), std::sin(wn * t), std::cos(wn * t);
    y(i) = e[i];
  }
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(y);
  EXPECT_LE((a * x - y).norm(), 1e-6 * y.norm());
  const double ratio = std::hypot(x(0), x(1));
  const double want = 1.0 / (eps0 * std::abs(eval_drude_permittivity(m, w)));
  EXPECT_LE(std::abs(ratio - want) / want, 0.01);
}

TEST(DrudeAde, RecursionResponseConvergesSecondOrder) {
  const double w = 2 * kPi * 100e9;
  for (const DrudeMaterial m : {DrudeMaterial{1e11, 0.0, 1e11, 0.0}, DrudeMaterial{1e11, 1e9, 1e11, 1e9}}) {
    const std::complex<double> want_e = 1.0 / (eps0 * eval_drude_permittivity(m, w));
    const std::complex<double> want_h = 1.0 / (mu0 * eval_drude_permeability(m, w));
    double prev_e = 0.0, prev_h = 0.0;
    for (double dt : {0.4e-12, 0.2e-12, 0.1e-12}) {
      const auto k = compute_coefficients(m, dt);
      const double err_e = std::abs(electric_recursion_response(k, w, dt) - want_e) / std::abs(want_e);
      const double err_h = std::abs(magnetic_recursion_response(k, w, dt) - want_h) / std::abs(want_h);
      if (prev_e > 0.0) {
        EXPECT_GE(prev_e / err_e, 3.5);
        EXPECT_GE(prev_h / err_h, 3.5);
      }
      EXPECT_LE(err_e, 0.01);
      prev_e = err_e;
      prev_h = err_h;
    }
  }
}

TEST(DrudeAde, PermittivityLimits) {
  const DrudeMaterial m{1e11, 0.0, 0.0, 0.0};
  EXPECT_NEAR(std::abs(eval_drude_permittivity(m, 1e20) - 1.0), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(eval_drude_permittivity(m, 1e11)), 0.0, 1e-12);
  const double r = 1e11 / (2 * kPi * 150e9);
  EXPECT_NEAR(eval_drude_permittivity(m, 2 * kPi * 150e9).real(), 1.0 - r * r, 1e-14);
  EXPECT_NEAR(eval_drude_permittivity(m, 2 * kPi * 150e9).real(), 0.98874, 1e-5);
  EXPECT_NEAR(eval_drude_permeability(m, 2 * kPi * 150e9).real(), 1.0, 0.0);
}

TEST(DrudeAde, PoleAtZeroFrequency) {
  try {
    eval_drude_permittivity(DrudeMaterial{1e11, 0.0, 0.0, 0.0}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleAtZero);
  }
  EXPECT_NO_THROW(eval_drude_permittivity(DrudeMaterial{1e11, 1e9, 0.0, 0.0}, 0.0));
}

TEST(DrudeAde, RejectsNegativeParameters) {
  EXPECT_THROW(compute_coefficients(DrudeMaterial{-1.0, 0.0, 0.0, 0.0}, 1e-13), Error);
  EXPECT_THROW(compute_coefficients(DrudeMaterial{}, 0.0), Error);
}
