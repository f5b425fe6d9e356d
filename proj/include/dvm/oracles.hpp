// oracles.hpp - independent references for the solver
//
// Nothing here calls into the shape functions, the stepper or the ADE recursion.
//   empty_cavity_resonance      closed-form TEz resonances of a PEC rectangle
//   loaded_cavity_resonance_fd  finite-volume Hz eigenproblem with eps(omega) fixed point
//   integrate_ade_ode           RK4 integration of the Drude constitutive ODE
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "dvm/constants.hpp"
#include "dvm/drude_ade.hpp"
#include "dvm/errors.hpp"
#include "dvm/geometry.hpp"

namespace dvm {

struct ModeIndex {
  int m = 0;
  int n = 0;
};

inline double empty_cavity_resonance(double a, double b, ModeIndex mode) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::ValidationError, "cavity dimensions must be > 0");
  if (mode.m < 0 || mode.n < 0 || (mode.m == 0 && mode.n == 0)) {
    throw Error(ErrorKind::InvalidMode, "mode indices must be >= 0 and not both zero");
  }
  const double kx = mode.m / a, ky = mode.n / b;
  return 0.5 * constants::c0 * std::sqrt(kx * kx + ky * ky);
}

/// All TEz modes of the empty cavity with resonance in [f_lo, f_hi], ascending.
inline std::vector<std::pair<ModeIndex, double>> empty_cavity_modes(double a, double b, double f_lo, double f_hi) {
  std::vector<std::pair<ModeIndex, double>> out;
  const int mmax = static_cast<int>(std::ceil(2.0 * f_hi * a / constants::c0));
  const int nmax = static_cast<int>(std::ceil(2.0 * f_hi * b / constants::c0));
  for (int m = 0; m <= mmax; ++m) {
    for (int n = 0; n <= nmax; ++n) {
      if (m == 0 && n == 0) continue;
      const double f = empty_cavity_resonance(a, b, {m, n});
      if (f >= f_lo && f <= f_hi) out.push_back({{m, n}, f});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& p, const auto& q) { return p.second < q.second; });
  return out;
}

/// Relative permittivity at a point for angular frequency omega (real, lossless).
using EpsProfile = std::function<double(Vec2, double)>;

struct FdOracleOptions {
  int grid_n = 256;
  double rel_tol = 1e-4;   ///< fixed point stops when |delta omega| / omega falls below this
  int max_iterations = 50;
  int subspace_iterations = 6;
};

namespace detail {

struct FvGrid {
  int nx = 0, ny = 0;
  double dx = 0.0, dy = 0.0;
  Vec2 center(int i, int j) const { return {(i + 0.5) * dx, (j + 0.5) * dy}; }
  int id(int i, int j) const { return j * nx + i; }
  int size() const { return nx * ny; }
};

// Cell-centred finite-volume form of -div(eps^-1 grad Hz) with zero normal flux on
// the walls. Face coefficients average eps^-1 of the two cells.
inline Eigen::SparseMatrix<double> fv_operator(const FvGrid& g, const std::vector<double>& inv_eps) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(g.size()) * 5);
  const double wx = 1.0 / (g.dx * g.dx), wy = 1.0 / (g.dy * g.dy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int p = g.id(i, j);
      double diag = 0.0;
      auto link = [&](int q, double w) {
        const double c = 0.5 * (inv_eps[p] + inv_eps[q]) * w;
        t.emplace_back(p, q, -c);
        diag += c;
      };
      if (i > 0) link(g.id(i - 1, j), wx);
      if (i + 1 < g.nx) link(g.id(i + 1, j), wx);
      if (j > 0) link(g.id(i, j - 1), wy);
      if (j + 1 < g.ny) link(g.id(i, j + 1), wy);
      t.emplace_back(p, p, diag);
    }
  }
  Eigen::SparseMatrix<double> a(g.size(), g.size());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

inline std::vector<double> inverse_eps(const FvGrid& g, const EpsProfile& eps, double omega) {
  std::vector<double> out(static_cast<std::size_t>(g.size()));
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double e = eps(g.center(i, j), omega);
      if (!(e > 0.0) || !std::isfinite(e)) {
        throw Error(ErrorKind::ValidationError,
                    "permittivity must be positive in the oracle band (got " + std::to_string(e) + ")");
      }
      out[static_cast<std::size_t>(g.id(i, j))] = 1.0 / e;
    }
  }
  return out;
}

struct RitzPairs {
  Eigen::VectorXd values;   ///< k^2, ascending by distance to the shift
  Eigen::MatrixXd vectors;  ///< orthonormal columns
};

// Shift-invert block iteration with Rayleigh-Ritz on A, started from the columns of x.
inline RitzPairs shift_invert(const Eigen::SparseMatrix<double>& a, double sigma, Eigen::MatrixXd x, int iterations) {
  Eigen::SparseMatrix<double> shifted = a;
  for (int k = 0; k < a.rows(); ++k) shifted.coeffRef(k, k) -= sigma;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NoConvergence, "finite-volume oracle: shifted operator could not be factorized");
  }
  RitzPairs out;
  for (int it = 0; it < iterations; ++it) {
    x = solver.solve(x).eval();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    x = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
    const Eigen::MatrixXd h = x.transpose() * (a * x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
    x = (x * es.eigenvectors()).eval();
    out.values = es.eigenvalues();
  }
  out.vectors = x;
  return out;
}

}  // namespace detail

/// TEz resonances of a PEC rectangle filled with eps(x, omega): solves
/// -div(eps^-1 grad Hz) = (omega/c0)^2 Hz on a grid_n x grid_n finite-volume grid and
/// iterates omega -> eps(omega) -> eigenvalue for each mode until self-consistent.
/// Returns frequencies (Hz) in [f_lo, f_hi], ascending.
inline std::vector<double> loaded_cavity_resonance_fd(double a, double b, const EpsProfile& eps, double f_lo,
                                                      double f_hi, const FdOracleOptions& opts = {}) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::ValidationError, "cavity dimensions must be > 0");
  if (!(f_lo > 0.0) || !(f_lo < f_hi)) throw Error(ErrorKind::ValidationError, "oracle band must satisfy 0 < lo < hi");
  if (opts.grid_n < 8) throw Error(ErrorKind::ValidationError, "oracle grid_n must be >= 8");
  using std::numbers::pi;
  const double c0 = constants::c0;
  detail::FvGrid g{opts.grid_n, opts.grid_n, a / opts.grid_n, b / opts.grid_n};

  // Seed subspace: empty-cavity modes around the band, sampled on the grid.
  const double margin = 0.15;
  const auto seeds = empty_cavity_modes(a, b, f_lo * (1.0 - margin), f_hi * (1.0 + margin));
  if (seeds.empty()) return {};
  Eigen::MatrixXd x0(g.size(), static_cast<Eigen::Index>(seeds.size()));
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto [mode, f] = seeds[s];
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const Vec2 p = g.center(i, j);
        x0(g.id(i, j), static_cast<Eigen::Index>(s)) = std::cos(mode.m * pi * p.x / a) * std::cos(mode.n * pi * p.y / b);
      }
    }
  }
  const double f_mid = 0.5 * (f_lo + f_hi);
  const double k_mid = 2.0 * pi * f_mid / c0;
  auto base = detail::shift_invert(detail::fv_operator(g, detail::inverse_eps(g, eps, 2.0 * pi * f_mid)),
                                   k_mid * k_mid * (1.0 + 1e-3), x0, opts.subspace_iterations);

  std::vector<double> out;
  for (Eigen::Index col = 0; col < base.vectors.cols(); ++col) {
    double omega = c0 * std::sqrt(std::max(base.values(col), 0.0));
    if (omega < 2.0 * pi * f_lo * (1.0 - 0.5 * margin) || omega > 2.0 * pi * f_hi * (1.0 + 0.5 * margin)) continue;
    Eigen::VectorXd v = base.vectors.col(col);
    // Track the mode inside the block of Ritz vectors within 3% of it.
    std::vector<Eigen::Index> near;
    for (Eigen::Index c = 0; c < base.values.size(); ++c) {
      if (std::abs(std::sqrt(std::max(base.values(c), 0.0)) * c0 - omega) <= 0.03 * omega) near.push_back(c);
    }
    Eigen::MatrixXd block(base.vectors.rows(), static_cast<Eigen::Index>(near.size()));
    for (std::size_t c = 0; c < near.size(); ++c) block.col(static_cast<Eigen::Index>(c)) = base.vectors.col(near[c]);
    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
      const auto op = detail::fv_operator(g, detail::inverse_eps(g, eps, omega));
      // Refine the whole seed block at the current shift and follow the Ritz
      // vector that overlaps most with the mode being tracked.
      const double k = omega / c0;
      auto rp = detail::shift_invert(op, k * k * (1.0 + 1e-7), block, 2);
      Eigen::Index best = 0;
      (rp.vectors.transpose() * v).cwiseAbs().maxCoeff(&best);
      v = rp.vectors.col(best);
      block = std::move(rp.vectors);
      const double next = c0 * std::sqrt(std::max(rp.values(best), 0.0));
      const double change = std::abs(next - omega) / next;
      omega = next;
      if (change < opts.rel_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw NoConvergenceError("frequency fixed point did not converge in " + std::to_string(opts.max_iterations) +
                                   " iterations",
                               std::vector<double>{omega / (2.0 * pi)});
    }
    const double f = omega / (2.0 * pi);
    if (f >= f_lo && f <= f_hi) out.push_back(f);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Drude profile: material inside region, vacuum elsewhere.
inline EpsProfile drude_region_profile(const Rect& region, double omega_p) {
  return [region, omega_p](Vec2 p, double omega) {
    if (!region.contains(p, 0.0)) return 1.0;
    return 1.0 - (omega_p * omega_p) / (omega * omega);
  };
}

// ADE ODE oracle ------------------------------------------------------------------

enum class AdeBranch { Electric, Magnetic };

/// Integrates the Drude constitutive ODE for the field (E or H) driven by the flux
/// (D or B). With X = flux / ref - field the relation becomes
///     X'' + gamma X' + omega_p^2 X = omega_p^2 flux / ref,
/// integrated by classical RK4 at coarse_dt / substeps from a quiescent start.
/// Returns field samples at t = n coarse_dt, n = 0..coarse_steps.
inline std::vector<double> integrate_ade_ode(const DrudeMaterial& mat, AdeBranch branch,
                                             const std::function<double(double)>& flux, double coarse_dt,
                                             long coarse_steps, int substeps = 20) {
  if (!(coarse_dt > 0.0) || coarse_steps < 0 || substeps < 1) {
    throw Error(ErrorKind::ValidationError, "ODE oracle needs coarse_dt > 0, steps >= 0 and substeps >= 1");
  }
  const bool electric = branch == AdeBranch::Electric;
  const double wp = electric ? mat.omega_ep : mat.omega_mp;
  const double gamma = electric ? mat.gamma_e : mat.gamma_m;
  const double ref = electric ? constants::eps0 : constants::mu0;
  const double w2 = wp * wp;
  const double h = coarse_dt / substeps;

  auto rhs = [&](double t, double x, double v) {
    return std::pair<double, double>{v, w2 * (flux(t) / ref - x) - gamma * v};
  };
  double x = 0.0, v = 0.0;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(coarse_steps) + 1);
  out.push_back(flux(0.0) / ref - x);
  for (long n = 0; n < coarse_steps; ++n) {
    for (int s = 0; s < substeps; ++s) {
      const double t = n * coarse_dt + s * h;
      const auto [k1x, k1v] = rhs(t, x, v);
      const auto [k2x, k2v] = rhs(t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v);
      const auto [k3x, k3v] = rhs(t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v);
      const auto [k4x, k4v] = rhs(t + h, x + h * k3x, v + h * k3v);
      x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    out.push_back(flux((n + 1) * coarse_dt) / ref - x);
  }
  return out;
}

}  // namespace dvm
