// time_solver.hpp - leapfrog marching of the flux-density ADE system
//
// One cycle advances state n (E, D at t_n; Bz, Hz at t_{n+1/2}) to n+1:
//   1. D^{n+1}    = D^n + dt W_D Hz^{n+1/2} - dt J(t_{n+1/2})
//   2. E^{n+1}    from the electric ADE recursion, per node and material
//   3. PEC: tangential E (and D) zeroed on the walls
//   4. Bz^{n+3/2} = Bz^{n+1/2} - dt W_B E^{n+1}
//   5. Hz^{n+3/2} from the magnetic ADE recursion
// Each sub-update reads the previous level and writes a separate next-level array.
#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dvm/constants.hpp"
#include "dvm/drude_ade.hpp"
#include "dvm/errors.hpp"
#include "dvm/geometry.hpp"
#include "dvm/manifest.hpp"
#include "dvm/node_cloud.hpp"
#include "dvm/shape_functions.hpp"

namespace dvm {

/// Modulated Gaussian current J(t) = A sin(2 pi f0 t) exp(-((t - t0) / tau)^2) along direction.
struct SourceSpec {
  double amplitude = 1.0;  ///< A/m^2
  double f0 = 100e9;
  double t0 = 15e-12;
  double tau = 5e-12;
  Vec2 direction{0.0, 1.0};
  std::size_t injection_node = 0;  ///< vector-node index

  double current(double t) const {
    const double u = (t - t0) / tau;
    return amplitude * std::sin(2.0 * std::numbers::pi * f0 * t) * std::exp(-u * u);
  }

  void validate() const {
    if (!(tau > 0.0)) throw Error(ErrorKind::ValidationError, "source tau must be > 0");
    if (!std::isfinite(amplitude) || !std::isfinite(f0) || !std::isfinite(t0)) {
      throw Error(ErrorKind::ValidationError, "source parameters must be finite");
    }
    if (std::abs(norm(direction) - 1.0) > 1e-12) {
      throw Error(ErrorKind::ValidationError, "source direction must be a unit vector");
    }
  }
};

struct SolverConfig {
  double dt = 0.0;
  long n_steps = 0;
  BasisMode basis_mode = BasisMode::Vector;
  std::vector<std::size_t> probe_nodes;
  long record_every = 1;
  /// Steps (after the update, E at t = step dt) at which full field snapshots are kept.
  std::vector<long> snapshot_steps;
  /// Bypass the ADE recursion with E = D / eps0, H = B / mu0 for vacuum materials (cross-check path).
  bool vacuum_shortcut = false;
  /// |field| above this is treated as a blow-up, like NaN/Inf.
  double blowup_limit = 1e100;

  void validate() const {
    if (!(dt > 0.0)) throw Error(ErrorKind::ValidationError, "dt must be > 0");
    if (n_steps < 0) throw Error(ErrorKind::ValidationError, "n_steps must be >= 0");
    if (record_every < 1) throw Error(ErrorKind::ValidationError, "record_every must be >= 1");
    if (!(blowup_limit > 0.0)) throw Error(ErrorKind::ValidationError, "blowup_limit must be > 0");
  }
};

struct FieldState {
  long step_index = 0;
  // vector nodes
  std::vector<Vec2> E_now, E_prev, E_next;
  std::vector<Vec2> D_now, D_prev, D_next;
  /// Flux deposited by the source current alone (-sum dt J); the rest of D is curl-generated.
  std::vector<Vec2> D_source;
  // scalar nodes, half-integer levels
  std::vector<double> Hz_now, Hz_prev, Hz_next;
  std::vector<double> Bz_now, Bz_prev, Bz_next;

  static FieldState quiescent(const NodeCloud& cloud) {
    FieldState s;
    const std::size_t nv = cloud.vector_nodes.size();
    const std::size_t ns = cloud.scalar_nodes.size();
    for (auto* v : {&s.E_now, &s.E_prev, &s.E_next, &s.D_now, &s.D_prev, &s.D_next, &s.D_source}) v->assign(nv, Vec2{});
    for (auto* v : {&s.Hz_now, &s.Hz_prev, &s.Hz_next, &s.Bz_now, &s.Bz_prev, &s.Bz_next}) v->assign(ns, 0.0);
    return s;
  }

  double time(double dt) const { return static_cast<double>(step_index) * dt; }
};

/// ADE coefficients per node, resolved once through the cloud's material tags.
struct MaterialTable {
  std::vector<AdeCoefficients> coeffs;  ///< by material index
  std::vector<bool> vacuum;             ///< by material index

  static MaterialTable build(std::span<const DrudeMaterial> materials, double dt) {
    MaterialTable t;
    for (const auto& m : materials) {
      t.coeffs.push_back(compute_coefficients(m, dt));
      t.vacuum.push_back(m.is_vacuum());
    }
    return t;
  }
};

namespace detail {

inline void check_material_indices(const NodeCloud& cloud, const MaterialTable& mats) {
  for (const auto* tags : {&cloud.vector_material, &cloud.scalar_material}) {
    for (int m : *tags) {
      if (m < 0 || static_cast<std::size_t>(m) >= mats.coeffs.size()) {
        throw Error(ErrorKind::ValidationError, "node material index " + std::to_string(m) + " has no Drude entry");
      }
    }
  }
}

}  // namespace detail

// Sub-updates, exposed so the cycle ordering can be checked piecewise.

inline void update_flux_d(FieldState& s, const CurlStencils& st, const SourceSpec& src, double dt) {
  const auto& rows = st.wd;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    Vec2 curl{};
    for (std::size_t e = rows.row_begin(i); e < rows.row_end(i); ++e) {
      curl += st.wd_weights[e] * s.Hz_now[rows.index[e]];
    }
    s.D_next[i] = s.D_now[i] + dt * curl;
  }
  const double t_half = (static_cast<double>(s.step_index) + 0.5) * dt;
  const Vec2 kick = (dt * src.current(t_half)) * src.direction;
  s.D_next[src.injection_node] -= kick;
  s.D_source[src.injection_node] -= kick;
}

inline void update_field_e(FieldState& s, const NodeCloud& cloud, const MaterialTable& mats, bool vacuum_shortcut) {
  for (std::size_t i = 0; i < s.E_next.size(); ++i) {
    const auto m = static_cast<std::size_t>(cloud.vector_material[i]);
    if (vacuum_shortcut && mats.vacuum[m]) {
      s.E_next[i] = s.D_next[i] * (1.0 / constants::eps0);
    } else {
      s.E_next[i] = update_E_from_D(mats.coeffs[m], s.D_next[i], s.D_now[i], s.D_prev[i], s.E_now[i], s.E_prev[i]);
    }
  }
}

inline void apply_pec(FieldState& s, const NodeCloud& cloud) {
  for (std::size_t i = 0; i < s.E_next.size(); ++i) {
    const BoundaryFlag f = cloud.boundary[i];
    if (zeroes_ex(f)) {
      s.E_next[i].x = 0.0;
      s.D_next[i].x = 0.0;
    }
    if (zeroes_ey(f)) {
      s.E_next[i].y = 0.0;
      s.D_next[i].y = 0.0;
    }
  }
}

inline void update_flux_b(FieldState& s, const CurlStencils& st, double dt) {
  const auto& rows = st.wb;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double curl = 0.0;
    for (std::size_t e = rows.row_begin(i); e < rows.row_end(i); ++e) {
      curl += dot(st.wb_weights[e], s.E_next[rows.index[e]]);
    }
    s.Bz_next[i] = s.Bz_now[i] - dt * curl;
  }
}

inline void update_field_h(FieldState& s, const NodeCloud& cloud, const MaterialTable& mats, bool vacuum_shortcut) {
  for (std::size_t i = 0; i < s.Hz_next.size(); ++i) {
    const auto m = static_cast<std::size_t>(cloud.scalar_material[i]);
    if (vacuum_shortcut && mats.vacuum[m]) {
      s.Hz_next[i] = s.Bz_next[i] * (1.0 / constants::mu0);
    } else {
      s.Hz_next[i] = update_H_from_B(mats.coeffs[m], s.Bz_next[i], s.Bz_now[i], s.Bz_prev[i], s.Hz_now[i], s.Hz_prev[i]);
    }
  }
}

/// next -> now -> prev; the old prev buffer becomes scratch.
inline void rotate_levels(FieldState& s) {
  auto roll = [](auto& prev, auto& now, auto& next) {
    std::swap(prev, now);
    std::swap(now, next);
  };
  roll(s.E_prev, s.E_now, s.E_next);
  roll(s.D_prev, s.D_now, s.D_next);
  roll(s.Bz_prev, s.Bz_now, s.Bz_next);
  roll(s.Hz_prev, s.Hz_now, s.Hz_next);
  ++s.step_index;
}

inline void check_finite(const FieldState& s, double limit) {
  for (std::size_t i = 0; i < s.E_now.size(); ++i) {
    for (double v : {s.E_now[i].x, s.E_now[i].y}) {
      if (!std::isfinite(v) || std::abs(v) > limit) throw NonFiniteFieldError(s.step_index, i, v, "E");
    }
  }
  for (std::size_t i = 0; i < s.Hz_now.size(); ++i) {
    const double v = s.Hz_now[i];
    if (!std::isfinite(v) || std::abs(v) > limit) throw NonFiniteFieldError(s.step_index, i, v, "Hz");
  }
}

/// One full leapfrog cycle, in the order D, E, PEC, B, H.
inline void step(FieldState& s, const NodeCloud& cloud, const CurlStencils& st, const MaterialTable& mats,
                 const SourceSpec& src, double dt, bool vacuum_shortcut = false,
                 double blowup_limit = std::numeric_limits<double>::infinity()) {
  update_flux_d(s, st, src, dt);
  update_field_e(s, cloud, mats, vacuum_shortcut);
  apply_pec(s, cloud);
  update_flux_b(s, st, dt);
  update_field_h(s, cloud, mats, vacuum_shortcut);
  rotate_levels(s);
  check_finite(s, blowup_limit);
}

/// Heuristic step size safety * h / (c0 sqrt 2). Not a stability guarantee for
/// RBF stencils; the blow-up detector in step() is the backstop.
inline double estimate_stable_dt(const NodeCloud& cloud, double safety) {
  if (!(safety > 0.0) || safety > 1.0) {
    throw Error(ErrorKind::ValidationError, "dt safety factor must lie in (0, 1]");
  }
  return safety * cloud.spacing / (constants::c0 * std::sqrt(2.0));
}

/// sum w eps0 |E^n|^2 + sum w mu0 Hz^{n+1/2} Hz^{n-1/2}, with trapezoid weights on
/// the vector grid and midpoint weights on the cell centres.
inline double energy_proxy(const FieldState& s, const NodeCloud& cloud) {
  const double cell = cloud.spacing * cloud.spacing;
  double e = 0.0;
  for (std::size_t i = 0; i < s.E_now.size(); ++i) {
    double w = cell;
    switch (cloud.boundary[i]) {
      case BoundaryFlag::Corner: w *= 0.25; break;
      case BoundaryFlag::XWall:
      case BoundaryFlag::YWall: w *= 0.5; break;
      case BoundaryFlag::None: break;
    }
    e += w * constants::eps0 * norm2(s.E_now[i]);
  }
  double h = 0.0;
  for (std::size_t i = 0; i < s.Hz_now.size(); ++i) h += s.Hz_now[i] * s.Hz_prev[i];
  return e + cell * constants::mu0 * h;
}

struct ProbeRecord {
  std::vector<std::size_t> nodes;
  std::vector<Vec2> positions;
  std::vector<double> times;
  std::vector<std::vector<Vec2>> samples;  ///< [probe][sample]

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  std::vector<double> component(std::size_t probe, int axis) const {
    std::vector<double> out;
    out.reserve(samples.at(probe).size());
    for (const auto& v : samples.at(probe)) out.push_back(axis == 0 ? v.x : v.y);
    return out;
  }

  double sample_interval() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

inline void write_probe_csv(std::ostream& os, const ProbeRecord& rec) {
  os << 't';
  for (std::size_t p = 0; p < rec.nodes.size(); ++p) os << ",p" << p << "_Ex,p" << p << "_Ey";
  os << '\n';
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    os << format_double(rec.times[k]);
    for (std::size_t p = 0; p < rec.nodes.size(); ++p) {
      os << ',' << format_double(rec.samples[p][k].x) << ',' << format_double(rec.samples[p][k].y);
    }
    os << '\n';
  }
}

struct RunResult {
  ProbeRecord probes;
  FieldState final_state;
  std::vector<FieldState> snapshots;  ///< in the order of SolverConfig::snapshot_steps
  Manifest manifest;
  double wall_seconds = 0.0;
};

/// Marches config.n_steps cycles from a quiescent start. materials is indexed by the
/// cloud's material tags. Probes sample E every record_every steps.
inline RunResult run(const NodeCloud& cloud, const CurlStencils& st, std::span<const DrudeMaterial> materials,
                     const SourceSpec& src, const SolverConfig& config) {
  config.validate();
  src.validate();
  if (src.injection_node >= cloud.vector_nodes.size()) {
    throw Error(ErrorKind::ValidationError, "source injection node out of range");
  }
  if (st.wb.rows() != cloud.scalar_nodes.size() || st.wd.rows() != cloud.vector_nodes.size()) {
    throw Error(ErrorKind::ShapeMismatch, "stencils were not built for this cloud");
  }
  if (st.mode != config.basis_mode) {
    throw Error(ErrorKind::ShapeMismatch, "stencil basis mode differs from the solver configuration");
  }
  const MaterialTable mats = MaterialTable::build(materials, config.dt);
  detail::check_material_indices(cloud, mats);

  RunResult out;
  auto& rec = out.probes;
  for (std::size_t p : config.probe_nodes) {
    if (p >= cloud.vector_nodes.size()) throw Error(ErrorKind::ValidationError, "probe node out of range");
    rec.nodes.push_back(p);
    rec.positions.push_back(cloud.vector_nodes[p]);
    rec.samples.emplace_back();
  }

  const auto t_start = std::chrono::steady_clock::now();
  FieldState s = FieldState::quiescent(cloud);
  out.snapshots.resize(config.snapshot_steps.size());
  for (long n = 0; n < config.n_steps; ++n) {
    step(s, cloud, st, mats, src, config.dt, config.vacuum_shortcut, config.blowup_limit);
    if (s.step_index % config.record_every == 0) {
      rec.times.push_back(s.time(config.dt));
      for (std::size_t p = 0; p < rec.nodes.size(); ++p) rec.samples[p].push_back(s.E_now[rec.nodes[p]]);
    }
    for (std::size_t k = 0; k < config.snapshot_steps.size(); ++k) {
      if (config.snapshot_steps[k] == s.step_index) out.snapshots[k] = s;
    }
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  out.final_state = std::move(s);

  Manifest& m = out.manifest;
  m.set("solver.basis_mode", to_string(config.basis_mode));
  m.set("solver.dt", config.dt);
  m.set("solver.n_steps", config.n_steps);
  m.set("solver.record_every", config.record_every);
  m.set("solver.vacuum_shortcut", config.vacuum_shortcut);
  m.set("cloud.vector_nodes", cloud.vector_nodes.size());
  m.set("cloud.scalar_nodes", cloud.scalar_nodes.size());
  m.set("stencil.wb_entries", st.wb.index.size());
  m.set("stencil.wd_entries", st.wd.index.size());
  m.set("source.injection_node", src.injection_node);
  for (std::size_t i = 0; i < mats.coeffs.size(); ++i) {
    const auto& k = mats.coeffs[i];
    const std::string p = "material." + std::to_string(i) + ".";
    m.set(p + "a1", k.a1); m.set(p + "a2", k.a2);
    m.set(p + "b0", k.b0); m.set(p + "b1", k.b1); m.set(p + "b2", k.b2);
    m.set(p + "c1", k.c1); m.set(p + "c2", k.c2);
    m.set(p + "d0", k.d0); m.set(p + "d1", k.d1); m.set(p + "d2", k.d2);
    m.set(p + "A", k.A); m.set(p + "C", k.C);
  }
  m.set("timing.wall_seconds", out.wall_seconds);
  return out;
}

}  // namespace dvm
