// experiment.hpp - build, run and diagnose one configured experiment; write artifacts
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dvm/config.hpp"
#include "dvm/diagnostics.hpp"
#include "dvm/node_cloud.hpp"
#include "dvm/oracles.hpp"
#include "dvm/shape_functions.hpp"
#include "dvm/time_solver.hpp"

#ifndef DVM_VERSION
#define DVM_VERSION "unknown"
#endif

namespace dvm {

struct ExperimentSetup {
  NodeCloud cloud;
  CurlStencils stencils;
  SourceSpec source;
  SolverConfig solver;
  std::vector<DrudeMaterial> materials;
};

inline ExperimentSetup build_setup(const ExperimentConfig& cfg, BasisMode mode) {
  cfg.validate();
  ExperimentSetup s;
  s.cloud = build_cavity_cloud(cfg.width, cfg.height, cfg.spacing,
                               cfg.plasma.enabled ? std::optional<Rect>(cfg.plasma.region) : std::nullopt);
  s.stencils = build_curl_stencils(s.cloud, cfg.kernel(), cfg.radius_factor, mode, cfg.wall_images);
  s.materials = cfg.materials();

  s.source.amplitude = cfg.amplitude;
  s.source.f0 = cfg.f0;
  s.source.t0 = cfg.t0;
  s.source.tau = cfg.tau;
  s.source.direction = cfg.direction;
  s.source.injection_node = s.cloud.nearest(NodeSet::Vector, cfg.source_position);

  auto& sv = s.solver;
  sv.dt = cfg.resolved_dt();
  sv.n_steps = cfg.resolved_steps();
  sv.basis_mode = mode;
  sv.record_every = cfg.record_every;
  sv.vacuum_shortcut = cfg.vacuum_shortcut;
  sv.blowup_limit = cfg.blowup_limit;
  for (const auto& p : cfg.probes) sv.probe_nodes.push_back(s.cloud.nearest(NodeSet::Vector, p));
  for (double t : cfg.diagnostics.charge_times) sv.snapshot_steps.push_back(std::lround(t / sv.dt));
  return s;
}

// Oracle references ---------------------------------------------------------------

struct OracleReport {
  std::vector<std::pair<ModeIndex, double>> empty_modes;  ///< closed form, analysis band
  std::vector<double> loaded;                            ///< finite-volume resonances, analysis band
  bool loaded_available = false;
  double band_lo = 0.0;
  double band_hi = 0.0;

  /// Frequencies the solver is judged against: loaded resonances when computed, else closed form.
  std::vector<double> references() const {
    if (loaded_available) return loaded;
    std::vector<double> out;
    for (const auto& [m, f] : empty_modes) out.push_back(f);
    return out;
  }

  /// Nearest reference to f; none when f lies outside the analysis band.
  std::optional<double> nearest(double f) const {
    std::optional<double> best;
    if (f < band_lo || f > band_hi) return best;
    for (double r : references()) {
      if (!best || std::abs(r - f) < std::abs(*best - f)) best = r;
    }
    return best;
  }
};

inline OracleReport compute_oracles(const ExperimentConfig& cfg) {
  const auto& d = cfg.diagnostics;
  OracleReport r;
  r.band_lo = d.band_lo;
  r.band_hi = d.band_hi;
  r.empty_modes = empty_cavity_modes(cfg.width, cfg.height, d.band_lo, d.band_hi);
  const auto& m = cfg.plasma.material;
  const bool lossless_electric = m.gamma_e == 0.0 && m.omega_mp == 0.0 && m.gamma_m == 0.0;
  if (cfg.plasma.enabled && d.fd_oracle && lossless_electric) {
    FdOracleOptions o;
    o.grid_n = d.fd_grid;
    r.loaded = loaded_cavity_resonance_fd(cfg.width, cfg.height, drude_region_profile(cfg.plasma.region, m.omega_ep),
                                          d.band_lo, d.band_hi, o);
    r.loaded_available = true;
  }
  return r;
}

// One experiment --------------------------------------------------------------------

struct ExperimentReport {
  BasisMode mode = BasisMode::Vector;
  ExperimentSetup setup;
  RunResult run;
  SpectrumResult spectrum;
  std::optional<SpectrumPeak> dominant;  ///< strongest peak in the analysis band
  std::optional<double> reference;       ///< nearest oracle frequency to the dominant peak
  std::vector<SpectrumPeak> spurious;    ///< peaks in the spurious band above its floor
  std::vector<ChargeField> charges;
  std::vector<std::optional<double>> concentration;
  Manifest manifest;
};

namespace detail {

inline void echo_config(Manifest& m, const ExperimentConfig& cfg) {
  std::istringstream is(serialize_config(cfg));
  std::string line, section;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find(" =");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    std::string value = eq + 2 < line.size() ? line.substr(eq + 2) : std::string();
    if (!value.empty() && value.front() == ' ') value.erase(0, 1);
    m.set("config." + section + "." + key, value);
  }
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, BasisMode mode,
                                       const OracleReport* oracles = nullptr) {
  ExperimentReport rep;
  rep.mode = mode;
  rep.setup = build_setup(cfg, mode);
  auto& s = rep.setup;
  rep.run = run(s.cloud, s.stencils, s.materials, s.source, s.solver);

  const auto& d = cfg.diagnostics;
  SpectrumOptions so;
  so.window = d.window;
  so.zero_pad_factor = d.zero_pad_factor;
  so.peak_floor_db = d.peak_floor_db;
  rep.spectrum = spectrum(rep.run.probes, d.probe, d.component, so);
  rep.dominant = rep.spectrum.dominant_peak(d.band_lo, d.band_hi);
  if (oracles && rep.dominant) rep.reference = oracles->nearest(rep.dominant->frequency);
  const double nyquist = rep.spectrum.frequency.back();
  if (d.spurious_lo < nyquist) {
    rep.spurious = spurious_mode_scan(rep.spectrum, d.spurious_lo, std::min(d.spurious_hi, nyquist),
                                      d.spurious_floor_db);
  }

  if (!d.charge_times.empty()) {
    const auto op = build_charge_operator(s.cloud, cfg.kernel(), cfg.radius_factor, mode, cfg.wall_images);
    const Vec2 center = s.cloud.vector_nodes[s.source.injection_node];
    for (std::size_t k = 0; k < d.charge_times.size(); ++k) {
      const long step = s.solver.snapshot_steps[k];
      if (step < 0 || step > s.solver.n_steps) {
        throw Error(ErrorKind::ValidationError, "diagnostics.charge_times: time lies outside the run");
      }
      const FieldState& st = step == 0 ? FieldState::quiescent(s.cloud) : rep.run.snapshots[k];
      rep.charges.push_back(charge_density(st, op, static_cast<double>(step) * s.solver.dt));
      rep.concentration.push_back(concentration_ratio(rep.charges.back(), center, d.concentration_radius * cfg.spacing));
    }
  }

  Manifest& m = rep.manifest;
  m.set("build.version", DVM_VERSION);
  detail::echo_config(m, cfg);
  m.merge(rep.run.manifest);
  m.set("spectrum.bin_width_hz", rep.spectrum.bin_width);
  m.set("spectrum.peaks", rep.spectrum.peaks.size());
  if (rep.dominant) {
    m.set("peaks.dominant_hz", rep.dominant->frequency);
    m.set("peaks.dominant_level_db", level_db(rep.spectrum, rep.dominant->magnitude));
  }
  if (rep.reference) {
    m.set("peaks.reference_hz", *rep.reference);
    m.set("peaks.relative_error", relative_error(rep.dominant->frequency, *rep.reference));
  }
  m.set("spurious.count", rep.spurious.size());
  for (std::size_t k = 0; k < rep.concentration.size(); ++k) {
    const std::string key = "charge." + std::to_string(k) + ".concentration_ratio";
    if (rep.concentration[k]) m.set(key, *rep.concentration[k]);
    else m.set(key, "zero-field");
  }
  return rep;
}

inline void write_artifacts(const ExperimentReport& rep, const OracleReport* oracles, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("probes.csv");
    write_probe_csv(os, rep.run.probes);
  }
  {
    auto os = open("spectrum.csv");
    write_spectrum_csv(os, rep.spectrum);
  }
  {
    auto os = open("peaks.csv");
    os << "frequency_hz,magnitude,level_db,reference_hz,relative_error\n";
    for (const auto& p : rep.spectrum.peaks) {
      os << format_double(p.frequency) << ',' << format_double(p.magnitude) << ','
         << format_double(level_db(rep.spectrum, p.magnitude));
      const auto ref = oracles ? oracles->nearest(p.frequency) : std::nullopt;
      if (ref) os << ',' << format_double(*ref) << ',' << format_double(relative_error(p.frequency, *ref));
      else os << ",,";
      os << '\n';
    }
  }
  for (std::size_t k = 0; k < rep.charges.size(); ++k) {
    auto os = open("charge_" + std::to_string(k) + ".csv");
    write_charge_csv(os, rep.charges[k]);
  }
  {
    auto os = open("cloud.csv");
    write_cloud_csv(os, rep.setup.cloud);
  }
  {
    auto os = open("manifest.txt");
    rep.manifest.write(os);
  }
}

// Mode comparison -------------------------------------------------------------------

struct ComparisonReport {
  ExperimentReport vector;
  ExperimentReport scalar;
  Manifest manifest;
};

inline ComparisonReport compare_modes(const ExperimentConfig& cfg, const OracleReport* oracles = nullptr) {
  auto fv = std::async(std::launch::async, [&] { return run_experiment(cfg, BasisMode::Vector, oracles); });
  auto fs = std::async(std::launch::async, [&] { return run_experiment(cfg, BasisMode::Scalar, oracles); });
  ComparisonReport c{fv.get(), fs.get(), {}};
  Manifest& m = c.manifest;
  for (const auto* r : {&c.vector, &c.scalar}) {
    const std::string p = std::string(to_string(r->mode)) + ".";
    m.set(p + "vector_nodes", r->setup.cloud.vector_nodes.size());
    m.set(p + "scalar_nodes", r->setup.cloud.scalar_nodes.size());
    m.set(p + "wb_entries", r->setup.stencils.wb.index.size());
    m.set(p + "wd_entries", r->setup.stencils.wd.index.size());
    if (r->dominant) m.set(p + "dominant_hz", r->dominant->frequency);
    if (r->reference) m.set(p + "relative_error", relative_error(r->dominant->frequency, *r->reference));
    m.set(p + "spurious_count", r->spurious.size());
    for (std::size_t k = 0; k < r->concentration.size(); ++k) {
      const std::string key = p + "concentration_ratio." + std::to_string(k);
      if (r->concentration[k]) m.set(key, *r->concentration[k]);
      else m.set(key, "zero-field");
    }
    m.set(p + "wall_seconds", r->run.wall_seconds);
  }
  m.set("note", "wall-clock times are informational and hardware dependent");
  return c;
}

// Parameter sweep -------------------------------------------------------------------

struct SweepRow {
  double value = 0.0;
  std::optional<double> dominant;
  std::optional<double> reference;
  std::string status = "ok";
};

/// Runs the experiment for evenly spaced values of one parameter (currently only
/// kernel.shape_parameter). Failures of single points are recorded, not fatal.
inline std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param, double lo, double hi,
                                   int steps, const OracleReport* oracles = nullptr) {
  if (param != "shape_parameter") {
    throw Error(ErrorKind::ValidationError, "sweep: unsupported parameter '" + param + "'");
  }
  if (steps < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw Error(ErrorKind::ValidationError, "sweep: range must satisfy 0 < lo <= hi with steps >= 1");
  }
  std::vector<SweepRow> rows;
  for (int k = 0; k < steps; ++k) {
    SweepRow row;
    row.value = steps == 1 ? lo : lo + (hi - lo) * k / (steps - 1);
    ExperimentConfig c = cfg;
    c.shape_parameter = row.value;
    c.diagnostics.charge_times.clear();
    try {
      const auto rep = run_experiment(c, c.basis_mode, oracles);
      if (rep.dominant) row.dominant = rep.dominant->frequency;
      row.reference = rep.reference;
      if (!row.dominant) row.status = "no-peak";
    } catch (const Error& e) {
      row.status = std::string(to_string(e.kind()));
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::string& param, const std::vector<SweepRow>& rows) {
  os << param << ",dominant_hz,reference_hz,relative_error,status\n";
  for (const auto& r : rows) {
    os << format_double(r.value) << ',';
    if (r.dominant) os << format_double(*r.dominant);
    os << ',';
    if (r.reference) os << format_double(*r.reference);
    os << ',';
    if (r.dominant && r.reference) os << format_double(relative_error(*r.dominant, *r.reference));
    os << ',' << r.status << '\n';
  }
}

inline void write_oracle_csv(std::ostream& os, const OracleReport& r) {
  os << "kind,m,n,frequency_hz\n";
  for (const auto& [mode, f] : r.empty_modes) os << "empty," << mode.m << ',' << mode.n << ',' << format_double(f) << '\n';
  for (double f : r.loaded) os << "loaded,,," << format_double(f) << '\n';
}

}  // namespace dvm
