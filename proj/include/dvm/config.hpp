// config.hpp - experiment configuration: INI parsing, validation, serialization
#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dvm/diagnostics.hpp"
#include "dvm/drude_ade.hpp"
#include "dvm/errors.hpp"
#include "dvm/geometry.hpp"
#include "dvm/manifest.hpp"
#include "dvm/rbf_kernel.hpp"
#include "dvm/shape_functions.hpp"

namespace dvm {

struct PlasmaConfig {
  bool enabled = false;
  Rect region{0.0, 0.0, 2.5e-3, 5e-3};
  DrudeMaterial material{};
};

struct DiagnosticsConfig {
  std::size_t probe = 0;
  int component = 1;  ///< 0 = Ex, 1 = Ey
  Window window = Window::Hann;
  int zero_pad_factor = 1;
  double peak_floor_db = -60.0;
  double band_lo = 140e9;  ///< analysis band for the dominant peak
  double band_hi = 180e9;
  double spurious_lo = 10e9;
  double spurious_hi = 60e9;
  double spurious_floor_db = -30.0;
  std::vector<double> charge_times;  ///< seconds
  double concentration_radius = 2.0;  ///< in units of the spacing
  bool fd_oracle = true;
  int fd_grid = 256;

  friend bool operator==(const DiagnosticsConfig&, const DiagnosticsConfig&) = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  double width = 5e-3;
  double height = 5e-3;
  double spacing = 0.5e-3;
  PlasmaConfig plasma;
  double shape_parameter = 3.0;
  std::optional<double> support_scale;  ///< defaults to spacing
  double radius_factor = 2.1;
  bool wall_images = true;
  std::optional<double> dt;  ///< nullopt = auto
  double dt_safety = 0.5;
  std::optional<double> duration = 2e-9;
  std::optional<long> n_steps;
  long record_every = 1;
  double blowup_limit = 1e100;
  bool vacuum_shortcut = false;
  double amplitude = 1.0;
  double f0 = 100e9;
  double t0 = 15e-12;
  double tau = 5e-12;
  Vec2 direction{0.0, 1.0};
  Vec2 source_position{2.5e-3, 2.5e-3};
  std::vector<Vec2> probes{{1.25e-3, 1.25e-3}};
  BasisMode basis_mode = BasisMode::Vector;
  std::string output_dir = "out";
  DiagnosticsConfig diagnostics;

  KernelParams kernel() const { return {shape_parameter, support_scale.value_or(spacing)}; }

  double resolved_dt() const {
    return dt ? *dt : dt_safety * spacing / (constants::c0 * std::sqrt(2.0));
  }

  long resolved_steps() const {
    if (n_steps) return *n_steps;
    return static_cast<long>(std::ceil(*duration / resolved_dt() - 1e-9));
  }

  std::vector<DrudeMaterial> materials() const {
    return plasma.enabled ? std::vector<DrudeMaterial>{DrudeMaterial{}, plasma.material}
                          : std::vector<DrudeMaterial>{DrudeMaterial{}};
  }

  void validate() const;
};

namespace detail {

inline Error config_error(const std::string& key, const std::string& what) {
  return Error(ErrorKind::ValidationError, key + ": " + what);
}

inline Error value_error(const std::string& key, const std::string& what) {
  return Error(ErrorKind::ParseError, key + ": " + what);
}

inline double parse_number(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw value_error(std::string(key), "expected a finite number, got '" + std::string(text) + "'");
  }
  return v;
}

inline long parse_integer(std::string_view key, std::string_view text) {
  long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw value_error(std::string(key), "expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw value_error(std::string(key), "expected true or false, got '" + std::string(text) + "'");
}

inline std::vector<double> parse_list(std::string_view key, const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(parse_number(key, tok));
  return out;
}

inline std::vector<double> parse_fixed(std::string_view key, const std::string& text, std::size_t count) {
  auto v = parse_list(key, text);
  if (v.size() != count) {
    throw value_error(std::string(key), "expected " + std::to_string(count) + " numbers, got " +
                                             std::to_string(v.size()));
  }
  return v;
}

inline std::vector<Vec2> parse_points(std::string_view key, const std::string& text) {
  std::vector<Vec2> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ';')) {
    const auto v = parse_list(key, item);
    if (v.empty()) continue;
    if (v.size() != 2) throw value_error(std::string(key), "each point needs two coordinates");
    out.push_back({v[0], v[1]});
  }
  return out;
}

inline std::string join(std::initializer_list<double> v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + format_double(x);
  return s;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  using detail::config_error;
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw config_error(key, "must be > 0");
  };
  const Rect cavity{0.0, 0.0, width, height};
  positive("cavity.width", width);
  positive("cavity.height", height);
  positive("cavity.spacing", spacing);
  if (plasma.enabled) {
    if (plasma.region.degenerate()) throw config_error("plasma.region", "must have positive width and height");
    if (!cavity.contains(plasma.region, 1e-12)) throw config_error("plasma.region", "must lie inside the cavity");
    try {
      plasma.material.validate();
    } catch (const Error&) {
      throw config_error("plasma.omega_ep/gamma_e/omega_mp/gamma_m", "must be finite and >= 0");
    }
  }
  positive("kernel.shape_parameter", shape_parameter);
  if (support_scale) positive("kernel.support_scale", *support_scale);
  positive("kernel.radius_factor", radius_factor);
  if (dt) positive("time.dt", *dt);
  if (!(dt_safety > 0.0) || dt_safety > 1.0) throw config_error("time.dt_safety", "must lie in (0, 1]");
  if (duration.has_value() == n_steps.has_value()) {
    throw config_error("time.duration/time.n_steps", "exactly one must be given");
  }
  if (duration) positive("time.duration", *duration);
  if (n_steps && *n_steps <= 0) throw config_error("time.n_steps", "must be > 0");
  if (record_every < 1) throw config_error("time.record_every", "must be >= 1");
  positive("time.blowup_limit", blowup_limit);
  positive("source.tau", tau);
  positive("source.f0", f0);
  if (std::abs(norm(direction) - 1.0) > 1e-9) throw config_error("source.direction", "must be a unit vector");
  if (!cavity.contains(source_position, 1e-12)) throw config_error("source.position", "must lie inside the cavity");
  if (probes.empty()) throw config_error("probes.positions", "at least one probe is required");
  for (const auto& p : probes) {
    if (!cavity.contains(p, 1e-12)) throw config_error("probes.positions", "every probe must lie inside the cavity");
  }
  const auto& d = diagnostics;
  if (d.probe >= probes.size()) throw config_error("diagnostics.probe", "index out of range of the probe list");
  if (d.zero_pad_factor < 1) throw config_error("diagnostics.zero_pad_factor", "must be >= 1");
  if (!(d.band_lo > 0.0 && d.band_lo < d.band_hi)) throw config_error("diagnostics.analysis_band", "need 0 < lo < hi");
  if (!(d.spurious_lo >= 0.0 && d.spurious_lo < d.spurious_hi)) {
    throw config_error("diagnostics.spurious_band", "need 0 <= lo < hi");
  }
  for (double t : d.charge_times) {
    if (!(t >= 0.0)) throw config_error("diagnostics.charge_times", "times must be >= 0");
  }
  positive("diagnostics.concentration_radius", d.concentration_radius);
  if (d.fd_grid < 8) throw config_error("diagnostics.fd_grid", "must be >= 8");
}

/// Parses an INI document. Unknown sections or keys are rejected.
inline ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(e.line()) + ": " + e.message());
  }

  static const std::map<std::string, std::set<std::string>> known{
      {"experiment", {"name"}},
      {"cavity", {"width", "height", "spacing"}},
      {"plasma", {"enabled", "region", "omega_ep", "gamma_e", "omega_mp", "gamma_m"}},
      {"kernel", {"shape_parameter", "support_scale", "radius_factor", "wall_images"}},
      {"time", {"dt", "dt_safety", "duration", "n_steps", "record_every", "blowup_limit", "vacuum_shortcut"}},
      {"source", {"amplitude", "f0", "t0", "tau", "direction", "position"}},
      {"probes", {"positions"}},
      {"solver", {"basis_mode"}},
      {"output", {"directory"}},
      {"diagnostics",
       {"probe", "component", "window", "zero_pad_factor", "peak_floor_db", "analysis_band", "spurious_band",
        "spurious_floor_db", "charge_times", "concentration_radius", "fd_oracle", "fd_grid"}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorKind::ValidationError, section + ": key outside a section");
    }
    if (it == known.end()) throw Error(ErrorKind::ValidationError, section + ": unknown section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw Error(ErrorKind::ValidationError, section + "." + key + ": unknown key");
    }
  }

  ExperimentConfig c;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };
  auto num = [&](const std::string& path, double& out) {
    if (auto v = get(path)) out = detail::parse_number(path, *v);
  };
  auto flag = [&](const std::string& path, bool& out) {
    if (auto v = get(path)) out = detail::parse_bool(path, *v);
  };

  if (auto v = get("experiment.name")) c.name = *v;
  num("cavity.width", c.width);
  num("cavity.height", c.height);
  num("cavity.spacing", c.spacing);

  flag("plasma.enabled", c.plasma.enabled);
  if (auto v = get("plasma.region")) {
    const auto r = detail::parse_fixed("plasma.region", *v, 4);
    c.plasma.region = {r[0], r[1], r[2], r[3]};
  }
  num("plasma.omega_ep", c.plasma.material.omega_ep);
  num("plasma.gamma_e", c.plasma.material.gamma_e);
  num("plasma.omega_mp", c.plasma.material.omega_mp);
  num("plasma.gamma_m", c.plasma.material.gamma_m);

  num("kernel.shape_parameter", c.shape_parameter);
  if (auto v = get("kernel.support_scale")) c.support_scale = detail::parse_number("kernel.support_scale", *v);
  num("kernel.radius_factor", c.radius_factor);
  flag("kernel.wall_images", c.wall_images);

  if (auto v = get("time.dt"); v && *v != "auto") c.dt = detail::parse_number("time.dt", *v);
  num("time.dt_safety", c.dt_safety);
  const auto duration_text = get("time.duration");
  if (duration_text) c.duration = detail::parse_number("time.duration", *duration_text);
  if (auto v = get("time.n_steps")) {
    c.n_steps = detail::parse_integer("time.n_steps", *v);
    if (!duration_text) c.duration.reset();
  }
  if (auto v = get("time.record_every")) c.record_every = detail::parse_integer("time.record_every", *v);
  num("time.blowup_limit", c.blowup_limit);
  flag("time.vacuum_shortcut", c.vacuum_shortcut);

  num("source.amplitude", c.amplitude);
  num("source.f0", c.f0);
  num("source.t0", c.t0);
  num("source.tau", c.tau);
  if (auto v = get("source.direction")) {
    const auto d = detail::parse_fixed("source.direction", *v, 2);
    c.direction = {d[0], d[1]};
  }
  if (auto v = get("source.position")) {
    const auto d = detail::parse_fixed("source.position", *v, 2);
    c.source_position = {d[0], d[1]};
  }
  if (auto v = get("probes.positions")) c.probes = detail::parse_points("probes.positions", *v);

  if (auto v = get("solver.basis_mode")) {
    if (*v == "vector") c.basis_mode = BasisMode::Vector;
    else if (*v == "scalar") c.basis_mode = BasisMode::Scalar;
    else throw detail::config_error("solver.basis_mode", "expected vector or scalar, got '" + *v + "'");
  }
  if (auto v = get("output.directory")) c.output_dir = *v;

  auto& d = c.diagnostics;
  if (auto v = get("diagnostics.probe")) {
    const long p = detail::parse_integer("diagnostics.probe", *v);
    if (p < 0) throw detail::config_error("diagnostics.probe", "must be >= 0");
    d.probe = static_cast<std::size_t>(p);
  }
  if (auto v = get("diagnostics.component")) {
    if (*v == "ex") d.component = 0;
    else if (*v == "ey") d.component = 1;
    else throw detail::config_error("diagnostics.component", "expected ex or ey, got '" + *v + "'");
  }
  if (auto v = get("diagnostics.window")) {
    if (*v == "hann") d.window = Window::Hann;
    else if (*v == "none") d.window = Window::None;
    else throw detail::config_error("diagnostics.window", "expected hann or none, got '" + *v + "'");
  }
  if (auto v = get("diagnostics.zero_pad_factor")) {
    d.zero_pad_factor = static_cast<int>(detail::parse_integer("diagnostics.zero_pad_factor", *v));
  }
  num("diagnostics.peak_floor_db", d.peak_floor_db);
  if (auto v = get("diagnostics.analysis_band")) {
    const auto b = detail::parse_fixed("diagnostics.analysis_band", *v, 2);
    d.band_lo = b[0];
    d.band_hi = b[1];
  }
  if (auto v = get("diagnostics.spurious_band")) {
    const auto b = detail::parse_fixed("diagnostics.spurious_band", *v, 2);
    d.spurious_lo = b[0];
    d.spurious_hi = b[1];
  }
  num("diagnostics.spurious_floor_db", d.spurious_floor_db);
  if (auto v = get("diagnostics.charge_times")) d.charge_times = detail::parse_list("diagnostics.charge_times", *v);
  num("diagnostics.concentration_radius", d.concentration_radius);
  flag("diagnostics.fd_oracle", d.fd_oracle);
  if (auto v = get("diagnostics.fd_grid")) d.fd_grid = static_cast<int>(detail::parse_integer("diagnostics.fd_grid", *v));

  c.validate();
  return c;
}

/// Writes every field, so parse_config(serialize_config(c)) reproduces c exactly.
inline std::string serialize_config(const ExperimentConfig& c) {
  using detail::join;
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "[experiment]\nname = " << c.name << "\n\n";
  os << "[cavity]\nwidth = " << format_double(c.width) << "\nheight = " << format_double(c.height)
     << "\nspacing = " << format_double(c.spacing) << "\n\n";
  os << "[plasma]\nenabled = " << b(c.plasma.enabled) << "\nregion = "
     << join({c.plasma.region.x0, c.plasma.region.y0, c.plasma.region.x1, c.plasma.region.y1})
     << "\nomega_ep = " << format_double(c.plasma.material.omega_ep)
     << "\ngamma_e = " << format_double(c.plasma.material.gamma_e)
     << "\nomega_mp = " << format_double(c.plasma.material.omega_mp)
     << "\ngamma_m = " << format_double(c.plasma.material.gamma_m) << "\n\n";
  os << "[kernel]\nshape_parameter = " << format_double(c.shape_parameter);
  if (c.support_scale) os << "\nsupport_scale = " << format_double(*c.support_scale);
  os << "\nradius_factor = " << format_double(c.radius_factor) << "\nwall_images = " << b(c.wall_images) << "\n\n";
  os << "[time]\ndt = " << (c.dt ? format_double(*c.dt) : std::string("auto"))
     << "\ndt_safety = " << format_double(c.dt_safety);
  if (c.duration) os << "\nduration = " << format_double(*c.duration);
  if (c.n_steps) os << "\nn_steps = " << *c.n_steps;
  os << "\nrecord_every = " << c.record_every << "\nblowup_limit = " << format_double(c.blowup_limit)
     << "\nvacuum_shortcut = " << b(c.vacuum_shortcut) << "\n\n";
  os << "[source]\namplitude = " << format_double(c.amplitude) << "\nf0 = " << format_double(c.f0)
     << "\nt0 = " << format_double(c.t0) << "\ntau = " << format_double(c.tau)
     << "\ndirection = " << join({c.direction.x, c.direction.y})
     << "\nposition = " << join({c.source_position.x, c.source_position.y}) << "\n\n";
  os << "[probes]\npositions = ";
  for (std::size_t i = 0; i < c.probes.size(); ++i) {
    os << (i ? "; " : "") << join({c.probes[i].x, c.probes[i].y});
  }
  os << "\n\n[solver]\nbasis_mode = " << to_string(c.basis_mode) << "\n\n";
  os << "[output]\ndirectory = " << c.output_dir << "\n\n";
  const auto& d = c.diagnostics;
  os << "[diagnostics]\nprobe = " << d.probe << "\ncomponent = " << (d.component == 0 ? "ex" : "ey")
     << "\nwindow = " << to_string(d.window) << "\nzero_pad_factor = " << d.zero_pad_factor
     << "\npeak_floor_db = " << format_double(d.peak_floor_db)
     << "\nanalysis_band = " << join({d.band_lo, d.band_hi})
     << "\nspurious_band = " << join({d.spurious_lo, d.spurious_hi})
     << "\nspurious_floor_db = " << format_double(d.spurious_floor_db) << "\ncharge_times =";
  for (double t : d.charge_times) os << ' ' << format_double(t);
  os << "\nconcentration_radius = " << format_double(d.concentration_radius)
     << "\nfd_oracle = " << b(d.fd_oracle) << "\nfd_grid = " << d.fd_grid << '\n';
  return os.str();
}

}  // namespace dvm
