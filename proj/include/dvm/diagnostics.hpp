// diagnostics.hpp - spectra of probe series, charge density and mode scans
#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dvm/errors.hpp"
#include "dvm/geometry.hpp"
#include "dvm/manifest.hpp"
#include "dvm/node_cloud.hpp"
#include "dvm/shape_functions.hpp"
#include "dvm/time_solver.hpp"

namespace dvm {

enum class Window { None, Hann };

constexpr const char* to_string(Window w) { return w == Window::Hann ? "hann" : "none"; }

struct SpectrumOptions {
  Window window = Window::Hann;
  int zero_pad_factor = 1;
  double peak_floor_db = -60.0;  ///< peaks below this level relative to the largest non-DC bin are dropped
};

struct SpectrumPeak {
  double frequency = 0.0;  ///< refined, Hz
  double magnitude = 0.0;  ///< refined
  std::size_t bin = 0;     ///< bin of the local maximum
};

struct SpectrumResult {
  std::vector<double> frequency;
  std::vector<double> magnitude;
  std::vector<SpectrumPeak> peaks;  ///< ascending frequency
  double bin_width = 0.0;

  /// Largest magnitude over bins 1.. (DC excluded).
  double global_max() const {
    return magnitude.size() > 1 ? *std::max_element(magnitude.begin() + 1, magnitude.end()) : 0.0;
  }

  /// Strongest peak inside [f_lo, f_hi], if any.
  std::optional<SpectrumPeak> dominant_peak(double f_lo, double f_hi) const {
    std::optional<SpectrumPeak> best;
    for (const auto& p : peaks) {
      if (p.frequency >= f_lo && p.frequency <= f_hi && (!best || p.magnitude > best->magnitude)) best = p;
    }
    return best;
  }
};

inline constexpr std::size_t kMinSpectrumSamples = 16;

/// Magnitude spectrum of a uniformly sampled real series. Peaks are local maxima
/// refined by a parabola through the log-magnitude of the three bins around them.
inline SpectrumResult spectrum(std::span<const double> series, double sample_dt, const SpectrumOptions& opts = {}) {
  if (series.size() < kMinSpectrumSamples) {
    throw Error(ErrorKind::TooShort, "spectrum needs at least " + std::to_string(kMinSpectrumSamples) +
                                         " samples, got " + std::to_string(series.size()));
  }
  if (!(sample_dt > 0.0)) throw Error(ErrorKind::ValidationError, "sample interval must be > 0");
  if (opts.zero_pad_factor < 1) throw Error(ErrorKind::ValidationError, "zero_pad_factor must be >= 1");

  const std::size_t n = series.size();
  const std::size_t nfft = n * static_cast<std::size_t>(opts.zero_pad_factor);
  std::vector<double> x(nfft, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double w = 1.0;
    if (opts.window == Window::Hann) w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / static_cast<double>(n - 1));
    x[k] = w * series[k];
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> xf;
  fft.fwd(xf, x);

  SpectrumResult out;
  out.bin_width = 1.0 / (static_cast<double>(nfft) * sample_dt);
  const std::size_t half = nfft / 2 + 1;
  for (std::size_t k = 0; k < half; ++k) {
    out.frequency.push_back(static_cast<double>(k) * out.bin_width);
    out.magnitude.push_back(std::abs(xf[k]));
  }

  const double top = out.global_max();
  if (!(top > 0.0)) return out;
  const double floor = top * std::pow(10.0, opts.peak_floor_db / 20.0);
  const auto& m = out.magnitude;
  for (std::size_t k = 1; k + 1 < half; ++k) {
    if (!(m[k] > m[k - 1] && m[k] >= m[k + 1] && m[k] >= floor)) continue;
    SpectrumPeak p{out.frequency[k], m[k], k};
    if (m[k - 1] > 0.0 && m[k + 1] > 0.0) {
      const double a = std::log(m[k - 1]), b = std::log(m[k]), c = std::log(m[k + 1]);
      const double den = a - 2.0 * b + c;
      if (den < 0.0) {
        const double delta = 0.5 * (a - c) / den;
        p.frequency = (static_cast<double>(k) + delta) * out.bin_width;
        p.magnitude = std::exp(b - 0.25 * (a - c) * delta);
      }
    }
    out.peaks.push_back(p);
  }
  return out;
}

/// Spectrum of one E component (axis 0 = Ex, 1 = Ey) of one probe.
inline SpectrumResult spectrum(const ProbeRecord& rec, std::size_t probe, int axis, const SpectrumOptions& opts = {}) {
  if (rec.size() < kMinSpectrumSamples) {
    throw Error(ErrorKind::TooShort, "probe record has " + std::to_string(rec.size()) + " samples, need at least " +
                                         std::to_string(kMinSpectrumSamples));
  }
  const double dt = rec.sample_interval();
  for (std::size_t k = 1; k < rec.times.size(); ++k) {
    if (std::abs(rec.times[k] - rec.times[k - 1] - dt) > 1e-9 * dt) {
      throw Error(ErrorKind::ValidationError, "probe record is not uniformly sampled");
    }
  }
  const auto x = rec.component(probe, axis);
  return spectrum(x, dt, opts);
}

inline double relative_error(double measured, double analytical) {
  if (!(analytical > 0.0)) throw Error(ErrorKind::ValidationError, "analytical reference must be > 0");
  return std::abs(measured - analytical) / analytical;
}

/// Peaks inside [f_min, f_max] whose magnitude is above floor_db relative to the
/// largest non-DC bin of the whole spectrum.
inline std::vector<SpectrumPeak> spurious_mode_scan(const SpectrumResult& spec, double f_min, double f_max,
                                                    double floor_db) {
  if (!(f_min < f_max) || spec.frequency.empty() || f_min < 0.0 || f_max > spec.frequency.back()) {
    throw Error(ErrorKind::ValidationError, "scan band must satisfy 0 <= f_min < f_max <= spectrum range");
  }
  const double floor = spec.global_max() * std::pow(10.0, floor_db / 20.0);
  std::vector<SpectrumPeak> out;
  for (const auto& p : spec.peaks) {
    if (p.frequency >= f_min && p.frequency <= f_max && p.magnitude > floor) out.push_back(p);
  }
  return out;
}

inline double level_db(const SpectrumResult& spec, double magnitude) {
  return 20.0 * std::log10(magnitude / spec.global_max());
}

// Charge density ---------------------------------------------------------------

struct ChargeField {
  std::vector<Vec2> positions;
  std::vector<double> rho;  ///< C/m^3
  double time = 0.0;
};

/// Divergence operator over nodal D at a fixed set of evaluation points.
/// Vector mode keeps both the divergence rows of the vector basis (for the part
/// of D built by the curl updates) and scalar gradient rows (for the impressed
/// source deposit, the only charge a divergence-free basis can represent).
struct ChargeOperator {
  BasisMode mode = BasisMode::Vector;
  std::vector<Vec2> points;
  VectorShapeSet vector_rows;  ///< vector mode only
  ScalarShapeSet scalar_rows;
};

inline ChargeOperator build_charge_operator(const NodeCloud& cloud, const KernelParams& kernel, double radius_factor,
                                            BasisMode mode, std::span<const Vec2> eval_points,
                                            bool wall_images = true, const ShapeOptions& opts = {}) {
  const double radius = radius_factor * cloud.spacing;
  const Rect domain{0.0, 0.0, cloud.width, cloud.height};
  const auto support = wall_images ? mirrored_neighbors(eval_points, cloud.vector_nodes, radius, domain)
                                   : neighbors(eval_points, cloud.vector_nodes, radius);
  ChargeOperator op;
  op.mode = mode;
  op.points.assign(eval_points.begin(), eval_points.end());
  op.scalar_rows = build_scalar_shapes(cloud.vector_nodes, support, kernel, eval_points, opts);
  if (mode == BasisMode::Vector) {
    op.vector_rows = build_vector_shapes(cloud.vector_nodes, support, kernel, eval_points, opts);
  }
  return op;
}

inline ChargeOperator build_charge_operator(const NodeCloud& cloud, const KernelParams& kernel, double radius_factor,
                                            BasisMode mode, bool wall_images = true) {
  return build_charge_operator(cloud, kernel, radius_factor, mode, cloud.vector_nodes, wall_images);
}

/// rho = div D at the operator's points. In vector mode D is split into the part
/// accumulated by the curl updates, evaluated with the divergence-free basis, and
/// the impressed source deposit (FieldState::D_source), evaluated with scalar
/// gradients. In scalar mode all of D goes through scalar gradients.
inline ChargeField charge_density(const FieldState& s, const ChargeOperator& op, double time) {
  const std::size_t nv = s.D_now.size();
  if (s.D_source.size() != nv) throw Error(ErrorKind::ShapeMismatch, "field state arrays differ in length");
  const auto& sr = op.scalar_rows;
  if (sr.rows.rows() != op.points.size()) throw Error(ErrorKind::ShapeMismatch, "charge operator is incomplete");
  if (op.mode == BasisMode::Vector && op.vector_rows.rows.rows() != op.points.size()) {
    throw Error(ErrorKind::ShapeMismatch, "charge operator lacks divergence rows");
  }

  ChargeField out;
  out.positions = op.points;
  out.time = time;
  out.rho.assign(op.points.size(), 0.0);
  auto image_value = [](const StencilRows& rows, std::size_t e, Vec2 v) {
    const Vec2 p = image_parity(rows.image[e]);
    return Vec2{p.x * v.x, p.y * v.y};
  };
  for (std::size_t i = 0; i < op.points.size(); ++i) {
    double rho = 0.0;
    for (std::size_t e = sr.rows.row_begin(i); e < sr.rows.row_end(i); ++e) {
      const std::size_t j = sr.rows.index[e];
      if (j >= nv) throw Error(ErrorKind::ShapeMismatch, "charge operator indexes past the vector nodes");
      const Vec2 d = op.mode == BasisMode::Vector ? s.D_source[j] : s.D_now[j];
      const Vec2 v = image_value(sr.rows, e, d);
      rho += sr.ddx[e] * v.x + sr.ddy[e] * v.y;
    }
    if (op.mode == BasisMode::Vector) {
      const auto& vr = op.vector_rows;
      for (std::size_t e = vr.rows.row_begin(i); e < vr.rows.row_end(i); ++e) {
        const std::size_t j = vr.rows.index[e];
        const Vec2 v = image_value(vr.rows, e, s.D_now[j] - s.D_source[j]);
        rho += vr.div[e][0] * v.x + vr.div[e][1] * v.y;
      }
    }
    out.rho[i] = rho;
  }
  return out;
}

/// Share of sum |rho| within radius of center. nullopt when the field is identically zero.
inline std::optional<double> concentration_ratio(const ChargeField& field, Vec2 center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::ValidationError, "concentration radius must be > 0");
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < field.rho.size(); ++i) {
    const double a = std::abs(field.rho[i]);
    total += a;
    if (distance(field.positions[i], center) <= radius * (1.0 + 1e-12)) inside += a;
  }
  if (total == 0.0) return std::nullopt;
  return inside / total;
}

/// Largest |rho| at points farther than radius from center, relative to the peak |rho|.
inline double far_field_charge_fraction(const ChargeField& field, Vec2 center, double radius) {
  double peak = 0.0, far = 0.0;
  for (std::size_t i = 0; i < field.rho.size(); ++i) {
    const double a = std::abs(field.rho[i]);
    peak = std::max(peak, a);
    if (distance(field.positions[i], center) > radius * (1.0 + 1e-12)) far = std::max(far, a);
  }
  return peak > 0.0 ? far / peak : 0.0;
}

// Export ------------------------------------------------------------------------

inline void write_spectrum_csv(std::ostream& os, const SpectrumResult& spec) {
  os << "frequency_hz,magnitude\n";
  for (std::size_t k = 0; k < spec.frequency.size(); ++k) {
    os << format_double(spec.frequency[k]) << ',' << format_double(spec.magnitude[k]) << '\n';
  }
}

inline void write_peaks_csv(std::ostream& os, const SpectrumResult& spec) {
  os << "frequency_hz,magnitude,level_db,bin\n";
  for (const auto& p : spec.peaks) {
    os << format_double(p.frequency) << ',' << format_double(p.magnitude) << ','
       << format_double(level_db(spec, p.magnitude)) << ',' << p.bin << '\n';
  }
}

inline void write_charge_csv(std::ostream& os, const ChargeField& field) {
  os << "x,y,rho\n";
  for (std::size_t i = 0; i < field.rho.size(); ++i) {
    os << format_double(field.positions[i].x) << ',' << format_double(field.positions[i].y) << ','
       << format_double(field.rho[i]) << '\n';
  }
}

}  // namespace dvm
