// shape_functions.hpp - scalar and divergence-free vector RBF shape functions
//
// Both families are local interpolants: for an evaluation point x with support
// nodes p_1..p_n the moment matrix G is assembled from the kernel at p_k - p_l,
// and the shape-function values (and derivatives) at x are G^-1 applied to the
// kernel row at x - p_k. Evaluating at a node reproduces the Kronecker delta.
//
// The vector family uses the matrix-valued kernel
//
//     K(d) = (grad grad^T - I lap) psi(d) = [[-psi_yy,  psi_xy],
//                                            [ psi_xy, -psi_xx]]
//
// whose columns are divergence-free for any psi, so every interpolant built
// from it is divergence-free everywhere, not only at the nodes.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dvm/errors.hpp"
#include "dvm/geometry.hpp"
#include "dvm/node_cloud.hpp"
#include "dvm/rbf_kernel.hpp"

namespace dvm {

enum class BasisMode { Vector, Scalar };

constexpr const char* to_string(BasisMode m) { return m == BasisMode::Vector ? "vector" : "scalar"; }

struct ShapeOptions {
  double condition_limit = 1e12;
};

/// Compressed rows: row i owns entries [offsets[i], offsets[i+1]) of index.
/// image[e] is the wall reflection applied to node index[e] (image::kNone for the node itself).
struct StencilRows {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> index;
  std::vector<std::uint8_t> image;

  std::size_t rows() const { return offsets.size() - 1; }
  std::size_t row_begin(std::size_t i) const { return offsets[i]; }
  std::size_t row_end(std::size_t i) const { return offsets[i + 1]; }
  std::size_t row_size(std::size_t i) const { return offsets[i + 1] - offsets[i]; }

  void append_row(const std::vector<std::size_t>& nbrs, const std::vector<std::uint8_t>& imgs = {}) {
    index.insert(index.end(), nbrs.begin(), nbrs.end());
    if (imgs.empty()) {
      image.insert(image.end(), nbrs.size(), image::kNone);
    } else {
      image.insert(image.end(), imgs.begin(), imgs.end());
    }
    offsets.push_back(index.size());
  }
};

struct ScalarShapeSet {
  std::vector<Vec2> points;
  StencilRows rows;
  std::vector<double> value;  ///< phi_j(x)
  std::vector<double> ddx;    ///< d phi_j / dx
  std::vector<double> ddy;    ///< d phi_j / dy
  std::vector<double> condition;  ///< 2-norm condition of each moment matrix
};

struct VectorShapeSet {
  std::vector<Vec2> points;
  StencilRows rows;
  /// Phi_j(x) stored row-major: {xx, xy, yx, yy}; column c is the response to unit e_c at node j.
  std::vector<std::array<double, 4>> value;
  /// (curl (Phi_j e_x))_z and (curl (Phi_j e_y))_z
  std::vector<std::array<double, 2>> curl;
  /// div (Phi_j e_x) and div (Phi_j e_y)
  std::vector<std::array<double, 2>> div;
  std::vector<double> condition;
};

namespace detail {

inline double check_condition(const Eigen::MatrixXd& g, const ShapeOptions& opts, std::size_t point) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= opts.condition_limit)) {
    throw Error(ErrorKind::SingularMomentMatrix,
                "moment matrix at evaluation point " + std::to_string(point) + " has condition " +
                    std::to_string(cond) + " (limit " + std::to_string(opts.condition_limit) +
                    "); shape parameter too large or nodes too clustered");
  }
  return cond;
}

// Moment systems are solved in extended precision so nodal identities survive condition numbers near the limit.
inline Eigen::MatrixXd solve_moments(const Eigen::MatrixXd& g, const Eigen::MatrixXd& rhs) {
  using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatrixXld gl = g.cast<long double>();
  return gl.ldlt().solve(rhs.cast<long double>()).cast<double>();
}

inline void check_support(std::span<const Vec2> nodes, const SupportTable& support, std::span<const Vec2> eval_points) {
  if (support.size() != eval_points.size()) {
    throw Error(ErrorKind::ShapeMismatch, "support table has " + std::to_string(support.size()) +
                                              " rows but " + std::to_string(eval_points.size()) +
                                              " evaluation points were given");
  }
  if (support.mirrored() && support.images.size() != support.neighbors.size()) {
    throw Error(ErrorKind::ShapeMismatch, "support image table does not match the neighbor table");
  }
  for (const auto& row : support.neighbors) {
    if (row.size() < kMinNeighbors) {
      throw Error(ErrorKind::IsolatedNode, "evaluation point has fewer than 3 support nodes");
    }
    for (std::size_t j : row) {
      if (j >= nodes.size()) {
        throw Error(ErrorKind::ShapeMismatch, "support index out of range of the node set");
      }
    }
  }
}

// 2x2 block of the divergence-free kernel at offset d.
inline std::array<double, 4> df_kernel(const KernelJet& j) { return {-j.yy, j.xy, j.xy, -j.xx}; }

inline std::vector<Vec2> support_positions(std::span<const Vec2> nodes, const SupportTable& support, std::size_t i) {
  std::vector<Vec2> pos(support[i].size());
  for (std::size_t k = 0; k < pos.size(); ++k) pos[k] = support.position(nodes, i, k);
  return pos;
}

inline void append_support_row(StencilRows& rows, const SupportTable& support, std::size_t i) {
  rows.append_row(support.neighbors[i], support.mirrored() ? support.images[i] : std::vector<std::uint8_t>{});
}

}  // namespace detail

inline ScalarShapeSet build_scalar_shapes(std::span<const Vec2> nodes, const SupportTable& support,
                                          const KernelParams& kernel, std::span<const Vec2> eval_points,
                                          const ShapeOptions& opts = {}) {
  kernel.validate();
  detail::check_support(nodes, support, eval_points);
  ScalarShapeSet out;
  out.points.assign(eval_points.begin(), eval_points.end());
  for (std::size_t i = 0; i < eval_points.size(); ++i) {
    const auto pos = detail::support_positions(nodes, support, i);
    const auto n = static_cast<Eigen::Index>(pos.size());
    Eigen::MatrixXd g(n, n);
    Eigen::MatrixXd rhs(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Vec2& pk = pos[k];
      for (Eigen::Index l = 0; l <= k; ++l) {
        const Vec2 d = pk - pos[l];
        g(k, l) = g(l, k) = eval(kernel, d.x, d.y);
      }
      const Vec2 d = eval_points[i] - pk;
      const KernelJet jt = jet(kernel, d.x, d.y);
      rhs(k, 0) = jt.v;
      rhs(k, 1) = jt.x;
      rhs(k, 2) = jt.y;
    }
    out.condition.push_back(detail::check_condition(g, opts, i));
    const Eigen::MatrixXd w = detail::solve_moments(g, rhs);
    detail::append_support_row(out.rows, support, i);
    for (Eigen::Index k = 0; k < n; ++k) {
      out.value.push_back(w(k, 0));
      out.ddx.push_back(w(k, 1));
      out.ddy.push_back(w(k, 2));
    }
  }
  return out;
}

inline VectorShapeSet build_vector_shapes(std::span<const Vec2> nodes, const SupportTable& support,
                                          const KernelParams& kernel, std::span<const Vec2> eval_points,
                                          const ShapeOptions& opts = {}) {
  kernel.validate();
  detail::check_support(nodes, support, eval_points);
  VectorShapeSet out;
  out.points.assign(eval_points.begin(), eval_points.end());
  for (std::size_t i = 0; i < eval_points.size(); ++i) {
    const auto pos = detail::support_positions(nodes, support, i);
    const auto n = static_cast<Eigen::Index>(pos.size());
    Eigen::MatrixXd g(2 * n, 2 * n);
    // Columns: value row x, value row y, curl, divergence.
    Eigen::MatrixXd rhs(2 * n, 4);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Vec2& pk = pos[k];
      for (Eigen::Index l = 0; l <= k; ++l) {
        const Vec2 d = pk - pos[l];
        const auto kb = detail::df_kernel(jet(kernel, d.x, d.y));
        for (int r = 0; r < 2; ++r) {
          for (int c = 0; c < 2; ++c) {
            g(2 * k + r, 2 * l + c) = kb[2 * r + c];
            g(2 * l + c, 2 * k + r) = kb[2 * r + c];
          }
        }
      }
      const Vec2 d = eval_points[i] - pk;
      const KernelJet jt = jet(kernel, d.x, d.y);
      const auto kb = detail::df_kernel(jt);
      // d/dx and d/dy of each kernel entry, written out from the third derivatives.
      const std::array<double, 4> kbx{-jt.xyy, jt.xxy, jt.xxy, -jt.xxx};
      const std::array<double, 4> kby{-jt.yyy, jt.xyy, jt.xyy, -jt.xxy};
      for (int c = 0; c < 2; ++c) {
        rhs(2 * k + c, 0) = kb[0 * 2 + c];
        rhs(2 * k + c, 1) = kb[1 * 2 + c];
        rhs(2 * k + c, 2) = kbx[1 * 2 + c] - kby[0 * 2 + c];
        rhs(2 * k + c, 3) = kbx[0 * 2 + c] + kby[1 * 2 + c];
      }
    }
    out.condition.push_back(detail::check_condition(g, opts, i));
    const Eigen::MatrixXd w = detail::solve_moments(g, rhs);
    detail::append_support_row(out.rows, support, i);
    for (Eigen::Index k = 0; k < n; ++k) {
      out.value.push_back({w(2 * k, 0), w(2 * k + 1, 0), w(2 * k, 1), w(2 * k + 1, 1)});
      out.curl.push_back({w(2 * k, 2), w(2 * k + 1, 2)});
      out.div.push_back({w(2 * k, 3), w(2 * k + 1, 3)});
    }
  }
  return out;
}

/// Sparse curl operators consumed by the time stepper. Mirror-image entries are
/// folded back onto their source nodes, so every row references real nodes only.
///   wb: one row per scalar (B) node over vector (E) neighbours; (curl E)_z = sum w.x Ex_j + w.y Ey_j
///   wd: one row per vector (D) node over scalar (H) neighbours; curl(Hz z) = sum w Hz_j
struct CurlStencils {
  BasisMode mode = BasisMode::Vector;
  StencilRows wb;
  std::vector<Vec2> wb_weights;
  StencilRows wd;
  std::vector<Vec2> wd_weights;
};

namespace detail {

inline void expect_points(std::span<const Vec2> got, std::span<const Vec2> want, const char* what) {
  if (got.size() != want.size()) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": evaluation point count does not match node set");
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (norm2(got[i] - want[i]) > 1e-24) {
      throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": evaluation point " + std::to_string(i) +
                                                " is not the matching node");
    }
  }
}

// Merge the entries of each row by node index. weight(e) gives the entry weight
// already mapped through the image parity of the field it multiplies.
template <typename WeightFn>
void fold_rows(const StencilRows& in, std::size_t target_count, const char* what, WeightFn weight, StencilRows& out,
               std::vector<Vec2>& out_w) {
  out = StencilRows{};
  out_w.clear();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    std::vector<std::pair<std::size_t, Vec2>> acc;
    for (std::size_t e = in.row_begin(r); e < in.row_end(r); ++e) {
      if (in.index[e] >= target_count) {
        throw Error(ErrorKind::ShapeMismatch, std::string(what) + " do not range over the expected node set");
      }
      acc.emplace_back(in.index[e], weight(e));
    }
    std::sort(acc.begin(), acc.end(), [](const auto& p, const auto& q) { return p.first < q.first; });
    std::vector<std::size_t> idx;
    for (const auto& [j, w] : acc) {
      if (!idx.empty() && idx.back() == j) {
        out_w.back() = out_w.back() + w;
      } else {
        idx.push_back(j);
        out_w.push_back(w);
      }
    }
    out.append_row(idx);
  }
}

inline void fill_wd(CurlStencils& st, const NodeCloud& cloud, const ScalarShapeSet& at_d_nodes) {
  expect_points(at_d_nodes.points, cloud.vector_nodes, "D-node scalar shapes");
  // Hz is even across a PEC wall, so image weights add unchanged.
  fold_rows(at_d_nodes.rows, cloud.scalar_nodes.size(), "D-node shapes",
            [&](std::size_t e) { return Vec2{at_d_nodes.ddy[e], -at_d_nodes.ddx[e]}; }, st.wd, st.wd_weights);
}

inline Vec2 apply_parity(const StencilRows& rows, std::size_t e, Vec2 w) {
  const Vec2 s = image_parity(rows.image[e]);
  return {s.x * w.x, s.y * w.y};
}

}  // namespace detail

/// Vector mode: W_B from the divergence-free basis, W_D from scalar shapes.
inline CurlStencils assemble_curl_stencils(const NodeCloud& cloud, const VectorShapeSet& at_b_nodes,
                                           const ScalarShapeSet& at_d_nodes) {
  detail::expect_points(at_b_nodes.points, cloud.scalar_nodes, "B-node vector shapes");
  CurlStencils st;
  st.mode = BasisMode::Vector;
  const auto& rows = at_b_nodes.rows;
  detail::fold_rows(
      rows, cloud.vector_nodes.size(), "B-node shapes",
      [&](std::size_t e) { return detail::apply_parity(rows, e, {at_b_nodes.curl[e][0], at_b_nodes.curl[e][1]}); },
      st.wb, st.wb_weights);
  detail::fill_wd(st, cloud, at_d_nodes);
  return st;
}

/// Scalar mode: Ex and Ey are each expanded in scalar shapes, so (curl E)_z = dEy/dx - dEx/dy.
inline CurlStencils assemble_scalar_curl_stencils(const NodeCloud& cloud, const ScalarShapeSet& at_b_nodes,
                                                  const ScalarShapeSet& at_d_nodes) {
  detail::expect_points(at_b_nodes.points, cloud.scalar_nodes, "B-node scalar shapes");
  CurlStencils st;
  st.mode = BasisMode::Scalar;
  const auto& rows = at_b_nodes.rows;
  detail::fold_rows(
      rows, cloud.vector_nodes.size(), "B-node shapes",
      [&](std::size_t e) { return detail::apply_parity(rows, e, {-at_b_nodes.ddy[e], at_b_nodes.ddx[e]}); }, st.wb,
      st.wb_weights);
  detail::fill_wd(st, cloud, at_d_nodes);
  return st;
}

/// Builds both stencil tables for a cloud; support radius is radius_factor * spacing.
/// With wall_images the supports include mirror nodes across the PEC walls.
inline CurlStencils build_curl_stencils(const NodeCloud& cloud, const KernelParams& kernel, double radius_factor,
                                        BasisMode mode, bool wall_images = true, const ShapeOptions& opts = {}) {
  const double radius = radius_factor * cloud.spacing;
  const auto support = [&](NodeSet q, NodeSet t) {
    return wall_images ? mirrored_neighbors(cloud, q, t, radius) : neighbors(cloud, q, t, radius);
  };
  const auto b_support = support(NodeSet::Scalar, NodeSet::Vector);
  const auto d_support = support(NodeSet::Vector, NodeSet::Scalar);
  const auto d_shapes = build_scalar_shapes(cloud.scalar_nodes, d_support, kernel, cloud.vector_nodes, opts);
  if (mode == BasisMode::Vector) {
    const auto b_shapes = build_vector_shapes(cloud.vector_nodes, b_support, kernel, cloud.scalar_nodes, opts);
    return assemble_curl_stencils(cloud, b_shapes, d_shapes);
  }
  const auto b_shapes = build_scalar_shapes(cloud.vector_nodes, b_support, kernel, cloud.scalar_nodes, opts);
  return assemble_scalar_curl_stencils(cloud, b_shapes, d_shapes);
}

/// Debug dump: one line per stencil entry.
inline void write_stencils(std::ostream& os, const CurlStencils& st) {
  const auto old = os.precision(17);
  os << "table,row,neighbor,w0,w1\n";
  for (std::size_t r = 0; r < st.wb.rows(); ++r) {
    for (std::size_t e = st.wb.row_begin(r); e < st.wb.row_end(r); ++e) {
      os << "WB," << r << ',' << st.wb.index[e] << ',' << st.wb_weights[e].x << ',' << st.wb_weights[e].y << '\n';
    }
  }
  for (std::size_t r = 0; r < st.wd.rows(); ++r) {
    for (std::size_t e = st.wd.row_begin(r); e < st.wd.row_end(r); ++e) {
      os << "WD," << r << ',' << st.wd.index[e] << ',' << st.wd_weights[e].x << ',' << st.wd_weights[e].y << '\n';
    }
  }
  os.precision(old);
}

}  // namespace dvm
