// node_cloud.hpp - cavity node sets, material tags, PEC flags and support search
//
// Vector nodes carry E and D and sit on the uniform grid including the walls.
// Scalar nodes carry Hz and Bz and sit at the cell centres (strictly interior).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dvm/errors.hpp"
#include "dvm/geometry.hpp"

namespace dvm {

enum class NodeSet { Vector, Scalar };

/// Which E components a PEC wall node must zero. XWall is a wall running along x
/// (y = 0 or y = height), so Ex is tangential there; YWall is the x = const pair.
enum class BoundaryFlag : std::uint8_t { None, XWall, YWall, Corner };

constexpr bool zeroes_ex(BoundaryFlag f) { return f == BoundaryFlag::XWall || f == BoundaryFlag::Corner; }
constexpr bool zeroes_ey(BoundaryFlag f) { return f == BoundaryFlag::YWall || f == BoundaryFlag::Corner; }

constexpr const char* to_string(BoundaryFlag f) {
  switch (f) {
    case BoundaryFlag::None: return "none";
    case BoundaryFlag::XWall: return "x-wall";
    case BoundaryFlag::YWall: return "y-wall";
    case BoundaryFlag::Corner: return "corner";
  }
  return "none";
}

struct NodeCloud {
  double width = 0.0;
  double height = 0.0;
  double spacing = 0.0;
  std::vector<Vec2> vector_nodes;
  std::vector<Vec2> scalar_nodes;
  std::vector<int> vector_material;
  std::vector<int> scalar_material;
  std::vector<BoundaryFlag> boundary;  ///< per vector node

  std::span<const Vec2> positions(NodeSet set) const {
    return set == NodeSet::Vector ? std::span<const Vec2>(vector_nodes) : std::span<const Vec2>(scalar_nodes);
  }

  std::size_t nearest(NodeSet set, const Vec2& p) const {
    const auto pts = positions(set);
    std::size_t best = 0;
    double best_d = norm2(pts[0] - p);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double d = norm2(pts[i] - p);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }
};

inline int material_at(const Vec2& p, const std::optional<Rect>& plasma_region, double tol) {
  return plasma_region && plasma_region->contains(p, tol) ? 1 : 0;
}

/// Uniform staggered cloud on [0, width] x [0, height].
inline NodeCloud build_cavity_cloud(double width, double height, double spacing,
                                    const std::optional<Rect>& plasma_region) {
  if (!(width > 0.0) || !(height > 0.0) || !(spacing > 0.0)) {
    throw Error(ErrorKind::NonConformingSpacing, "cavity dimensions and spacing must be positive");
  }
  const double fx = width / spacing;
  const double fy = height / spacing;
  const long nx = std::lround(fx);
  const long ny = std::lround(fy);
  if (nx < 1 || ny < 1 || std::abs(fx - nx) > 1e-9 * fx || std::abs(fy - ny) > 1e-9 * fy) {
    throw Error(ErrorKind::NonConformingSpacing,
                "spacing " + std::to_string(spacing) + " does not tile the cavity");
  }
  const Rect cavity{0.0, 0.0, width, height};
  const double tol = 1e-9 * spacing;
  if (plasma_region) {
    if (plasma_region->degenerate()) {
      throw Error(ErrorKind::EmptyRegion, "plasma region has zero area");
    }
    if (!cavity.contains(*plasma_region, tol)) {
      throw Error(ErrorKind::EmptyRegion, "plasma region extends outside the cavity");
    }
  }

  NodeCloud cloud;
  cloud.width = width;
  cloud.height = height;
  cloud.spacing = spacing;
  // Last index lands exactly on the far wall.
  auto coord = [](long i, long n, double len) { return i == n ? len : len * static_cast<double>(i) / static_cast<double>(n); };

  for (long j = 0; j <= ny; ++j) {
    for (long i = 0; i <= nx; ++i) {
      const Vec2 p{coord(i, nx, width), coord(j, ny, height)};
      cloud.vector_nodes.push_back(p);
      cloud.vector_material.push_back(material_at(p, plasma_region, tol));
      const bool on_x = (i == 0 || i == nx);  // x = const wall, Ey tangential
      const bool on_y = (j == 0 || j == ny);
      BoundaryFlag flag = BoundaryFlag::None;
      if (on_x && on_y) {
        flag = BoundaryFlag::Corner;
      } else if (on_x) {
        flag = BoundaryFlag::YWall;
      } else if (on_y) {
        flag = BoundaryFlag::XWall;
      }
      cloud.boundary.push_back(flag);
    }
  }
  for (long j = 0; j < ny; ++j) {
    for (long i = 0; i < nx; ++i) {
      const Vec2 p{width * (static_cast<double>(i) + 0.5) / static_cast<double>(nx),
                   height * (static_cast<double>(j) + 0.5) / static_cast<double>(ny)};
      cloud.scalar_nodes.push_back(p);
      cloud.scalar_material.push_back(material_at(p, plasma_region, tol));
    }
  }
  return cloud;
}

/// Reflection of a node across one PEC wall, or two at a corner (bit mask).
namespace image {
inline constexpr std::uint8_t kNone = 0;
inline constexpr std::uint8_t kLeft = 1;    // x = 0
inline constexpr std::uint8_t kRight = 2;   // x = width
inline constexpr std::uint8_t kBottom = 4;  // y = 0
inline constexpr std::uint8_t kTop = 8;     // y = height
inline constexpr std::uint8_t kAll[] = {kLeft, kRight, kBottom, kTop,
                                        kLeft | kBottom, kLeft | kTop, kRight | kBottom, kRight | kTop};
}  // namespace image

inline Vec2 image_position(const Vec2& p, std::uint8_t img, const Rect& domain) {
  Vec2 q = p;
  if (img & image::kLeft) q.x = 2.0 * domain.x0 - p.x;
  if (img & image::kRight) q.x = 2.0 * domain.x1 - p.x;
  if (img & image::kBottom) q.y = 2.0 * domain.y0 - p.y;
  if (img & image::kTop) q.y = 2.0 * domain.y1 - p.y;
  return q;
}

/// Sign applied to (Ex, Ey) of an image node under PEC: the tangential component
/// is odd across the wall, the normal component even. Hz and Bz are even.
constexpr Vec2 image_parity(std::uint8_t img) {
  Vec2 s{1.0, 1.0};
  if (img & (image::kLeft | image::kRight)) s.y = -s.y;
  if (img & (image::kBottom | image::kTop)) s.x = -s.x;
  return s;
}

/// Neighbor lists (sorted by index) of each query point within a fixed radius.
/// When images are present, entry k of row i refers to node neighbors[i][k]
/// reflected by images[i][k] across the walls of domain.
struct SupportTable {
  double radius = 0.0;
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<std::uint8_t>> images;  ///< empty when no mirror nodes are used
  Rect domain{};

  std::size_t size() const { return neighbors.size(); }
  const std::vector<std::size_t>& operator[](std::size_t i) const { return neighbors[i]; }
  bool mirrored() const { return !images.empty(); }
  std::uint8_t image_of(std::size_t i, std::size_t k) const { return images.empty() ? image::kNone : images[i][k]; }

  Vec2 position(std::span<const Vec2> nodes, std::size_t i, std::size_t k) const {
    const Vec2& p = nodes[neighbors[i][k]];
    const std::uint8_t img = image_of(i, k);
    return img == image::kNone ? p : image_position(p, img, domain);
  }
};

/// Static 2D kd-tree over a point list; answers exact fixed-radius queries.
class KdTree2 {
 public:
  explicit KdTree2(std::span<const Vec2> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!order_.empty()) {
      root_ = build(0, order_.size(), 0);
    }
  }

  std::vector<std::size_t> radius_query(const Vec2& q, double radius) const {
    std::vector<std::size_t> out;
    if (root_ >= 0) {
      query(root_, q, radius * radius, out);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    std::size_t begin, end;  // range into order_
    int axis;
    double split;
    int left = -1, right = -1;
  };
  static constexpr std::size_t kLeafSize = 8;

  static double axis_value(const Vec2& p, int axis) { return axis == 0 ? p.x : p.y; }

  int build(std::size_t begin, std::size_t end, int depth) {
    Node node{begin, end, depth % 2, 0.0};
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) {
      return id;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    const int axis = node.axis;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return axis_value(points_[a], axis) < axis_value(points_[b], axis); });
    nodes_[id].split = axis_value(points_[order_[mid]], axis);
    const int l = build(begin, mid, depth + 1);
    const int r = build(mid, end, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void query(int id, const Vec2& q, double r2, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (n.left < 0) {
      for (std::size_t k = n.begin; k < n.end; ++k) {
        if (norm2(points_[order_[k]] - q) <= r2) {
          out.push_back(order_[k]);
        }
      }
      return;
    }
    const double d = axis_value(q, n.axis) - n.split;
    // Points equal to the split value may live on either side.
    if (d <= 0.0 || d * d <= r2) query(n.left, q, r2, out);
    if (d >= 0.0 || d * d <= r2) query(n.right, q, r2, out);
  }

  std::vector<Vec2> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

inline constexpr std::size_t kMinNeighbors = 3;

/// Fixed-radius support of arbitrary query points within a target point list.
inline SupportTable neighbors(std::span<const Vec2> queries, std::span<const Vec2> targets, double radius,
                              std::size_t min_neighbors = kMinNeighbors) {
  if (!(radius > 0.0)) {
    throw Error(ErrorKind::ValidationError, "support radius must be > 0");
  }
  const KdTree2 tree(targets);
  SupportTable table;
  table.radius = radius;
  table.neighbors.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto list = tree.radius_query(queries[i], radius);
    if (list.size() < min_neighbors) {
      throw Error(ErrorKind::IsolatedNode, "query point " + std::to_string(i) + " has only " +
                                               std::to_string(list.size()) + " neighbors within " +
                                               std::to_string(radius) + " m");
    }
    table.neighbors.push_back(std::move(list));
  }
  return table;
}

inline SupportTable neighbors(const NodeCloud& cloud, NodeSet query_set, NodeSet target_set, double radius) {
  return neighbors(cloud.positions(query_set), cloud.positions(target_set), radius);
}

/// Fixed-radius support that also collects mirror images of the targets across the
/// walls of domain. Images that coincide with their source node (nodes on a wall)
/// are skipped. Rows are ordered by (node index, image code).
inline SupportTable mirrored_neighbors(std::span<const Vec2> queries, std::span<const Vec2> targets, double radius,
                                       const Rect& domain, std::size_t min_neighbors = kMinNeighbors) {
  if (!(radius > 0.0)) {
    throw Error(ErrorKind::ValidationError, "support radius must be > 0");
  }
  const KdTree2 tree(targets);
  const double same_tol2 = 1e-24 * domain.width() * domain.width();
  SupportTable table;
  table.radius = radius;
  table.domain = domain;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    std::vector<std::pair<std::size_t, std::uint8_t>> row;
    for (std::size_t j : tree.radius_query(queries[i], radius)) row.emplace_back(j, image::kNone);
    for (std::uint8_t img : image::kAll) {
      // Reflection is an involution: image(p) is near q exactly when p is near image(q).
      for (std::size_t j : tree.radius_query(image_position(queries[i], img, domain), radius)) {
        row.emplace_back(j, img);
      }
    }
    std::sort(row.begin(), row.end());
    // A node on a wall is its own image there; a corner reflection can repeat a single one.
    std::vector<std::pair<std::size_t, std::uint8_t>> unique_row;
    for (const auto& [j, img] : row) {
      const Vec2 p = image_position(targets[j], img, domain);
      const bool seen = std::any_of(unique_row.begin(), unique_row.end(), [&](const auto& e) {
        return e.first == j && norm2(image_position(targets[j], e.second, domain) - p) <= same_tol2;
      });
      if (!seen) unique_row.emplace_back(j, img);
    }
    row = std::move(unique_row);
    if (row.size() < min_neighbors) {
      throw Error(ErrorKind::IsolatedNode, "query point " + std::to_string(i) + " has only " +
                                               std::to_string(row.size()) + " neighbors within " +
                                               std::to_string(radius) + " m");
    }
    std::vector<std::size_t> idx;
    std::vector<std::uint8_t> imgs;
    for (const auto& [j, img] : row) {
      idx.push_back(j);
      imgs.push_back(img);
    }
    table.neighbors.push_back(std::move(idx));
    table.images.push_back(std::move(imgs));
  }
  return table;
}

inline SupportTable mirrored_neighbors(const NodeCloud& cloud, NodeSet query_set, NodeSet target_set, double radius) {
  return mirrored_neighbors(cloud.positions(query_set), cloud.positions(target_set), radius,
                            Rect{0.0, 0.0, cloud.width, cloud.height});
}

inline void write_cloud_csv(std::ostream& os, const NodeCloud& cloud) {
  os << "x,y,set,material,boundary_flag\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < cloud.vector_nodes.size(); ++i) {
    os << cloud.vector_nodes[i].x << ',' << cloud.vector_nodes[i].y << ",vector," << cloud.vector_material[i] << ','
       << to_string(cloud.boundary[i]) << '\n';
  }
  for (std::size_t i = 0; i < cloud.scalar_nodes.size(); ++i) {
    os << cloud.scalar_nodes[i].x << ',' << cloud.scalar_nodes[i].y << ",scalar," << cloud.scalar_material[i]
       << ",none\n";
  }
  os.precision(old);
}

}  // namespace dvm
