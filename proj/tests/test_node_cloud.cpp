#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dvm/node_cloud.hpp"

using namespace dvm;

namespace {

std::vector<std::size_t> brute_force(std::span<const Vec2> targets, Vec2 q, double radius) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (distance(targets[j], q) <= radius) out.push_back(j);
  }
  return out;
}

}  // namespace

TEST(NodeCloud, CavityCounts) {
  const auto c = build_cavity_cloud(5e-3, 5e-3, 0.5e-3, std::nullopt);
  EXPECT_EQ(c.vector_nodes.size(), 121u);
  EXPECT_EQ(c.scalar_nodes.size(), 100u);
}

TEST(NodeCloud, LeftHalfTagging) {
  const auto c = build_cavity_cloud(5e-3, 5e-3, 0.5e-3, Rect{0.0, 0.0, 2.5e-3, 5e-3});
  for (std::size_t i = 0; i < c.vector_nodes.size(); ++i) {
    EXPECT_EQ(c.vector_material[i], c.vector_nodes[i].x <= 2.5e-3 + 1e-15 ? 1 : 0);
  }
  for (std::size_t i = 0; i < c.scalar_nodes.size(); ++i) {
    EXPECT_EQ(c.scalar_material[i], c.scalar_nodes[i].x < 2.5e-3 ? 1 : 0);
  }
}

TEST(NodeCloud, BoundaryFlags) {
  const auto c = build_cavity_cloud(5e-3, 5e-3, 0.5e-3, std::nullopt);
  EXPECT_EQ(c.boundary[c.nearest(NodeSet::Vector, {0.0, 0.0})], BoundaryFlag::Corner);
  EXPECT_EQ(c.boundary[c.nearest(NodeSet::Vector, {5e-3, 5e-3})], BoundaryFlag::Corner);
  EXPECT_EQ(c.boundary[c.nearest(NodeSet::Vector, {0.0, 2.5e-3})], BoundaryFlag::YWall);
  EXPECT_EQ(c.boundary[c.nearest(NodeSet::Vector, {2.5e-3, 0.0})], BoundaryFlag::XWall);
  EXPECT_EQ(c.boundary[c.nearest(NodeSet::Vector, {2.5e-3, 2.5e-3})], BoundaryFlag::None);
}

TEST(NodeCloud, PositionsInsideAndDistinct) {
  const auto c = build_cavity_cloud(5e-3, 4e-3, 0.5e-3, std::nullopt);
  const Rect cavity{0.0, 0.0, 5e-3, 4e-3};
  for (auto set : {NodeSet::Vector, NodeSet::Scalar}) {
    const auto pts = c.positions(set);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_TRUE(cavity.contains(pts[i], 0.0));
      for (std::size_t j = i + 1; j < pts.size(); ++j) EXPECT_GT(distance(pts[i], pts[j]), 1e-12);
    }
  }
}

TEST(NodeCloud, ScalarNodesEquidistantFromCellCorners) {
  const auto c = build_cavity_cloud(5e-3, 5e-3, 0.5e-3, std::nullopt);
  const double want = 0.5e-3 * std::sqrt(2.0) / 2.0;
  for (const auto& p : c.scalar_nodes) {
    const auto nb = brute_force(c.vector_nodes, p, want * (1.0 + 1e-9));
    ASSERT_EQ(nb.size(), 4u);
    for (auto j : nb) EXPECT_NEAR(distance(c.vector_nodes[j], p), want, 1e-18);
  }
}

TEST(NodeCloud, NonConformingSpacing) {
  try {
    build_cavity_cloud(5e-3, 5e-3, 0.3e-3, std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonConformingSpacing);
  }
}

TEST(NodeCloud, DegeneratePlasmaRegion) {
  try {
    build_cavity_cloud(5e-3, 5e-3, 0.5e-3, Rect{1e-3, 1e-3, 1e-3, 4e-3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyRegion);
  }
}

TEST(NodeCloud, InteriorStencilHasThirteenNeighbors) {
  const auto c = build_cavity_cloud(5e-3, 5e-3, 0.5e-3, std::nullopt);
  const auto t = neighbors(c, NodeSet::Vector, NodeSet::Vector, 2.1 * 0.5e-3);
  const std::size_t centre = c.nearest(NodeSet::Vector, {2.5e-3, 2.5e-3});
  EXPECT_EQ(t[centre].size(), 13u);
  EXPECT_EQ(t[centre], brute_force(c.vector_nodes, c.vector_nodes[centre], 2.1 * 0.5e-3));
  EXPECT_TRUE(std::binary_search(t[centre].begin(), t[centre].end(), centre));
}

TEST(NodeCloud, SmallRadiusIsolates) {
  const auto c = build_cavity_cloud(5e-3, 5e-3, 0.5e-3, std::nullopt);
  try {
    neighbors(c, NodeSet::Vector, NodeSet::Vector, 0.9 * 0.5e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IsolatedNode);
  }
}

TEST(NodeCloud, KdTreeMatchesBruteForceOnRandomClouds) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int cloud = 0; cloud < 200; ++cloud) {
    const std::size_t n = 20 + cloud % 60;
    std::vector<Vec2> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const double r = 0.15 + 0.2 * u(rng);
    const auto t = neighbors(pts, pts, r, 1);
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(t[i], brute_force(pts, pts[i], r)) << "cloud " << cloud;
  }
}

TEST(NodeCloud, MirroredSupportAddsWallImages) {
  const auto c = build_cavity_cloud(5e-3, 5e-3, 0.5e-3, std::nullopt);
  const double r = 2.1 * 0.5e-3;
  const auto t = mirrored_neighbors(c, NodeSet::Vector, NodeSet::Vector, r);
  ASSERT_TRUE(t.mirrored());
  for (std::size_t i = 0; i < c.vector_nodes.size(); ++i) {
    // Reflected cloud looks like an unbounded grid: every node sees the full 13-point stencil.
    EXPECT_EQ(t[i].size(), 13u) << "node " << i;
    for (std::size_t k = 0; k < t[i].size(); ++k) {
      EXPECT_LE(distance(t.position(c.vector_nodes, i, k), c.vector_nodes[i]), r * (1 + 1e-12));
    }
  }
}

TEST(NodeCloud, ImageParity) {
  EXPECT_EQ(image_parity(image::kLeft).x, 1.0);
  EXPECT_EQ(image_parity(image::kLeft).y, -1.0);
  EXPECT_EQ(image_parity(image::kTop).x, -1.0);
  EXPECT_EQ(image_parity(image::kTop).y, 1.0);
  const auto pc = image_parity(image::kLeft | image::kBottom);
  EXPECT_EQ(pc.x, -1.0);
  EXPECT_EQ(pc.y, -1.0);
}

TEST(NodeCloud, CsvHasOneHeaderAndOneRowPerNode) {
  const auto c = build_cavity_cloud(5e-3, 5e-3, 0.5e-3, std::nullopt);
  std::ostringstream os;
  write_cloud_csv(os, c);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 222);
  EXPECT_EQ(s.substr(0, s.find('\n')), "x,y,set,material,boundary_flag");
}
