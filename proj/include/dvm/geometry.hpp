// geometry.hpp - 2D points and axis-aligned rectangles
#pragma once

#include <algorithm>
#include <cmath>

namespace dvm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm2(const Vec2& a) { return a.x * a.x + a.y * a.y; }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  constexpr double width() const { return x1 - x0; }
  constexpr double height() const { return y1 - y0; }
  constexpr bool degenerate() const { return !(x1 > x0) || !(y1 > y0); }

  constexpr bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
  }

  constexpr bool contains(const Rect& r, double tol = 0.0) const {
    return r.x0 >= x0 - tol && r.x1 <= x1 + tol && r.y0 >= y0 - tol && r.y1 <= y1 + tol;
  }

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

}  // namespace dvm
