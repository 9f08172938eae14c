#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace vemns {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned rectangle, used as the meshing domain.
struct Rect {
  double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol &&
           p.y() <= ymax + tol;
  }
};

inline double polygon_signed_area(std::span<const Vec2> pts) {
  double s = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % n];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

/// Area-weighted centroid of a simple polygon.
inline Vec2 polygon_centroid(std::span<const Vec2> pts) {
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    const Vec2& q = pts[(i + 1) % n];
    const double cross = p.x() * q.y() - q.x() * p.y();
    a += cross;
    c += cross * (p + q);
  }
  a *= 0.5;
  if (std::abs(a) <= 0.0) throw std::runtime_error("polygon_centroid: degenerate polygon");
  return c / (6.0 * a);
}

inline double polygon_diameter(std::span<const Vec2> pts) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      d2 = std::max(d2, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(d2);
}

/// Per-element geometry: centroid, diameter, area, and edge data in loop order.
struct ElementGeometry {
  std::vector<Vec2> vertices;   // CCW loop
  Vec2 centroid = Vec2::Zero();
  double diameter = 0.0;        // h_K, max pairwise vertex distance
  double area = 0.0;            // |K|
  std::vector<Vec2> edge_normal;    // outward unit normal of edge i: v_i -> v_{i+1}
  std::vector<double> edge_length;
  std::vector<Vec2> edge_midpoint;

  int n_vertices() const { return static_cast<int>(vertices.size()); }

  static ElementGeometry from_polygon(std::vector<Vec2> pts) {
    ElementGeometry g;
    g.vertices = std::move(pts);
    const auto& v = g.vertices;
    const int n = g.n_vertices();
    if (n < 3) throw std::runtime_error("ElementGeometry: fewer than 3 vertices");
    g.area = polygon_signed_area(v);
    if (g.area <= 0.0)
      throw std::runtime_error("ElementGeometry: polygon not counter-clockwise");
    g.centroid = polygon_centroid(v);
    g.diameter = polygon_diameter(v);
    g.edge_normal.resize(n);
    g.edge_length.resize(n);
    g.edge_midpoint.resize(n);
    for (int i = 0; i < n; ++i) {
      const Vec2& a = v[i];
      const Vec2& b = v[(i + 1) % n];
      const Vec2 t = b - a;
      const double len = t.norm();
      if (len <= 0.0) throw std::runtime_error("ElementGeometry: zero-length edge");
      g.edge_length[i] = len;
      g.edge_midpoint[i] = 0.5 * (a + b);
      // outward normal of a CCW polygon
      g.edge_normal[i] = Vec2(t.y() / len, -t.x() / len);
    }
    return g;
  }

  /// All fan triangles (centroid, v_i, v_{i+1}) have positive area.
  bool star_shaped_wrt_centroid() const {
    const int n = n_vertices();
    for (int i = 0; i < n; ++i) {
      const Vec2 a = vertices[i] - centroid;
      const Vec2 b = vertices[(i + 1) % n] - centroid;
      if (a.x() * b.y() - a.y() * b.x() <= 0.0) return false;
    }
    return true;
  }
};

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const double v = (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    return (v > 0.0) - (v < 0.0);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4;
}

/// Checks that no two non-adjacent polygon edges cross.
inline bool polygon_is_simple(std::span<const Vec2> pts) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t in = (i + 1) % n, jn = (j + 1) % n;
      if (in == j || jn == i || i == j) continue;
      if (segments_intersect(pts[i], pts[in], pts[j], pts[jn])) return false;
    }
  }
  return true;
}

}  // namespace vemns
