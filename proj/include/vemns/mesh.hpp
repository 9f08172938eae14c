#pragma once

#include "vemns/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vemns {

/// Conforming polygonal mesh. Cells are counter-clockwise vertex loops; edges
/// are derived, interior ones shared by exactly two cells. Immutable once
/// built, safe for concurrent readers.
struct PolygonalMesh {
  struct Edge {
    int a = -1, b = -1;          // endpoint vertex indices, a < b
    Vec2 midpoint = Vec2::Zero();
    int cell_left = -1;          // cell traversing a -> b
    int cell_right = -1;         // cell traversing b -> a
    bool boundary = false;
  };

  std::vector<Vec2> vertices;
  std::vector<std::vector<int>> cells;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> cell_edges;  // cell -> edge index of (v_i, v_{i+1})
  std::vector<bool> boundary_vertex;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  std::vector<Vec2> cell_polygon(int c) const {
    std::vector<Vec2> pts;
    pts.reserve(cells[c].size());
    for (int v : cells[c]) pts.push_back(vertices[v]);
    return pts;
  }

  double total_area() const {
    double a = 0.0;
    for (int c = 0; c < n_cells(); ++c) {
      auto poly = cell_polygon(c);
      a += polygon_signed_area(poly);
    }
    return a;
  }

  double max_diameter() const {
    double h = 0.0;
    for (int c = 0; c < n_cells(); ++c) {
      auto poly = cell_polygon(c);
      h = std::max(h, polygon_diameter(poly));
    }
    return h;
  }
};

inline ElementGeometry element_geometry(const PolygonalMesh& mesh, int cell_index) {
  if (cell_index < 0 || cell_index >= mesh.n_cells())
    throw std::out_of_range("element_geometry: cell index out of range");
  return ElementGeometry::from_polygon(mesh.cell_polygon(cell_index));
}

/// Derives edges and boundary flags from vertices+cells and validates the
/// mesh invariants. Throws std::runtime_error with the offending cell index.
inline void finalize_mesh(PolygonalMesh& mesh) {
  const int nv = mesh.n_vertices();
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& loop = mesh.cells[c];
    if (loop.size() < 3)
      throw std::runtime_error("mesh: cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (int v : loop)
      if (v < 0 || v >= nv)
        throw std::runtime_error("mesh: cell " + std::to_string(c) + " has invalid vertex index");
    std::vector<int> sorted = loop;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::runtime_error("mesh: cell " + std::to_string(c) + " repeats a vertex");
    auto poly = mesh.cell_polygon(c);
    if (!polygon_is_simple(poly))
      throw std::runtime_error("mesh: cell " + std::to_string(c) + " is not a simple polygon");
    if (polygon_signed_area(poly) <= 0.0)
      throw std::runtime_error("mesh: cell " + std::to_string(c) +
                               " is not counter-clockwise (orientation error)");
  }

  mesh.edges.clear();
  mesh.cell_edges.assign(mesh.n_cells(), {});
  std::map<std::pair<int, int>, int> edge_of;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& loop = mesh.cells[c];
    const int n = static_cast<int>(loop.size());
    mesh.cell_edges[c].resize(n);
    for (int i = 0; i < n; ++i) {
      const int a = loop[i], b = loop[(i + 1) % n];
      const auto key = std::minmax(a, b);
      auto it = edge_of.find(key);
      int e;
      if (it == edge_of.end()) {
        e = mesh.n_edges();
        PolygonalMesh::Edge ed;
        ed.a = key.first;
        ed.b = key.second;
        ed.midpoint = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
        mesh.edges.push_back(ed);
        edge_of.emplace(key, e);
      } else {
        e = it->second;
      }
      auto& ed = mesh.edges[e];
      if (a == ed.a) {
        if (ed.cell_left != -1)
          throw std::runtime_error("mesh: edge traversed twice in the same direction near cell " +
                                   std::to_string(c));
        ed.cell_left = c;
      } else {
        if (ed.cell_right != -1)
          throw std::runtime_error("mesh: edge traversed twice in the same direction near cell " +
                                   std::to_string(c));
        ed.cell_right = c;
      }
      mesh.cell_edges[c][i] = e;
    }
  }

  mesh.boundary_vertex.assign(nv, false);
  for (auto& ed : mesh.edges) {
    ed.boundary = (ed.cell_left == -1) != (ed.cell_right == -1);
    if (ed.cell_left == -1 && ed.cell_right == -1)
      throw std::runtime_error("mesh: orphan edge");
    if (ed.boundary) {
      mesh.boundary_vertex[ed.a] = true;
      mesh.boundary_vertex[ed.b] = true;
    }
  }
}

struct GeneratorSpec {
  enum class Kind { Quad, Triangle };
};

/// Uniform nx-by-ny grid of the rectangle; triangle kind splits each cell
/// along the (lower-left, upper-right) diagonal.
inline PolygonalMesh generate_structured(int nx, int ny, GeneratorSpec::Kind kind,
                                         const Rect& domain = Rect{}) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("generate_structured: counts must be >= 1");
  PolygonalMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.emplace_back(domain.xmin + domain.width() * i / nx,
                                 domain.ymin + domain.height() * j / ny);
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      if (kind == GeneratorSpec::Kind::Quad) {
        mesh.cells.push_back({v00, v10, v11, v01});
      } else {
        mesh.cells.push_back({v00, v10, v11});
        mesh.cells.push_back({v00, v11, v01});
      }
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

/// Mesh quality diagnostics; see validate_mesh.
struct MeshDiagnostics {
  double min_vertex_spacing_ratio = 0.0;  // min over cells of (min vertex distance)/h_K
  bool star_shaped_all = false;           // centroid-fan positivity proxy
  double h_max = 0.0;                     // global h = max h_K
  double resolution = 0.0;                // n_cells^{-1/2}, the scale papers often tabulate
  double total_area = 0.0;
  int n_cells = 0, n_vertices = 0, n_edges = 0, n_boundary_edges = 0;
  std::vector<int> non_star_cells;
};

inline MeshDiagnostics validate_mesh(const PolygonalMesh& mesh) {
  MeshDiagnostics d;
  d.n_cells = mesh.n_cells();
  d.n_vertices = mesh.n_vertices();
  d.n_edges = mesh.n_edges();
  for (const auto& e : mesh.edges) d.n_boundary_edges += e.boundary ? 1 : 0;
  d.min_vertex_spacing_ratio = std::numeric_limits<double>::infinity();
  d.star_shaped_all = true;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto g = element_geometry(mesh, c);
    d.h_max = std::max(d.h_max, g.diameter);
    d.total_area += g.area;
    double dmin = std::numeric_limits<double>::infinity();
    const int n = g.n_vertices();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        dmin = std::min(dmin, (g.vertices[i] - g.vertices[j]).norm());
    d.min_vertex_spacing_ratio = std::min(d.min_vertex_spacing_ratio, dmin / g.diameter);
    if (!g.star_shaped_wrt_centroid()) {
      d.star_shaped_all = false;
      d.non_star_cells.push_back(c);
    }
  }
  d.resolution = d.n_cells > 0 ? 1.0 / std::sqrt(static_cast<double>(d.n_cells)) : 0.0;
  return d;
}

}  // namespace vemns
