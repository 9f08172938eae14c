#include "vemns/mesh.hpp"
#include "vemns/mesh_io.hpp"
#include "vemns/voronoi.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace vemns;

namespace {

PolygonalMesh unit_square_one_cell() {
  PolygonalMesh m;
  m.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.cells = {{0, 1, 2, 3}};
  finalize_mesh(m);
  return m;
}

}  // namespace

TEST_CASE("single-cell unit square geometry", "[mesh]") {
  const auto m = unit_square_one_cell();
  const auto g = element_geometry(m, 0);
  CHECK(g.area == Catch::Approx(1.0));
  CHECK(g.diameter == Catch::Approx(std::sqrt(2.0)));
  CHECK(g.centroid.x() == Catch::Approx(0.5));
  CHECK(g.centroid.y() == Catch::Approx(0.5));
  // closed polygon: sum of h_e n_e vanishes
  Vec2 s = Vec2::Zero();
  for (int e = 0; e < 4; ++e) s += g.edge_length[e] * g.edge_normal[e];
  CHECK(s.norm() < 1e-15);
}

TEST_CASE("clockwise cell is an orientation error", "[mesh]") {
  PolygonalMesh m;
  m.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.cells = {{0, 3, 2, 1}};
  CHECK_THROWS_WITH(finalize_mesh(m), Catch::Matchers::ContainsSubstring("orientation"));
}

TEST_CASE("two-cell split edge bookkeeping", "[mesh]") {
  PolygonalMesh m;
  m.vertices = {{0, 0}, {0.5, 0}, {1, 0}, {1, 1}, {0.5, 1}, {0, 1}};
  m.cells = {{0, 1, 4, 5}, {1, 2, 3, 4}};
  finalize_mesh(m);
  int interior = 0, boundary = 0;
  for (const auto& e : m.edges) (e.boundary ? boundary : interior)++;
  CHECK(interior == 1);
  CHECK(boundary == 6);
  // interior edge traversed in opposite directions by its two cells
  for (const auto& e : m.edges)
    if (!e.boundary) {
      CHECK(e.cell_left != -1);
      CHECK(e.cell_right != -1);
      CHECK(e.cell_left != e.cell_right);
    }
}

TEST_CASE("structured generators", "[mesh]") {
  const auto quad = generate_structured(2, 2, GeneratorSpec::Kind::Quad);
  CHECK(quad.n_cells() == 4);
  CHECK(quad.n_vertices() == 9);
  const auto tri = generate_structured(64, 64, GeneratorSpec::Kind::Triangle);
  CHECK(tri.n_cells() == 8192);
  const auto one = generate_structured(1, 1, GeneratorSpec::Kind::Quad);
  CHECK(one.n_cells() == 1);
  CHECK(element_geometry(one, 0).area == Catch::Approx(1.0));
  CHECK_THROWS(generate_structured(0, 2, GeneratorSpec::Kind::Quad));
}

TEST_CASE("element geometry closed forms", "[mesh]") {
  PolygonalMesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.cells = {{0, 1, 2}};
  finalize_mesh(m);
  const auto g = element_geometry(m, 0);
  CHECK(g.area == Catch::Approx(0.5));
  CHECK(g.centroid.x() == Catch::Approx(1.0 / 3));
  CHECK(g.centroid.y() == Catch::Approx(1.0 / 3));

  PolygonalMesh hex;
  for (int i = 0; i < 6; ++i) {
    const double a = std::numbers::pi / 3 * i;
    hex.vertices.emplace_back(std::cos(a), std::sin(a));
  }
  hex.cells = {{0, 1, 2, 3, 4, 5}};
  finalize_mesh(hex);
  CHECK(element_geometry(hex, 0).area == Catch::Approx(3.0 * std::sqrt(3.0) / 2).epsilon(1e-12));
}

TEST_CASE("area partition of unity", "[mesh]") {
  const auto quad = generate_structured(7, 5, GeneratorSpec::Kind::Quad, Rect{0, 0, 2, 3});
  CHECK(quad.total_area() == Catch::Approx(6.0).epsilon(1e-12));
  const auto vor = generate_voronoi(Rect{0, 0, 1, 1}, 32, 100, 1);
  CHECK(vor.n_cells() == 32);
  CHECK(vor.total_area() == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("voronoi determinism and cell size", "[mesh]") {
  const auto a = generate_voronoi(Rect{0, 0, 1, 1}, 64, 20, 7);
  const auto b = generate_voronoi(Rect{0, 0, 1, 1}, 64, 20, 7);
  REQUIRE(a.n_vertices() == b.n_vertices());
  for (int i = 0; i < a.n_vertices(); ++i) {
    CHECK(a.vertices[i].x() == b.vertices[i].x());  // bit-identical
    CHECK(a.vertices[i].y() == b.vertices[i].y());
  }

  const auto big = generate_voronoi(Rect{0, 0, 1, 1}, 512, 100, 1);
  CHECK(big.n_cells() == 512);
  const auto d = validate_mesh(big);
  CHECK(d.h_max > 0.03);
  CHECK(d.h_max < 0.07);
  CHECK(d.total_area == Catch::Approx(1.0).epsilon(1e-10));
  CHECK(d.star_shaped_all);
}

TEST_CASE("two seeds share one chord", "[mesh]") {
  const auto m = generate_voronoi(Rect{0, 0, 1, 1}, 2, 0, 1);
  CHECK(m.n_cells() == 2);
  int interior = 0;
  for (const auto& e : m.edges) interior += e.boundary ? 0 : 1;
  CHECK(interior == 1);
}

TEST_CASE("validate_mesh diagnostics", "[mesh]") {
  const auto quad = generate_structured(4, 4, GeneratorSpec::Kind::Quad);
  const auto d = validate_mesh(quad);
  CHECK(d.star_shaped_all);
  CHECK(d.h_max == Catch::Approx(std::sqrt(2.0) / 4));
  CHECK(d.resolution == Catch::Approx(0.25));

  // non-convex cell whose centroid fan stays positive passes the proxy
  PolygonalMesh m;
  m.vertices = {{0, 0}, {2, 0}, {2, 2}, {1, 0.8}, {0, 2}};
  m.cells = {{0, 1, 2, 3, 4}};
  finalize_mesh(m);
  CHECK(validate_mesh(m).star_shaped_all);
}

TEST_CASE("mesh json round-trip is bit-exact", "[mesh][io]") {
  const auto m = generate_voronoi(Rect{0, 0, 1, 1}, 16, 10, 3);
  const auto path = std::filesystem::temp_directory_path() / "vemns_mesh_roundtrip.json";
  save_mesh(m, path.string());
  const auto back = load_mesh(path.string());
  REQUIRE(back.n_vertices() == m.n_vertices());
  for (int i = 0; i < m.n_vertices(); ++i) {
    CHECK(back.vertices[i].x() == m.vertices[i].x());
    CHECK(back.vertices[i].y() == m.vertices[i].y());
  }
  REQUIRE(back.cells == m.cells);
  std::filesystem::remove(path);
}

TEST_CASE("load_mesh error paths", "[mesh][io]") {
  CHECK_THROWS_WITH(load_mesh("/nonexistent/mesh.json"),
                    Catch::Matchers::ContainsSubstring("/nonexistent/mesh.json"));
  const auto path = std::filesystem::temp_directory_path() / "vemns_mesh_bad.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_WITH(load_mesh(path.string()), Catch::Matchers::ContainsSubstring("parse"));
  std::filesystem::remove(path);
}

TEST_CASE("non-simple cell rejected", "[mesh]") {
  PolygonalMesh m;  // bowtie
  m.vertices = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  m.cells = {{0, 1, 2, 3}};
  CHECK_THROWS_WITH(finalize_mesh(m), Catch::Matchers::ContainsSubstring("simple"));
}
