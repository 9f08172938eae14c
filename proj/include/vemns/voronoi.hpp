#pragma once

#include "vemns/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace vemns {

namespace detail {

/// Clips a convex polygon against the half-plane {x : (x-m)·n <= 0}.
inline void clip_halfplane(std::vector<Vec2>& poly, const Vec2& m, const Vec2& n) {
  if (poly.empty()) return;
  std::vector<Vec2> out;
  out.reserve(poly.size() + 1);
  const std::size_t sz = poly.size();
  for (std::size_t i = 0; i < sz; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % sz];
    const double va = (a - m).dot(n);
    const double vb = (b - m).dot(n);
    if (va <= 0.0) out.push_back(a);
    if ((va < 0.0 && vb > 0.0) || (va > 0.0 && vb < 0.0)) {
      const double t = va / (va - vb);
      out.push_back(a + t * (b - a));
    }
  }
  poly = std::move(out);
}

/// Voronoi cell of seeds[i] clipped to the rectangle. Seeds whose distance
/// exceeds twice the current cell radius cannot cut the cell; the candidate
/// list is grown nearest-first until that bound certifies completeness.
inline std::vector<Vec2> clipped_voronoi_cell(const Rect& domain, const std::vector<Vec2>& seeds,
                                              std::size_t i) {
  std::vector<Vec2> poly = {Vec2(domain.xmin, domain.ymin), Vec2(domain.xmax, domain.ymin),
                            Vec2(domain.xmax, domain.ymax), Vec2(domain.xmin, domain.ymax)};
  const Vec2 si = seeds[i];
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(seeds.size() - 1);
  for (std::size_t j = 0; j < seeds.size(); ++j)
    if (j != i) order.emplace_back((seeds[j] - si).squaredNorm(), j);

  std::size_t sorted_upto = std::min<std::size_t>(24, order.size());
  std::partial_sort(order.begin(), order.begin() + sorted_upto, order.end());
  std::size_t k = 0;
  while (k < order.size()) {
    if (k == sorted_upto) {
      sorted_upto = order.size();
      std::sort(order.begin() + k, order.end());
    }
    const auto& [d2, j] = order[k];
    double r2 = 0.0;
    for (const auto& p : poly) r2 = std::max(r2, (p - si).squaredNorm());
    if (d2 > 4.0 * r2) break;
    const Vec2 mid = 0.5 * (si + seeds[j]);
    clip_halfplane(poly, mid, seeds[j] - si);
    if (poly.size() < 3) throw std::runtime_error("voronoi: degenerate cell " + std::to_string(i));
    ++k;
  }
  return poly;
}

}  // namespace detail

struct VoronoiReport {
  int attempts = 1;
  bool perturbed = false;
  std::string note;
};

/// Clipped Voronoi diagram of n_cells seeds after lloyd_iterations centroid
/// relaxation sweeps. Deterministic for fixed arguments. Degenerate
/// configurations are retried with perturbed seeds and noted in the report.
inline PolygonalMesh generate_voronoi(const Rect& domain, int n_cells, int lloyd_iterations,
                                      std::uint64_t seed, VoronoiReport* report = nullptr) {
  if (n_cells < 2) throw std::invalid_argument("generate_voronoi: need at least 2 cells");
  std::mt19937_64 rng(seed);

  // Stratified initial seeds: a jittered grid spreads the points so the Lloyd
  // sweeps land on near-uniform cells.
  const int ny = std::max(1, static_cast<int>(std::lround(
                                  std::sqrt(n_cells * domain.height() / domain.width()))));
  const int nx = (n_cells + ny - 1) / ny;
  std::vector<Vec2> candidates;
  candidates.reserve(static_cast<std::size_t>(nx) * ny);
  std::uniform_real_distribution<double> jit(-0.35, 0.35);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      candidates.emplace_back(
          domain.xmin + domain.width() * (i + 0.5 + jit(rng)) / nx,
          domain.ymin + domain.height() * (j + 0.5 + jit(rng)) / ny);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<Vec2> seeds(candidates.begin(), candidates.begin() + n_cells);

  const double scale = std::max(domain.width(), domain.height());
  VoronoiReport rep;
  for (int attempt = 0;; ++attempt) {
    try {
      std::vector<Vec2> pts = seeds;
      for (int sweep = 0; sweep < lloyd_iterations; ++sweep) {
        std::vector<Vec2> next(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
          next[i] = polygon_centroid(detail::clipped_voronoi_cell(domain, pts, i));
        pts = std::move(next);
      }

      std::vector<std::vector<Vec2>> polys(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i)
        polys[i] = detail::clipped_voronoi_cell(domain, pts, i);

      // Merge coincident vertices across cells: Voronoi vertices computed from
      // different line pairs agree only to roundoff.
      const double tol = 1e-9 * scale;
      PolygonalMesh mesh;
      std::vector<std::pair<Vec2, int>> bank;  // representative -> vertex id
      auto vertex_id = [&](const Vec2& p) {
        for (auto& [q, id] : bank)
          if ((q - p).cwiseAbs().maxCoeff() < tol) return id;
        bank.emplace_back(p, static_cast<int>(mesh.vertices.size()));
        mesh.vertices.push_back(p);
        return bank.back().second;
      };
      for (auto& poly : polys) {
        std::vector<int> loop;
        for (const auto& p : poly) {
          const int id = vertex_id(p);
          if (loop.empty() || (loop.back() != id && loop.front() != id)) loop.push_back(id);
        }
        if (loop.size() < 3)
          throw std::runtime_error("voronoi: cell collapsed after vertex merge");
        mesh.cells.push_back(std::move(loop));
      }
      finalize_mesh(mesh);
      if (report) *report = rep;
      return mesh;
    } catch (const std::runtime_error& e) {
      if (attempt >= 5)
        throw std::runtime_error(std::string("generate_voronoi: giving up after retries: ") +
                                 e.what());
      rep.attempts++;
      rep.perturbed = true;
      rep.note = e.what();
      std::uniform_real_distribution<double> jitter(-1.0, 1.0);
      for (auto& s : seeds) {
        s.x() = std::clamp(s.x() + 1e-7 * scale * jitter(rng), domain.xmin, domain.xmax);
        s.y() = std::clamp(s.y() + 1e-7 * scale * jitter(rng), domain.ymin, domain.ymax);
      }
    }
  }
}

}  // namespace vemns
