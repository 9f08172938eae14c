#pragma once

#include "vemns/assembly.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vemns {

using GradientField = std::function<Mat2(const Vec2&)>;
using ScalarField = std::function<double(const Vec2&)>;

namespace detail {

/// Coefficients (12) of the elliptic projection of u_h on cell c.
inline Eigen::VectorXd projected_coeffs(const GlobalSystem& sys, int c,
                                        const Eigen::VectorXd& chi) {
  const auto& gd = sys.dofs.cell_dofs[c];
  Eigen::VectorXd chi_K(gd.size());
  for (std::size_t i = 0; i < gd.size(); ++i) chi_K(i) = chi(gd[i]);
  return sys.elements[c].PiStar * chi_K;
}

inline Vec2 eval_vector_poly(const ElementOps& ops, const Eigen::VectorXd& coeffs,
                             const Vec2& x) {
  Vec2 v = Vec2::Zero();
  for (int mu = 0; mu < 6; ++mu) {
    const double m = ops.mono.eval_one(mu, x);
    v.x() += coeffs(mu) * m;
    v.y() += coeffs(6 + mu) * m;
  }
  return v;
}

inline Mat2 eval_vector_poly_gradient(const ElementOps& ops, const Eigen::VectorXd& coeffs,
                                      const Vec2& x) {
  Mat2 g = Mat2::Zero();
  for (int mu = 0; mu < 6; ++mu) {
    const Vec2 gm = ops.mono.grad_one(mu, x);
    g.row(0) += coeffs(mu) * gm.transpose();
    g.row(1) += coeffs(6 + mu) * gm.transpose();
  }
  return g;
}

}  // namespace detail

/// ErruH1: broken H1 error sum_K |u_exact - Pi^K u_h|_{1,K}^2 by the
/// element quadrature rule.
inline double h1_velocity_error(const GlobalSystem& sys, const Eigen::VectorXd& chi,
                                const GradientField& exact_gradient) {
  double err2 = 0.0;
  for (int c = 0; c < sys.mesh.n_cells(); ++c) {
    const auto& ops = sys.elements[c];
    const Eigen::VectorXd q = detail::projected_coeffs(sys, c, chi);
    for (std::size_t k = 0; k < ops.quad.points.size(); ++k) {
      const Vec2& x = ops.quad.points[k];
      const Mat2 diff = exact_gradient(x) - detail::eval_vector_poly_gradient(ops, q, x);
      err2 += ops.quad.weights[k] * diff.squaredNorm();
    }
  }
  return std::sqrt(err2);
}

/// ErrpL2: || p_exact - p_h ||_0 with p_h piecewise from the scaled monomial
/// coefficients.
inline double l2_pressure_error(const GlobalSystem& sys, const Eigen::VectorXd& p,
                                const ScalarField& exact_pressure) {
  double err2 = 0.0;
  for (int c = 0; c < sys.mesh.n_cells(); ++c) {
    const auto& ops = sys.elements[c];
    for (std::size_t k = 0; k < ops.quad.points.size(); ++k) {
      const Vec2& x = ops.quad.points[k];
      double ph = 0.0;
      for (int l = 0; l < 3; ++l) ph += p(3 * c + l) * ops.mono.eval_one(l, x);
      const double diff = exact_pressure(x) - ph;
      err2 += ops.quad.weights[k] * diff * diff;
    }
  }
  return std::sqrt(err2);
}

/// Least-squares slope of log(err) against log(h).
inline double fit_rate(std::span<const double> h, std::span<const double> err) {
  if (h.size() != err.size() || h.size() < 2)
    throw std::invalid_argument("fit_rate: need >= 2 matching (h, err) pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0))
      throw std::invalid_argument("fit_rate: nonpositive input");
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(h.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct GridSample {
  Vec2 position;
  std::optional<Vec2> value;  // absent outside the domain
};

struct GridField {
  int nx = 0, ny = 0;
  Rect bounds;
  std::vector<GridSample> samples;  // row-major, (nx+1) * (ny+1)
};

namespace detail {

/// Fan-triangle membership; valid for star-shaped cells.
inline bool point_in_cell(const ElementGeometry& g, const Vec2& p, double tol) {
  const int n = g.n_vertices();
  for (int i = 0; i < n; ++i) {
    const Vec2& a = g.centroid;
    const Vec2& b = g.vertices[i];
    const Vec2& c = g.vertices[(i + 1) % n];
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (det == 0.0) continue;
    const double l2 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
    const double l3 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
    if (l2 >= -tol && l3 >= -tol && l2 + l3 <= 1.0 + tol) return true;
  }
  return false;
}

}  // namespace detail

/// Evaluates Pi^K u_h on a uniform (nx+1) x (ny+1) grid over the mesh bounding
/// box. Points not locatable in any cell (outside the domain beyond roundoff)
/// are marked absent.
inline GridField sample_velocity_grid(const GlobalSystem& sys, const Eigen::VectorXd& chi,
                                      int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("sample_velocity_grid: counts must be >= 1");
  GridField out;
  out.nx = nx;
  out.ny = ny;
  Rect r{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const auto& v : sys.mesh.vertices) {
    r.xmin = std::min(r.xmin, v.x());
    r.ymin = std::min(r.ymin, v.y());
    r.xmax = std::max(r.xmax, v.x());
    r.ymax = std::max(r.ymax, v.y());
  }
  out.bounds = r;

  std::vector<Eigen::VectorXd> coeffs(sys.mesh.n_cells());
  for (int c = 0; c < sys.mesh.n_cells(); ++c)
    coeffs[c] = detail::projected_coeffs(sys, c, chi);

  const double tol = 1e-12 * std::max(r.width(), r.height());
  out.samples.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      GridSample s;
      s.position = Vec2(r.xmin + r.width() * i / nx, r.ymin + r.height() * j / ny);
      for (int c = 0; c < sys.mesh.n_cells(); ++c) {
        const auto& g = sys.elements[c].geom;
        if (s.position.x() < g.centroid.x() - g.diameter ||
            s.position.x() > g.centroid.x() + g.diameter ||
            s.position.y() < g.centroid.y() - g.diameter ||
            s.position.y() > g.centroid.y() + g.diameter)
          continue;
        if (detail::point_in_cell(g, s.position, tol)) {
          s.value = detail::eval_vector_poly(sys.elements[c], coeffs[c], s.position);
          break;
        }
      }
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace vemns
