#pragma once

#include "vemns/geometry.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vemns {

/// Scaled monomials m_a(x) = ((x-x_D)/h_D)^s on a cell, graded-lex order:
/// 1, xi, eta, xi^2, xi*eta, eta^2, xi^3, xi^2*eta, xi*eta^2, eta^3, ...
/// with xi = (x-x_D)/h_D, eta = (y-y_D)/h_D.
struct ScaledMonomialBasis {
  Vec2 center = Vec2::Zero();  // x_D
  double scale = 1.0;          // h_D
  int degree = 0;

  static constexpr int count(int r) { return (r + 1) * (r + 2) / 2; }
  int size() const { return count(degree); }

  /// Exponent pair (a, b) of monomial index (0-based).
  static std::pair<int, int> exponents(int idx) {
    int d = 0;
    while (count(d) <= idx) ++d;
    const int within = idx - count(d - 1 >= 0 ? d - 1 : -1);
    // within block of degree d: (d,0), (d-1,1), ..., (0,d)
    return {d - within, within};
  }

  double eval_one(int idx, const Vec2& p) const {
    const auto [a, b] = exponents(idx);
    const double xi = (p.x() - center.x()) / scale;
    const double eta = (p.y() - center.y()) / scale;
    return std::pow(xi, a) * std::pow(eta, b);
  }

  /// Row per point, column per monomial.
  Eigen::MatrixXd eval(std::span<const Vec2> points) const {
    const int n = size();
    Eigen::MatrixXd out(points.size(), n);
    for (std::size_t q = 0; q < points.size(); ++q) {
      const double xi = (points[q].x() - center.x()) / scale;
      const double eta = (points[q].y() - center.y()) / scale;
      int idx = 0;
      for (int d = 0; d <= degree; ++d)
        for (int b = 0; b <= d; ++b) out(q, idx++) = std::pow(xi, d - b) * std::pow(eta, b);
    }
    return out;
  }

  /// Gradient of monomial idx at p.
  Vec2 grad_one(int idx, const Vec2& p) const {
    const auto [a, b] = exponents(idx);
    const double xi = (p.x() - center.x()) / scale;
    const double eta = (p.y() - center.y()) / scale;
    Vec2 g = Vec2::Zero();
    if (a > 0) g.x() = a * std::pow(xi, a - 1) * std::pow(eta, b) / scale;
    if (b > 0) g.y() = b * std::pow(xi, a) * std::pow(eta, b - 1) / scale;
    return g;
  }

  /// Laplacian of monomial idx at p (constant for degree <= 2).
  double laplacian_one(int idx, const Vec2& p) const {
    const auto [a, b] = exponents(idx);
    const double xi = (p.x() - center.x()) / scale;
    const double eta = (p.y() - center.y()) / scale;
    double v = 0.0;
    if (a >= 2) v += a * (a - 1) * std::pow(xi, a - 2) * std::pow(eta, b);
    if (b >= 2) v += b * (b - 1) * std::pow(xi, a) * std::pow(eta, b - 2);
    return v / (scale * scale);
  }
};

inline ScaledMonomialBasis element_basis(const ElementGeometry& geom, int degree) {
  return ScaledMonomialBasis{geom.centroid, geom.diameter, degree};
}

struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  template <typename F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t q = 0; q < points.size(); ++q) s += weights[q] * f(points[q]);
    return s;
  }
};

namespace detail {

struct TriRulePoint {
  double l1, l2, l3, w;
};

/// Symmetric triangle rules (barycentric, weights sum to 1).
inline const std::vector<TriRulePoint>& triangle_rule(int degree) {
  static const std::vector<TriRulePoint> deg1 = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0}};
  static const std::vector<TriRulePoint> deg2 = {
      {2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 3}};
  auto perm3 = [](double a, double b, double w, std::vector<TriRulePoint>& out) {
    out.push_back({a, b, b, w});
    out.push_back({b, a, b, w});
    out.push_back({b, b, a, w});
  };
  auto perm6 = [](double a, double b, double c, double w, std::vector<TriRulePoint>& out) {
    out.push_back({a, b, c, w});
    out.push_back({a, c, b, w});
    out.push_back({b, a, c, w});
    out.push_back({b, c, a, w});
    out.push_back({c, a, b, w});
    out.push_back({c, b, a, w});
  };
  static const std::vector<TriRulePoint> deg4 = [&] {
    std::vector<TriRulePoint> r;
    perm3(0.816847572980459, 0.091576213509771, 0.109951743655322, r);
    perm3(0.108103018168070, 0.445948490915965, 0.223381589678011, r);
    return r;
  }();
  static const std::vector<TriRulePoint> deg6 = [&] {
    std::vector<TriRulePoint> r;
    perm3(0.873821971016996, 0.063089014491502, 0.050844906370207, r);
    perm3(0.501426509658179, 0.249286745170910, 0.116786275726379, r);
    perm6(0.636502499121399, 0.310352451033785, 0.053145049844816, 0.082851075618374, r);
    return r;
  }();
  if (degree <= 1) return deg1;
  if (degree <= 2) return deg2;
  if (degree <= 4) return deg4;
  if (degree <= 6) return deg6;
  throw std::invalid_argument("triangle_rule: exactness beyond degree 6 not provided");
}

}  // namespace detail

/// Quadrature on a polygon by fanning into triangles from the centroid.
/// Requires the cell to be star-shaped w.r.t. its centroid.
inline QuadratureRule polygon_quadrature(const ElementGeometry& geom, int exactness_degree) {
  if (!geom.star_shaped_wrt_centroid())
    throw std::runtime_error("polygon_quadrature: cell not star-shaped w.r.t. centroid");
  const auto& rule = detail::triangle_rule(exactness_degree);
  QuadratureRule out;
  out.exactness_degree = exactness_degree;
  const int n = geom.n_vertices();
  out.points.reserve(static_cast<std::size_t>(n) * rule.size());
  out.weights.reserve(out.points.capacity());
  for (int i = 0; i < n; ++i) {
    const Vec2& a = geom.centroid;
    const Vec2& b = geom.vertices[i];
    const Vec2& c = geom.vertices[(i + 1) % n];
    const double area2 = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    const double tri_area = 0.5 * area2;
    for (const auto& rp : rule) {
      out.points.push_back(rp.l1 * a + rp.l2 * b + rp.l3 * c);
      out.weights.push_back(rp.w * tri_area);
    }
  }
  return out;
}

enum class EdgeRule { Simpson, GaussLobatto4 };

/// 1D rule on the segment a -> b. Simpson is exact to degree 3, the four-point
/// Gauss-Lobatto rule to degree 5. Points are listed in increasing arc length.
inline QuadratureRule edge_quadrature(const Vec2& a, const Vec2& b, EdgeRule rule) {
  const double h = (b - a).norm();
  if (h <= 0.0) throw std::invalid_argument("edge_quadrature: degenerate edge");
  QuadratureRule out;
  auto at = [&](double t) { return a + (t + 0.5) * (b - a); };  // t in [-1/2, 1/2]
  if (rule == EdgeRule::Simpson) {
    out.exactness_degree = 3;
    out.points = {at(-0.5), at(0.0), at(0.5)};
    out.weights = {h / 6.0, 4.0 * h / 6.0, h / 6.0};
  } else {
    out.exactness_degree = 5;
    const double s = 0.5 / std::sqrt(5.0);
    out.points = {at(-0.5), at(-s), at(s), at(0.5)};
    out.weights = {h / 12.0, 5.0 * h / 12.0, 5.0 * h / 12.0, h / 12.0};
  }
  return out;
}

/// Eight-point Gauss-Legendre rule on the segment a -> b (degree 15); used
/// where an edge integrand is not polynomial, e.g. boundary-flux evaluation
/// of analytic Dirichlet data.
inline QuadratureRule edge_gauss8(const Vec2& a, const Vec2& b) {
  static const double t[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                              0.9602898564975363};
  static const double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                              0.1012285362903763};
  const double h = (b - a).norm();
  if (h <= 0.0) throw std::invalid_argument("edge_gauss8: degenerate edge");
  QuadratureRule out;
  out.exactness_degree = 15;
  const Vec2 mid = 0.5 * (a + b);
  const Vec2 half = 0.5 * (b - a);
  for (int i = 0; i < 4; ++i) {
    out.points.push_back(mid - t[i] * half);
    out.points.push_back(mid + t[i] * half);
    out.weights.push_back(0.5 * h * w[i]);
    out.weights.push_back(0.5 * h * w[i]);
  }
  return out;
}

/// (m_a, m_b)_K matrix for monomials up to degree_p (rows) and degree_q (cols).
inline Eigen::MatrixXd monomial_mass(const ElementGeometry& geom, const ScaledMonomialBasis& basis,
                                     int degree_p, int degree_q) {
  const int np = ScaledMonomialBasis::count(degree_p);
  const int nq = ScaledMonomialBasis::count(degree_q);
  ScaledMonomialBasis wide = basis;
  wide.degree = std::max(degree_p, degree_q);
  const auto quad = polygon_quadrature(geom, degree_p + degree_q);
  const Eigen::MatrixXd vals = wide.eval(quad.points);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(np, nq);
  for (std::size_t q = 0; q < quad.points.size(); ++q)
    out.noalias() += quad.weights[q] * vals.row(q).head(np).transpose() * vals.row(q).head(nq);
  return out;
}

/// Integrals T3[i][a][b] = (m_i m_a, m_b)_K with i over P1 and a, b over P2
/// monomials. The rank-3 tensor over the 12 matrix monomials M_r and the 12
/// vector monomials m_s, m_t reduces to T3 by component bookkeeping:
/// [M_r m_s] . m_t = m_i (m_s)_l (m_t)_k for M_r carrying m_i at slot (k,l).
class TripleProductTensor {
 public:
  TripleProductTensor() = default;

  static TripleProductTensor compute(const ElementGeometry& geom,
                                     const ScaledMonomialBasis& basis) {
    TripleProductTensor t;
    ScaledMonomialBasis b2 = basis;
    b2.degree = 2;
    const auto quad = polygon_quadrature(geom, 6);  // integrand degree <= 5
    const Eigen::MatrixXd vals = b2.eval(quad.points);
    t.data_.setZero();
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      const double w = quad.weights[q];
      for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b)
            t.data_(i, 6 * a + b) += w * vals(q, i) * vals(q, a) * vals(q, b);
    }
    return t;
  }

  /// Scalar triple product (m_i m_a, m_b)_K, all indices 0-based.
  double scalar(int i, int a, int b) const { return data_(i, 6 * a + b); }

  /// Matrix-monomial slot of M_r (0-based r): returns {i, k, l} with m_i at
  /// position (k,l); ordering m_1^11, m_2^11, m_3^11, m_1^12, ..., m_3^22.
  static std::array<int, 3> matrix_slot(int r) {
    const int slot = r / 3;
    return {r % 3, slot / 2, slot % 2};
  }

  /// Component (0 or 1) and scalar index of vector monomial s (0-based).
  static std::pair<int, int> vector_slot(int s) { return {s / 6, s % 6}; }

  /// Full tensor entry T[r][s][t] = ((M_r m_s), m_t)_K, indices 0-based.
  double operator()(int r, int s, int t) const {
    const auto [i, k, l] = matrix_slot(r);
    const auto [cs, is] = vector_slot(s);
    const auto [ct, it] = vector_slot(t);
    if (cs != l || ct != k) return 0.0;
    return scalar(i, is, it);
  }

 private:
  Eigen::Matrix<double, 3, 36> data_ = Eigen::Matrix<double, 3, 36>::Zero();
};

}  // namespace vemns
