#pragma once

// Fine-mesh Galerkin oracle for the local virtual element matrices on the
// unit-square element. A virtual basis function is replaced by an explicit P2
// finite element lift on an n x n right-triangle grid:
//   * a harmonic lift with the exact boundary trace plus interior bubble
//     corrections pinning the two divergence moments -- reproduces
//     a(m_a, phi_i), the component averages, (M_a, grad phi_i) and the
//     divergence moment matrix;
//   * a Taylor-Hood Stokes lift whose divergence is constrained to the P1
//     divergence of the virtual function and whose enhancement moments are
//     pinned -- approximates phi_i itself and yields (m_a, phi_i).
// Everything here integrates explicit FE functions with its own triangle
// quadrature; no code path is shared with the library's Kronecker-structure
// assembly.

#include "oracles/poly_integrals.hpp"
#include "vemns/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>
#include <map>
#include <stdexcept>
#include <vector>

namespace oracle {

using vemns::Mat2;
using vemns::Vec2;

// Degree-5 seven-point symmetric triangle rule (barycentric, weights sum 1).
struct TriQuadPoint {
  double l1, l2, l3, w;
};
inline const std::array<TriQuadPoint, 7>& tri_rule7() {
  static const std::array<TriQuadPoint, 7> r = [] {
    const double a = 0.059715871789770, b = 0.470142064105115;
    const double c = 0.797426985353087, d = 0.101286507323456;
    const double wa = 0.132394152788506, wc = 0.125939180544827;
    std::array<TriQuadPoint, 7> q{};
    q[0] = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225};
    q[1] = {a, b, b, wa};
    q[2] = {b, a, b, wa};
    q[3] = {b, b, a, wa};
    q[4] = {c, d, d, wc};
    q[5] = {d, c, d, wc};
    q[6] = {d, d, c, wc};
    return q;
  }();
  return r;
}

/// P2 Lagrange space on an n x n right-triangle grid of the unit square.
class P2Grid {
 public:
  struct Tri {
    std::array<int, 6> n;  // v0 v1 v2 m01 m12 m20
    Vec2 v0, v1, v2;
    double area;
    Mat2 grad_map;  // maps reference gradients (d/ds, d/dt) to (d/dx, d/dy)
  };

  explicit P2Grid(int n) {
    const int nv1 = n + 1;
    for (int j = 0; j < nv1; ++j)
      for (int i = 0; i < nv1; ++i)
        nodes_.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    n_vertices_ = static_cast<int>(nodes_.size());
    auto vid = [&](int i, int j) { return j * nv1 + i; };
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        add_tri(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1));
        add_tri(vid(i, j), vid(i + 1, j + 1), vid(i, j + 1));
      }
    }
    boundary_.assign(nodes_.size(), false);
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const Vec2& p = nodes_[k];
      const double tol = 1e-12;
      if (p.x() < tol || p.x() > 1 - tol || p.y() < tol || p.y() > 1 - tol) boundary_[k] = true;
    }
  }

  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  int n_vertices() const { return n_vertices_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  bool boundary(int k) const { return boundary_[k]; }
  const std::vector<Tri>& tris() const { return tris_; }

  static std::array<double, 6> shape(double l2, double l3) {
    const double l1 = 1.0 - l2 - l3;
    return {l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
            4 * l1 * l2,       4 * l2 * l3,       4 * l3 * l1};
  }
  /// Reference gradients w.r.t. (s, t) = (l2, l3).
  static std::array<Vec2, 6> shape_grad(double l2, double l3) {
    const double l1 = 1.0 - l2 - l3;
    return {Vec2(1 - 4 * l1, 1 - 4 * l1), Vec2(4 * l2 - 1, 0), Vec2(0, 4 * l3 - 1),
            Vec2(4 * (l1 - l2), -4 * l2), Vec2(4 * l3, 4 * l2), Vec2(-4 * l3, 4 * (l1 - l3))};
  }

 private:
  void add_tri(int a, int b, int c) {
    Tri t;
    t.n = {a, b, c, mid(a, b), mid(b, c), mid(c, a)};
    t.v0 = nodes_[a];
    t.v1 = nodes_[b];
    t.v2 = nodes_[c];
    const Vec2 e1 = t.v1 - t.v0, e2 = t.v2 - t.v0;
    const double det = e1.x() * e2.y() - e2.x() * e1.y();
    t.area = 0.5 * det;
    Mat2 jinv;
    jinv << e2.y() / det, -e1.y() / det, -e2.x() / det, e1.x() / det;
    t.grad_map = jinv;
    tris_.push_back(t);
  }
  int mid(int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = mids_.find(key);
    if (it != mids_.end()) return it->second;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(0.5 * (nodes_[a] + nodes_[b]));
    mids_.emplace(key, id);
    return id;
  }

  int n_vertices_ = 0;
  std::vector<Vec2> nodes_;
  std::vector<Tri> tris_;
  std::vector<bool> boundary_;
  std::map<std::pair<int, int>, int> mids_;
};

/// A P2 vector field on the grid, one value vector per component.
struct FEField {
  Eigen::VectorXd ux, uy;
};

/// DoF bookkeeping of the unit-square virtual element (N_v = 4, N_k = 18):
/// loop (0,0) (1,0) (1,1) (0,1); component-1 vertices, component-1 midpoints,
/// component-2 vertices, component-2 midpoints, two divergence moments.
struct VirtualSquare {
  static constexpr int kDofs = 18;
  static constexpr double kDiameter = 1.4142135623730951;  // sqrt(2)
  static constexpr double kArea = 1.0;
  static Vec2 center() { return Vec2(0.5, 0.5); }
  static const std::array<Vec2, 4>& corners() {
    static const std::array<Vec2, 4> c = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    return c;
  }

  /// Boundary trace of phi_dof at a point on the square's boundary.
  static Vec2 trace(int dof, const Vec2& x) {
    const double tol = 1e-12;
    int edge = -1;
    double t = 0;
    if (std::abs(x.y()) < tol) {
      edge = 0;
      t = x.x() - 0.5;
    } else if (std::abs(x.x() - 1) < tol) {
      edge = 1;
      t = x.y() - 0.5;
    } else if (std::abs(x.y() - 1) < tol) {
      edge = 2;
      t = 0.5 - x.x();
    } else if (std::abs(x.x()) < tol) {
      edge = 3;
      t = 0.5 - x.y();
    } else {
      throw std::invalid_argument("VirtualSquare::trace: point not on the boundary");
    }
    Vec2 out = Vec2::Zero();
    for (int comp = 0; comp < 2; ++comp) {
      double va = 0, vb = 0, vm = 0;
      if (dof == comp * 8 + edge) va = 1;            // vertex at edge start
      if (dof == comp * 8 + (edge + 1) % 4) vb = 1;  // vertex at edge end
      if (dof == comp * 8 + 4 + edge) vm = 1;        // edge midpoint
      out(comp) = vm + (vb - va) * t + (2 * va + 2 * vb - 4 * vm) * t * t;
    }
    return out;
  }

  /// Divergence moment targets (m_{2,3}, div phi_dof)_K = (|K|/h) delta.
  static Eigen::Vector2d div_moment_targets(int dof) {
    Eigen::Vector2d r = Eigen::Vector2d::Zero();
    if (dof == 16) r(0) = kArea / kDiameter;
    if (dof == 17) r(1) = kArea / kDiameter;
    return r;
  }

  /// int_dK phi_dof . n via the exact trace (16-point Gauss per edge).
  static double boundary_flux(int dof) {
    const auto& c = corners();
    const std::array<Vec2, 4> normals = {Vec2(0, -1), Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0)};
    double s = 0.0;
    for (int e = 0; e < 4; ++e)
      s += edge_integral(c[e], c[(e + 1) % 4], [&](const Vec2& x) {
        return trace(dof, x).dot(normals[e]);
      });
    return s;
  }
};

inline const std::array<std::array<int, 2>, 10>& monomial_exponents() {
  static const std::array<std::array<int, 2>, 10> ex = {
      {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}}};
  return ex;
}

inline double scaled_monomial(const Vec2& x, int idx) {
  const auto& ex = monomial_exponents()[idx];
  const double xi = (x.x() - 0.5) / VirtualSquare::kDiameter;
  const double eta = (x.y() - 0.5) / VirtualSquare::kDiameter;
  return std::pow(xi, ex[0]) * std::pow(eta, ex[1]);
}

inline Vec2 scaled_monomial_grad(const Vec2& x, int idx) {
  const auto& ex = monomial_exponents()[idx];
  const double h = VirtualSquare::kDiameter;
  const double xi = (x.x() - 0.5) / h;
  const double eta = (x.y() - 0.5) / h;
  Vec2 g = Vec2::Zero();
  if (ex[0] > 0) g.x() = ex[0] * std::pow(xi, ex[0] - 1) * std::pow(eta, ex[1]) / h;
  if (ex[1] > 0) g.y() = ex[1] * std::pow(xi, ex[0]) * std::pow(eta, ex[1] - 1) / h;
  return g;
}

/// Exact integral of a scaled monomial product over the unit square.
inline double square_monomial_integral(int ax, int ay) {
  return polygon_scaled_monomial_integral(VirtualSquare::corners(), VirtualSquare::center(),
                                          VirtualSquare::kDiameter, ax, ay);
}

/// (g_t_perp . m_a)_K for g_t_perp = (m_3 m_t, -m_2 m_t), exact.
inline double gperp_monomial_inner(int t, int a) {
  const auto& ex = monomial_exponents();
  const int comp = a / 6, mu = a % 6;
  if (comp == 0)  // m_3 m_t m_mu
    return square_monomial_integral(ex[2][0] + ex[t][0] + ex[mu][0],
                                    ex[2][1] + ex[t][1] + ex[mu][1]);
  return -square_monomial_integral(ex[1][0] + ex[t][0] + ex[mu][0],
                                   ex[1][1] + ex[t][1] + ex[mu][1]);
}

/// Harmonic-plus-bubble lifts of the 18 basis functions.
class LiftOracle {
 public:
  explicit LiftOracle(int n) : grid_(n) { factor_laplacian(); }

  const P2Grid& grid() const { return grid_; }

  FEField lift(int dof) const {
    FEField f;
    f.ux = solve_component(dof, 0);
    f.uy = solve_component(dof, 1);
    Eigen::VectorXd bubble(grid_.n_nodes());
    for (int k = 0; k < grid_.n_nodes(); ++k) {
      const Vec2& p = grid_.nodes()[k];
      bubble(k) = p.x() * (1 - p.x()) * p.y() * (1 - p.y());
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(grid_.n_nodes());
    const FEField w1{bubble, zero}, w2{zero, bubble};
    Eigen::Matrix2d M;
    M.col(0) = div_moments(w1);
    M.col(1) = div_moments(w2);
    const Eigen::Vector2d need = VirtualSquare::div_moment_targets(dof) - div_moments(f);
    const Eigen::Vector2d c = M.partialPivLu().solve(need);
    f.ux += c(0) * bubble;
    f.uy += c(1) * bubble;
    return f;
  }

  /// Quadrature over the grid of f(x, v(x), grad v(x)).
  template <typename F>
  double integrate(const FEField& v, F&& f) const {
    double s = 0.0;
    for (const auto& tri : grid_.tris()) {
      for (const auto& qp : tri_rule7()) {
        const auto sh = P2Grid::shape(qp.l2, qp.l3);
        const auto shg = P2Grid::shape_grad(qp.l2, qp.l3);
        const Vec2 x = qp.l1 * tri.v0 + qp.l2 * tri.v1 + qp.l3 * tri.v2;
        Vec2 val = Vec2::Zero();
        Mat2 grad = Mat2::Zero();
        for (int a = 0; a < 6; ++a) {
          const int node = tri.n[a];
          const Vec2 g = tri.grad_map * shg[a];
          val.x() += v.ux(node) * sh[a];
          val.y() += v.uy(node) * sh[a];
          grad.row(0) += v.ux(node) * g.transpose();
          grad.row(1) += v.uy(node) * g.transpose();
        }
        s += qp.w * tri.area * f(x, val, grad);
      }
    }
    return s;
  }

  Eigen::Vector2d div_moments(const FEField& v) const {
    Eigen::Vector2d r;
    for (int j = 0; j < 2; ++j)
      r(j) = integrate(v, [&](const Vec2& x, const Vec2&, const Mat2& g) {
        return scaled_monomial(x, 1 + j) * (g(0, 0) + g(1, 1));
      });
    return r;
  }

 private:
  void factor_laplacian() {
    interior_index_.assign(grid_.n_nodes(), -1);
    for (int k = 0; k < grid_.n_nodes(); ++k)
      if (!grid_.boundary(k)) {
        interior_index_[k] = n_interior_++;
        interior_nodes_.push_back(k);
      }
    std::vector<Eigen::Triplet<double>> tk;
    stiff_.resize(grid_.n_nodes(), grid_.n_nodes());
    for (const auto& tri : grid_.tris()) {
      Eigen::Matrix<double, 6, 6> ke = Eigen::Matrix<double, 6, 6>::Zero();
      for (const auto& qp : tri_rule7()) {
        const auto shg = P2Grid::shape_grad(qp.l2, qp.l3);
        std::array<Vec2, 6> g;
        for (int a = 0; a < 6; ++a) g[a] = tri.grad_map * shg[a];
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) ke(a, b) += qp.w * tri.area * g[a].dot(g[b]);
      }
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) tk.emplace_back(tri.n[a], tri.n[b], ke(a, b));
    }
    stiff_.setFromTriplets(tk.begin(), tk.end());

    std::vector<Eigen::Triplet<double>> ti;
    for (int k = 0; k < stiff_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(stiff_, k); it; ++it) {
        const int r = interior_index_[it.row()], c = interior_index_[it.col()];
        if (r >= 0 && c >= 0) ti.emplace_back(r, c, it.value());
      }
    Eigen::SparseMatrix<double> kff(n_interior_, n_interior_);
    kff.setFromTriplets(ti.begin(), ti.end());
    lap_lu_.compute(kff);
    if (lap_lu_.info() != Eigen::Success)
      throw std::runtime_error("LiftOracle: Laplacian factorization failed");
  }

  Eigen::VectorXd solve_component(int dof, int comp) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(grid_.n_nodes());
    for (int k = 0; k < grid_.n_nodes(); ++k)
      if (grid_.boundary(k)) full(k) = VirtualSquare::trace(dof, grid_.nodes()[k])(comp);
    const Eigen::VectorXd r = stiff_ * full;
    Eigen::VectorXd rf(n_interior_);
    for (int i = 0; i < n_interior_; ++i) rf(i) = -r(interior_nodes_[i]);
    const Eigen::VectorXd uf = lap_lu_.solve(rf);
    for (int i = 0; i < n_interior_; ++i) full(interior_nodes_[i]) = uf(i);
    return full;
  }

  P2Grid grid_;
  Eigen::SparseMatrix<double> stiff_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lap_lu_;
  std::vector<int> interior_index_, interior_nodes_;
  int n_interior_ = 0;
};

/// Elliptic projection of a lift onto (P2)^2, computed from quadrature of the
/// lift alone (seminorm rows plus exact component-average rows).
inline Eigen::VectorXd elliptic_projection_coeffs(const LiftOracle& lo, const FEField& v) {
  const auto& ex = monomial_exponents();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(12, 12);
  for (int a = 0; a < 12; ++a) {
    for (int b = 0; b < 12; ++b) {
      if (a / 6 != b / 6 || a % 6 == 0 || b % 6 == 0) continue;
      // exact: grad m_mu . grad m_nu expands into scaled monomial integrals
      const int mu = a % 6, nu = b % 6;
      double s = 0.0;
      const double h2 = VirtualSquare::kDiameter * VirtualSquare::kDiameter;
      if (ex[mu][0] > 0 && ex[nu][0] > 0)
        s += ex[mu][0] * ex[nu][0] / h2 *
             square_monomial_integral(ex[mu][0] + ex[nu][0] - 2, ex[mu][1] + ex[nu][1]);
      if (ex[mu][1] > 0 && ex[nu][1] > 0)
        s += ex[mu][1] * ex[nu][1] / h2 *
             square_monomial_integral(ex[mu][0] + ex[nu][0], ex[mu][1] + ex[nu][1] - 2);
      G(a, b) = s;
    }
  }
  for (int c = 0; c < 2; ++c)
    for (int b = 0; b < 6; ++b)
      G(6 * c, 6 * c + b) =
          square_monomial_integral(ex[b][0], ex[b][1]) / VirtualSquare::kArea;

  Eigen::VectorXd rhs(12);
  for (int a = 0; a < 12; ++a) {
    const int comp = a / 6, mu = a % 6;
    if (mu == 0) {
      rhs(a) = lo.integrate(v, [&](const Vec2&, const Vec2& val, const Mat2&) {
        return val(comp);
      }) / VirtualSquare::kArea;
    } else {
      rhs(a) = lo.integrate(v, [&](const Vec2& x, const Vec2&, const Mat2& g) {
        return scaled_monomial_grad(x, mu).dot(g.row(comp));
      });
    }
  }
  return G.partialPivLu().solve(rhs);
}

/// Taylor-Hood Stokes lift matching the exact trace, the P1 divergence of the
/// virtual function, and the three enhancement moments.
class StokesLiftOracle {
 public:
  explicit StokesLiftOracle(int n) : lo_(n) { build(); }

  const LiftOracle& harmonic() const { return lo_; }

  FEField lift(int dof) const {
    const auto& grid = lo_.grid();
    const int nn = grid.n_nodes();

    Eigen::VectorXd gfull = Eigen::VectorXd::Zero(2 * nn);
    for (int k = 0; k < nn; ++k)
      if (grid.boundary(k)) {
        const Vec2 tv = VirtualSquare::trace(dof, grid.nodes()[k]);
        gfull(k) = tv.x();
        gfull(nn + k) = tv.y();
      }

    // P1 divergence coefficients of the virtual function
    Eigen::Vector3d rdiv;
    rdiv(0) = VirtualSquare::boundary_flux(dof);
    rdiv.tail<2>() = VirtualSquare::div_moment_targets(dof);
    const Eigen::Vector3d adiv = h1_.partialPivLu().solve(rdiv);

    // enhancement targets from the harmonic-lift elliptic projection
    const Eigen::VectorXd pi = elliptic_projection_coeffs(lo_, lo_.lift(dof));
    Eigen::Vector3d targets;
    for (int t = 0; t < 3; ++t) {
      double s = 0.0;
      for (int a = 0; a < 12; ++a) s += pi(a) * gperp_monomial_inner(t, a);
      targets(t) = s;
    }

    Eigen::VectorXd rhs = -(bnd_coupling_ * gfull);
    rhs.conservativeResize(n_total_);
    for (int j = 0; j < n_pressure_; ++j)
      rhs(offset_p_ + j) += p1_monomial_mass_.row(j).dot(adiv);
    for (int t = 0; t < 3; ++t) rhs(offset_c_ + t) += targets(t);

    const Eigen::VectorXd sol = lu_.solve(rhs);
    FEField out{gfull.head(nn), gfull.tail(nn)};
    for (int i = 0; i < n_free_; ++i) {
      const int slot = free_slots_[i];
      (slot < nn ? out.ux(slot) : out.uy(slot - nn)) = sol(i);
    }
    return out;
  }

 private:
  void build() {
    const auto& grid = lo_.grid();
    const int nn = grid.n_nodes();
    const int np = grid.n_vertices();  // continuous P1 pressure on grid vertices
    n_pressure_ = np;

    free_index_.assign(2 * nn, -1);
    for (int slot = 0; slot < 2 * nn; ++slot)
      if (!grid.boundary(slot % nn)) {
        free_index_[slot] = n_free_++;
        free_slots_.push_back(slot);
      }
    offset_p_ = n_free_;
    offset_c_ = n_free_ + np;
    n_total_ = n_free_ + np + 3 + 1;

    // H1 for the divergence expansion and the P1-vs-monomial mass
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto& ex = monomial_exponents();
        h1_(i, j) = square_monomial_integral(ex[i][0] + ex[j][0], ex[i][1] + ex[j][1]);
      }
    p1_monomial_mass_ = Eigen::MatrixXd::Zero(np, 3);

    std::vector<Eigen::Triplet<double>> tm, tb;  // system matrix; boundary coupling
    auto add = [&](int row, int col_slot, double v) {
      // velocity column: free -> matrix, boundary -> coupling
      const int f = free_index_[col_slot];
      if (f >= 0)
        tm.emplace_back(row, f, v);
      else
        tb.emplace_back(row, col_slot, v);
    };

    for (const auto& tri : grid.tris()) {
      for (const auto& qp : tri_rule7()) {
        const auto sh = P2Grid::shape(qp.l2, qp.l3);
        const auto shg = P2Grid::shape_grad(qp.l2, qp.l3);
        const Vec2 x = qp.l1 * tri.v0 + qp.l2 * tri.v1 + qp.l3 * tri.v2;
        const double w = qp.w * tri.area;
        std::array<Vec2, 6> g;
        for (int a = 0; a < 6; ++a) g[a] = tri.grad_map * shg[a];
        const double p1sh[3] = {qp.l1, qp.l2, qp.l3};
        const int p1n[3] = {tri.n[0], tri.n[1], tri.n[2]};

        for (int a = 0; a < 6; ++a) {
          const int ra = free_index_[tri.n[a]];
          const int ra2 = free_index_[nn + tri.n[a]];
          // vector Laplacian (component-diagonal)
          for (int b = 0; b < 6; ++b) {
            const double k = w * g[a].dot(g[b]);
            if (ra >= 0) add(ra, tri.n[b], k);
            if (ra2 >= 0) add(ra2, nn + tri.n[b], k);
          }
          // pressure coupling (s, div w) and moment coupling (g_t, w)
          for (int pq = 0; pq < 3; ++pq) {
            const double bx = w * p1sh[pq] * g[a].x();
            const double by = w * p1sh[pq] * g[a].y();
            if (ra >= 0) tm.emplace_back(ra, offset_p_ + p1n[pq], bx);
            if (ra2 >= 0) tm.emplace_back(ra2, offset_p_ + p1n[pq], by);
            // transposed rows (div constraint), all velocity columns
            add(offset_p_ + p1n[pq], tri.n[a], bx);
            add(offset_p_ + p1n[pq], nn + tri.n[a], by);
          }
          for (int t = 0; t < 3; ++t) {
            const double gpx = scaled_monomial(x, 2) * scaled_monomial(x, t);
            const double gpy = -scaled_monomial(x, 1) * scaled_monomial(x, t);
            const double cx = w * gpx * sh[a], cy = w * gpy * sh[a];
            if (ra >= 0) tm.emplace_back(ra, offset_c_ + t, cx);
            if (ra2 >= 0) tm.emplace_back(ra2, offset_c_ + t, cy);
            add(offset_c_ + t, tri.n[a], cx);
            add(offset_c_ + t, nn + tri.n[a], cy);
          }
        }
        for (int pq = 0; pq < 3; ++pq) {
          // pressure mean pinning and the div-constraint right-hand side mass
          tm.emplace_back(offset_p_ + p1n[pq], n_total_ - 1, w * p1sh[pq]);
          tm.emplace_back(n_total_ - 1, offset_p_ + p1n[pq], w * p1sh[pq]);
          for (int l = 0; l < 3; ++l)
            p1_monomial_mass_(p1n[pq], l) += w * p1sh[pq] * scaled_monomial(x, l);
        }
      }
    }

    Eigen::SparseMatrix<double> S(n_total_, n_total_);
    S.setFromTriplets(tm.begin(), tm.end());
    bnd_coupling_.resize(n_total_, 2 * nn);
    bnd_coupling_.setFromTriplets(tb.begin(), tb.end());
    lu_.compute(S);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("StokesLiftOracle: factorization failed");
  }

  LiftOracle lo_;
  Eigen::Matrix3d h1_;
  Eigen::MatrixXd p1_monomial_mass_;  // (q_j, m_l)
  Eigen::SparseMatrix<double> bnd_coupling_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::vector<int> free_index_, free_slots_;
  int n_free_ = 0, n_pressure_ = 0, n_total_ = 0, offset_p_ = 0, offset_c_ = 0;
};

}  // namespace oracle
