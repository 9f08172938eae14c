#pragma once

#include "vemns/mesh.hpp"
#include "vemns/polybasis.hpp"

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <vector>

namespace vemns {

// Local space for k = 2: on a cell with N_v vertices the N_k = 4 N_v + 2 DoFs
// are, in order: component-1 vertex values, component-1 edge-midpoint values,
// component-2 vertex values, component-2 edge-midpoint values, and the two
// divergence moments (h_K/|K|) (div v, m_2)_K and (h_K/|K|) (div v, m_3)_K.
struct LocalDofLayout {
  int n_vertices = 0;

  int n_dofs() const { return 4 * n_vertices + 2; }
  int vertex_dof(int comp, int i) const { return comp * 2 * n_vertices + i; }
  int midpoint_dof(int comp, int i) const { return comp * 2 * n_vertices + n_vertices + i; }
  int div_dof(int j) const { return 4 * n_vertices + j; }
};

/// All local projector matrices of the k = 2 enhanced divergence-free space.
/// Vector polynomial basis m = (m_1..m_6 in component 1, then component 2),
/// 12 columns; matrix monomial basis M ordered slot-major (11,12,21,22).
struct LocalProjectors {
  ElementGeometry geom;
  ScaledMonomialBasis mono;  // degree-3 scalar basis; first 6 entries span P2
  LocalDofLayout layout;
  QuadratureRule quad;       // degree-6 interior rule

  Eigen::Matrix3d H1;        // (m_j, m_i)_K, P1 x P1
  Eigen::MatrixXd M31;       // 10 x 3 moments (m_s, m_j)_K, s over P3
  Eigen::MatrixXd H2;        // 6 x 6 scalar P2 mass
  Eigen::MatrixXd H;         // 12 x 12 vector P2 mass, diag(H2, H2)

  Eigen::MatrixXd D;         // Nk x 12 transition matrix
  Eigen::MatrixXd G;         // 12 x 12 seminorm Gram a(m, m^T)
  Eigen::MatrixXd Gtilde;    // G with rows 1, 7 replaced by component averages
  Eigen::MatrixXd B;         // 12 x Nk, a(m_a, phi_i)
  Eigen::MatrixXd Btilde;    // B with the same two rows replaced
  Eigen::MatrixXd P0rows;    // 2 x Nk component averages |K|^-1 (phi_i)_c
  Eigen::MatrixXd PiStar;    // 12 x Nk elliptic projector (coefficients)
  Eigen::MatrixXd Pi;        // Nk x Nk elliptic projector (DoF space)

  Eigen::MatrixXd DL;        // (Nk+3) x 12 lifting transition matrix
  Eigen::MatrixXd BL;        // 12 x (Nk+3), three zero columns appended
  Eigen::MatrixXd PiStarL;   // 12 x (Nk+3)

  Eigen::MatrixXd div_r;     // 3 x Nk moments (m_j, div phi_i)_K; B_K = div_r^T
  Eigen::MatrixXd div_a;     // 3 x Nk P1 coefficients of div phi_i

  Eigen::MatrixXd C;         // 12 x Nk, (m_a, phi_i)_K
  Eigen::MatrixXd Pi0Star;   // 12 x Nk L2 projector (coefficients)
  Eigen::MatrixXd Pi0;       // Nk x Nk

  Eigen::MatrixXd Cgrad;       // 12 x Nk, (M_a, grad phi_i)_K
  Eigen::MatrixXd PiGradStar;  // 12 x Nk gradient projector (coefficients)

  TripleProductTensor T;

  int n_dofs() const { return layout.n_dofs(); }
};

namespace detail {

// Solves A X = R with rows of [A | R] pre-scaled by their max |A| entry.
inline Eigen::MatrixXd scaled_solve(Eigen::MatrixXd A, Eigen::MatrixXd R,
                                    const char* what) {
  for (int r = 0; r < A.rows(); ++r) {
    const double s = A.row(r).cwiseAbs().maxCoeff();
    if (!(s > 0.0)) throw std::runtime_error(std::string(what) + ": singular system");
    A.row(r) /= s;
    R.row(r) /= s;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::MatrixXd X = lu.solve(R);
  if (!X.allFinite()) throw std::runtime_error(std::string(what) + ": singular system");
  return X;
}

/// Inverse of the fixed Vandermonde [[1,-1/2,1/4],[1,1/2,1/4],[1,0,0]] mapping
/// (value at a_e, value at b_e, value at midpoint) to edge-monomial
/// coefficients in t = (s - s_e)/h_e.
inline const Eigen::Matrix3d& edge_vandermonde_inverse() {
  static const Eigen::Matrix3d Vinv = [] {
    Eigen::Matrix3d V;
    V << 1.0, -0.5, 0.25, 1.0, 0.5, 0.25, 1.0, 0.0, 0.0;
    return Eigen::Matrix3d(V.partialPivLu().inverse());
  }();
  return Vinv;
}

}  // namespace detail

/// Trace expansion of the local basis on edge j: 3 x Nk matrices (abar, aunder)
/// of edge-monomial coefficients for components 1 and 2. Only the columns of
/// the edge's endpoint and midpoint DoFs are nonzero.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> edge_trace_expansion(
    const LocalDofLayout& layout, int edge) {
  const int nv = layout.n_vertices;
  if (edge < 0 || edge >= nv) throw std::out_of_range("edge_trace_expansion: bad edge index");
  const Eigen::Matrix3d& Vinv = detail::edge_vandermonde_inverse();
  Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(3, layout.n_dofs());
  Eigen::MatrixXd aunder = Eigen::MatrixXd::Zero(3, layout.n_dofs());
  const int next = (edge + 1) % nv;
  abar.col(layout.vertex_dof(0, edge)) = Vinv.col(0);
  abar.col(layout.vertex_dof(0, next)) = Vinv.col(1);
  abar.col(layout.midpoint_dof(0, edge)) = Vinv.col(2);
  aunder.col(layout.vertex_dof(1, edge)) = Vinv.col(0);
  aunder.col(layout.vertex_dof(1, next)) = Vinv.col(1);
  aunder.col(layout.midpoint_dof(1, edge)) = Vinv.col(2);
  return {abar, aunder};
}

namespace detail {

/// Accumulates Simpson-rule boundary integrals of g . phi_i over all edges
/// into a row over the local DoFs: row_i += sum_e int_e g(x) . phi_i ds.
/// g returns the 2-vector integrand factor at a boundary point.
template <typename G, typename Row>
inline void accumulate_boundary(const ElementGeometry& geom, const LocalDofLayout& layout,
                                G&& g, Row row) {
  const int nv = layout.n_vertices;
  for (int j = 0; j < nv; ++j) {
    const Vec2& a = geom.vertices[j];
    const Vec2& b = geom.vertices[(j + 1) % nv];
    const Vec2& m = geom.edge_midpoint[j];
    const double he = geom.edge_length[j];
    const Vec2 ga = g(a, j), gb = g(b, j), gm = g(m, j);
    const double wa = he / 6.0, wm = 4.0 * he / 6.0;
    row(layout.vertex_dof(0, j)) += wa * ga.x();
    row(layout.vertex_dof(0, (j + 1) % nv)) += wa * gb.x();
    row(layout.midpoint_dof(0, j)) += wm * gm.x();
    row(layout.vertex_dof(1, j)) += wa * ga.y();
    row(layout.vertex_dof(1, (j + 1) % nv)) += wa * gb.y();
    row(layout.midpoint_dof(1, j)) += wm * gm.y();
  }
}

}  // namespace detail

/// Transition matrix D: row i holds chi_i(m_a) over the 12 vector monomials.
inline Eigen::MatrixXd transition_matrix(const ElementGeometry& geom,
                                         const ScaledMonomialBasis& mono,
                                         const LocalDofLayout& layout,
                                         const QuadratureRule& quad) {
  const int nk = layout.n_dofs();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nk, 12);
  const int nv = layout.n_vertices;
  for (int alpha = 0; alpha < 12; ++alpha) {
    const int comp = alpha / 6;
    const int mu = alpha % 6;
    for (int i = 0; i < nv; ++i) {
      D(layout.vertex_dof(comp, i), alpha) = mono.eval_one(mu, geom.vertices[i]);
      D(layout.midpoint_dof(comp, i), alpha) = mono.eval_one(mu, geom.edge_midpoint[i]);
    }
    // div m_a = d/dx or d/dy of the scalar monomial; moments against m_2, m_3
    const double hk = geom.diameter;
    for (int j = 0; j < 2; ++j) {
      double mom = 0.0;
      for (std::size_t q = 0; q < quad.points.size(); ++q) {
        const Vec2 gr = mono.grad_one(mu, quad.points[q]);
        const double dv = (comp == 0) ? gr.x() : gr.y();
        mom += quad.weights[q] * dv * mono.eval_one(1 + j, quad.points[q]);
      }
      D(layout.div_dof(j), alpha) = hk / geom.area * mom;
    }
  }
  return D;
}

/// Builds every local matrix of the element. Throws on degenerate geometry.
inline LocalProjectors build_local_projectors(const ElementGeometry& geom) {
  LocalProjectors P;
  P.geom = geom;
  P.mono = element_basis(geom, 3);
  P.layout.n_vertices = geom.n_vertices();
  P.quad = polygon_quadrature(geom, 6);
  const int nv = P.layout.n_vertices;
  const int nk = P.layout.n_dofs();
  const double hk = geom.diameter;
  const double area = geom.area;
  const auto& quad = P.quad;
  const std::size_t nq = quad.points.size();

  // Monomial values and gradients at quadrature points (degree 3 = 10 scalars).
  const Eigen::MatrixXd mv = P.mono.eval(quad.points);
  std::vector<std::array<Vec2, 10>> mg(nq);
  for (std::size_t q = 0; q < nq; ++q)
    for (int s = 0; s < 10; ++s) mg[q][s] = P.mono.grad_one(s, quad.points[q]);

  // Mass blocks.
  P.M31.setZero(10, 3);
  P.H2.setZero(6, 6);
  for (std::size_t q = 0; q < nq; ++q) {
    const double w = quad.weights[q];
    P.M31.noalias() += w * mv.row(q).transpose() * mv.row(q).head(3);
    P.H2.noalias() += w * mv.row(q).head(6).transpose() * mv.row(q).head(6);
  }
  P.H1 = P.M31.topRows(3);
  P.H = Eigen::MatrixXd::Zero(12, 12);
  P.H.topLeftCorner(6, 6) = P.H2;
  P.H.bottomRightCorner(6, 6) = P.H2;

  P.T = TripleProductTensor::compute(geom, P.mono);

  P.D = transition_matrix(geom, P.mono, P.layout, quad);

  // --- Elliptic projector -------------------------------------------------
  // G = a(m, m^T): component-diagonal scalar P2 stiffness blocks.
  Eigen::MatrixXd Gs = Eigen::MatrixXd::Zero(6, 6);
  for (std::size_t q = 0; q < nq; ++q)
    for (int a = 0; a < 6; ++a)
      for (int b = a; b < 6; ++b) Gs(a, b) += quad.weights[q] * mg[q][a].dot(mg[q][b]);
  Gs = Gs.selfadjointView<Eigen::Upper>();
  P.G = Eigen::MatrixXd::Zero(12, 12);
  P.G.topLeftCorner(6, 6) = Gs;
  P.G.bottomRightCorner(6, 6) = Gs;

  // B_{a i} = I_1 + I_2 with Delta m_a = grad q_a, q_a = h_K (c2 m_2 + c3 m_3).
  P.B = Eigen::MatrixXd::Zero(12, nk);
  for (int alpha = 0; alpha < 12; ++alpha) {
    const int comp = alpha / 6;
    const int mu = alpha % 6;
    const double lap = P.mono.laplacian_one(mu, geom.centroid);  // constant on P2
    const double c2 = comp == 0 ? lap : 0.0;
    const double c3 = comp == 1 ? lap : 0.0;
    P.B(alpha, P.layout.div_dof(0)) += area * c2;
    P.B(alpha, P.layout.div_dof(1)) += area * c3;
    detail::accumulate_boundary(
        geom, P.layout,
        [&](const Vec2& x, int edge) {
          const Vec2& n = geom.edge_normal[edge];
          const Vec2 gr = P.mono.grad_one(mu, x);
          const double qv = hk * (c2 * P.mono.eval_one(1, x) + c3 * P.mono.eval_one(2, x));
          Vec2 g = -qv * n;
          g(comp) += gr.dot(n);
          return g;
        },
        P.B.row(alpha));
  }

  // Constraint rows: component averages of phi_i via the decomposition
  // e_c = grad(h_K m_{2,3}).
  P.P0rows = Eigen::MatrixXd::Zero(2, nk);
  for (int c = 0; c < 2; ++c) {
    P.P0rows(c, P.layout.div_dof(c)) = -1.0;
    detail::accumulate_boundary(
        geom, P.layout,
        [&](const Vec2& x, int edge) {
          const Vec2& n = geom.edge_normal[edge];
          return Vec2(hk / area * P.mono.eval_one(1 + c, x) * n.x(),
                      hk / area * P.mono.eval_one(1 + c, x) * n.y());
        },
        P.P0rows.row(c));
  }

  P.Gtilde = P.G;
  P.Btilde = P.B;
  for (int c = 0; c < 2; ++c) {
    P.Gtilde.row(6 * c).setZero();
    for (int beta = 0; beta < 6; ++beta)
      P.Gtilde(6 * c, 6 * c + beta) = P.M31(beta, 0) / area;  // average of m_beta
    P.Btilde.row(6 * c) = P.P0rows.row(c);
  }

  P.PiStar = detail::scaled_solve(P.Gtilde, P.Btilde, "elliptic projector");
  P.Pi = P.D * P.PiStar;

  // --- Lifting space ------------------------------------------------------
  // Extra DoFs chi_t(v) = |K|^-1 (v, m_perp m_t)_K with m_perp = (m_3, -m_2).
  P.DL = Eigen::MatrixXd::Zero(nk + 3, 12);
  P.DL.topRows(nk) = P.D;
  for (int t = 0; t < 3; ++t) {
    for (int alpha = 0; alpha < 12; ++alpha) {
      const int comp = alpha / 6;
      const int mu = alpha % 6;
      double v = 0.0;
      for (std::size_t q = 0; q < nq; ++q) {
        const double perp = (comp == 0 ? mv(q, 2) : -mv(q, 1));
        v += quad.weights[q] * mv(q, mu) * perp * mv(q, t);
      }
      P.DL(nk + t, alpha) = v / area;
    }
  }
  P.BL = Eigen::MatrixXd::Zero(12, nk + 3);
  P.BL.leftCols(nk) = P.B;
  Eigen::MatrixXd BLtilde = Eigen::MatrixXd::Zero(12, nk + 3);
  BLtilde.leftCols(nk) = P.Btilde;
  P.PiStarL = detail::scaled_solve(P.Gtilde, BLtilde, "lifting projector");

  // --- Divergence expansion ------------------------------------------------
  // div phi_i = a_1 m_1 + a_2 m_2 + a_3 m_3 from H_1 a = r, r = B_K^T.
  P.div_r = Eigen::MatrixXd::Zero(3, nk);
  detail::accumulate_boundary(
      geom, P.layout,
      [&](const Vec2&, int edge) { return geom.edge_normal[edge]; },
      P.div_r.row(0));
  P.div_r(1, P.layout.div_dof(0)) = area / hk;
  P.div_r(2, P.layout.div_dof(1)) = area / hk;
  P.div_a = P.H1.partialPivLu().solve(P.div_r);

  // --- L2 projector ---------------------------------------------------------
  // Edge moments H^e(s,u) = int_e m_s m_u^e ds by four-point Gauss-Lobatto.
  std::vector<Eigen::Matrix<double, 10, 3>> He(nv);
  for (int j = 0; j < nv; ++j) {
    const Vec2& a = geom.vertices[j];
    const Vec2& b = geom.vertices[(j + 1) % nv];
    const auto rule = edge_quadrature(a, b, EdgeRule::GaussLobatto4);
    const double s5 = 0.5 / std::sqrt(5.0);
    const std::array<double, 4> tpar = {-0.5, -s5, s5, 0.5};
    He[j].setZero();
    for (int p = 0; p < 4; ++p) {
      for (int s = 0; s < 10; ++s) {
        const double ms = P.mono.eval_one(s, rule.points[p]);
        double tu = 1.0;
        for (int u = 0; u < 3; ++u) {
          He[j](s, u) += rule.weights[p] * ms * tu;
          tu *= tpar[p];
        }
      }
    }
  }

  // I_nabla(s,:) = -(m_s, div phi)_K + boundary edge-trace moments, s = 2..10.
  Eigen::MatrixXd Inabla = Eigen::MatrixXd::Zero(9, nk);
  Inabla = -P.M31.bottomRows(9) * P.div_a;
  const Eigen::Matrix3d& Vinv = detail::edge_vandermonde_inverse();
  for (int j = 0; j < nv; ++j) {
    const Vec2& n = geom.edge_normal[j];
    const Eigen::Matrix<double, 9, 3> rowblk = He[j].bottomRows(9) * Vinv;
    const int cols1[3] = {P.layout.vertex_dof(0, j), P.layout.vertex_dof(0, (j + 1) % nv),
                          P.layout.midpoint_dof(0, j)};
    const int cols2[3] = {P.layout.vertex_dof(1, j), P.layout.vertex_dof(1, (j + 1) % nv),
                          P.layout.midpoint_dof(1, j)};
    for (int c = 0; c < 3; ++c) {
      Inabla.col(cols1[c]) += n.x() * rowblk.col(c);
      Inabla.col(cols2[c]) += n.y() * rowblk.col(c);
    }
  }

  // I_perp(t,:) = |K| chi_t(Pi phi), read off the lifting transition matrix.
  const Eigen::MatrixXd Iperp = area * (P.DL.bottomRows(3) * P.PiStar);

  // Decomposition (P_2)^2 = grad P_3 (+) m_perp P_1 applied to each m_a:
  // spanning set grad m_2..m_10 then m_perp m_1..m_3.
  Eigen::MatrixXd Hplus = Eigen::MatrixXd::Zero(12, 12);
  Eigen::MatrixXd Rplus = Eigen::MatrixXd::Zero(12, 12);
  for (std::size_t q = 0; q < nq; ++q) {
    const double w = quad.weights[q];
    std::array<Vec2, 12> span;
    for (int s = 0; s < 9; ++s) span[s] = mg[q][s + 1];
    for (int t = 0; t < 3; ++t) span[9 + t] = Vec2(mv(q, 2) * mv(q, t), -mv(q, 1) * mv(q, t));
    for (int k = 0; k < 12; ++k) {
      for (int kk = k; kk < 12; ++kk) Hplus(k, kk) += w * span[k].dot(span[kk]);
      for (int alpha = 0; alpha < 12; ++alpha) {
        const int comp = alpha / 6;
        Rplus(k, alpha) += w * span[k](comp) * mv(q, alpha % 6);
      }
    }
  }
  Hplus = Hplus.selfadjointView<Eigen::Upper>();
  const Eigen::MatrixXd Aplus = detail::scaled_solve(Hplus, Rplus, "polynomial decomposition");

  P.C = Aplus.topRows(9).transpose() * Inabla + Aplus.bottomRows(3).transpose() * Iperp;
  P.Pi0Star = detail::scaled_solve(P.H, P.C, "L2 projector");
  P.Pi0 = P.D * P.Pi0Star;

  // --- Gradient projector ---------------------------------------------------
  // C_grad(a, u) = (m_i phi_{u,k}, n_l)_{dK} - (d_l m_i) |K| P0row_k(u) for
  // a = (slot, i), slot over (1,1),(1,2),(2,1),(2,2).
  P.Cgrad = Eigen::MatrixXd::Zero(12, nk);
  for (int slot = 0; slot < 4; ++slot) {
    const int k = slot / 2, l = slot % 2;
    for (int i = 0; i < 3; ++i) {
      const int alpha = 3 * slot + i;
      for (int j = 0; j < nv; ++j) {
        const double nl = geom.edge_normal[j](l);
        const Eigen::RowVector3d rowblk = He[j].row(i) * Vinv;
        const int cols[3] = {P.layout.vertex_dof(k, j), P.layout.vertex_dof(k, (j + 1) % nv),
                             P.layout.midpoint_dof(k, j)};
        for (int c = 0; c < 3; ++c) P.Cgrad(alpha, cols[c]) += nl * rowblk(c);
      }
      const double dmi = (i == 0) ? 0.0 : ((i == 1 && l == 0) || (i == 2 && l == 1)) ? 1.0 / hk : 0.0;
      if (dmi != 0.0) P.Cgrad.row(alpha) -= dmi * area * P.P0rows.row(k);
    }
  }
  P.PiGradStar = Eigen::MatrixXd::Zero(12, nk);
  const Eigen::PartialPivLU<Eigen::Matrix3d> h1lu(P.H1);
  for (int slot = 0; slot < 4; ++slot)
    P.PiGradStar.middleRows(3 * slot, 3) = h1lu.solve(P.Cgrad.middleRows(3 * slot, 3));

  return P;
}

inline LocalProjectors build_local_projectors(const PolygonalMesh& mesh, int cell) {
  return build_local_projectors(element_geometry(mesh, cell));
}

}  // namespace vemns
