#pragma once

#include "vemns/postprocess.hpp"
#include "vemns/projectors.hpp"
#include "vemns/solver.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vemns {

namespace detail {

/// Shortest exact decimal form of a double (17 significant digits round-trip).
inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace detail

struct ErrorTableRow {
  int dof = 0;
  double h = 0.0;
  double err_u_h1 = 0.0;
  double err_p_l2 = 0.0;
  int iterations = 0;
};

inline void write_error_table_csv(const std::vector<ErrorTableRow>& rows,
                                  const std::string& path) {
  auto out = detail::open_out(path);
  out << "dof,h,erruH1,errpL2,iterations\n";
  for (const auto& r : rows)
    out << r.dof << ',' << detail::fmt17(r.h) << ',' << detail::fmt17(r.err_u_h1) << ','
        << detail::fmt17(r.err_p_l2) << ',' << r.iterations << '\n';
}

inline void write_telemetry_csv(const std::vector<AHTelemetry>& rows, const std::string& path) {
  auto out = detail::open_out(path);
  out << "n,dp_norm,lambda,seconds\n";
  for (const auto& r : rows)
    out << r.n << ',' << detail::fmt17(r.dp_norm) << ',' << detail::fmt17(r.lambda) << ','
        << detail::fmt17(r.seconds) << '\n';
}

inline void write_grid_field_csv(const GridField& grid, const std::string& path) {
  auto out = detail::open_out(path);
  out << "x,y,u1,u2\n";
  for (const auto& s : grid.samples) {
    if (!s.value) continue;
    out << detail::fmt17(s.position.x()) << ',' << detail::fmt17(s.position.y()) << ','
        << detail::fmt17(s.value->x()) << ',' << detail::fmt17(s.value->y()) << '\n';
  }
}

/// Legacy-ASCII VTK STRUCTURED_POINTS file with the sampled velocity as a
/// vector field (third component zero). Absent samples are written as zeros.
inline void write_grid_field_vtk(const GridField& grid, const std::string& path) {
  auto out = detail::open_out(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "velocity field\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << grid.nx + 1 << ' ' << grid.ny + 1 << " 1\n";
  out << "ORIGIN " << detail::fmt17(grid.bounds.xmin) << ' ' << detail::fmt17(grid.bounds.ymin)
      << " 0\n";
  out << "SPACING " << detail::fmt17(grid.bounds.width() / grid.nx) << ' '
      << detail::fmt17(grid.bounds.height() / grid.ny) << " 1\n";
  out << "POINT_DATA " << (grid.nx + 1) * (grid.ny + 1) << "\n";
  out << "VECTORS velocity double\n";
  for (const auto& s : grid.samples) {
    const Vec2 v = s.value.value_or(Vec2::Zero());
    out << detail::fmt17(v.x()) << ' ' << detail::fmt17(v.y()) << " 0\n";
  }
}

/// Matrix Market coordinate format (1-based, general real).
inline void write_matrix_market(const SpMat& m, const std::string& path) {
  auto out = detail::open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << detail::fmt17(it.value()) << '\n';
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(m.size());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;  // row-major
  return j;
}

/// Debug dump of every local matrix of one element, for golden-file testing.
inline nlohmann::json local_matrices_json(const LocalProjectors& P) {
  nlohmann::json j;
  j["D"] = matrix_to_json(P.D);
  j["G"] = matrix_to_json(P.G);
  j["B"] = matrix_to_json(P.B);
  j["PiStar"] = matrix_to_json(P.PiStar);
  j["Pi"] = matrix_to_json(P.Pi);
  j["DL"] = matrix_to_json(P.DL);
  j["BL"] = matrix_to_json(P.BL);
  j["PiStarL"] = matrix_to_json(P.PiStarL);
  j["H"] = matrix_to_json(P.H);
  j["C"] = matrix_to_json(P.C);
  j["Pi0Star"] = matrix_to_json(P.Pi0Star);
  j["Pi0"] = matrix_to_json(P.Pi0);
  j["Cgrad"] = matrix_to_json(P.Cgrad);
  j["PiGradStar"] = matrix_to_json(P.PiGradStar);
  j["div_r"] = matrix_to_json(P.div_r);
  j["div_a"] = matrix_to_json(P.div_a);
  j["H1"] = matrix_to_json(P.H1);
  return j;
}

inline nlohmann::json solution_to_json(const AHResult& res) {
  nlohmann::json j;
  j["chi"] = std::vector<double>(res.state.chi.data(), res.state.chi.data() + res.state.chi.size());
  j["p"] = std::vector<double>(res.state.p.data(), res.state.p.data() + res.state.p.size());
  j["lambda"] = res.state.lambda;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["last_dp"] = res.last_dp;
  j["divergence_norm"] = res.divergence_norm;
  return j;
}

}  // namespace vemns
