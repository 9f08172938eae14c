#pragma once

#include "vemns/geometry.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vemns {

/// Exact-solution closures of a benchmark, all under the sign convention
/// -nu lap u + (u . grad) u - grad p = f, i.e. b(v, p) = +(div v, p).
/// The forcing is composed from the closures, so solved and measured fields
/// are always consistent. Steady cases ignore the time argument.
struct BenchmarkCase {
  std::string name;
  double nu = 1.0;
  Rect domain;
  bool unsteady = false;
  bool has_exact = true;
  bool flux_correction = true;  // off for discontinuous data (cavity corners)

  std::function<Vec2(const Vec2&, double)> velocity;
  std::function<Mat2(const Vec2&, double)> velocity_gradient;  // (i,j) = du_i/dx_j
  std::function<Vec2(const Vec2&, double)> velocity_laplacian;
  std::function<Vec2(const Vec2&, double)> velocity_dt;        // unsteady only
  std::function<double(const Vec2&, double)> pressure;
  std::function<Vec2(const Vec2&, double)> pressure_gradient;
  std::function<Vec2(const Vec2&, double)> forcing_override;   // cavity: f = 0

  Vec2 forcing(const Vec2& x, double t = 0.0) const {
    if (forcing_override) return forcing_override(x, t);
    const Vec2 u = velocity(x, t);
    Vec2 f = velocity_gradient(x, t) * u - nu * velocity_laplacian(x, t) -
             pressure_gradient(x, t);
    if (unsteady) f += velocity_dt(x, t);
    return f;
  }
  Vec2 boundary(const Vec2& x, double t = 0.0) const { return velocity(x, t); }
};

/// Trigonometric steady solution on the unit square:
/// u = (-cos^2(x) cos(y) sin(y), cos^2(y) cos(x) sin(x)) / 2, p = sin x - sin y.
inline BenchmarkCase make_example1(double nu) {
  BenchmarkCase b;
  b.name = "example1";
  b.nu = nu;
  b.domain = Rect{0.0, 0.0, 1.0, 1.0};
  b.velocity = [](const Vec2& q, double) {
    const double x = q.x(), y = q.y();
    return Vec2(-0.125 * (1.0 + std::cos(2 * x)) * std::sin(2 * y),
                0.125 * (1.0 + std::cos(2 * y)) * std::sin(2 * x));
  };
  b.velocity_gradient = [](const Vec2& q, double) {
    const double x = q.x(), y = q.y();
    Mat2 g;
    g(0, 0) = 0.25 * std::sin(2 * x) * std::sin(2 * y);
    g(0, 1) = -0.25 * (1.0 + std::cos(2 * x)) * std::cos(2 * y);
    g(1, 0) = 0.25 * (1.0 + std::cos(2 * y)) * std::cos(2 * x);
    g(1, 1) = -0.25 * std::sin(2 * x) * std::sin(2 * y);
    return g;
  };
  b.velocity_laplacian = [](const Vec2& q, double) {
    const double x = q.x(), y = q.y();
    return Vec2(0.5 * std::sin(2 * y) * (1.0 + 2.0 * std::cos(2 * x)),
                -0.5 * std::sin(2 * x) * (1.0 + 2.0 * std::cos(2 * y)));
  };
  b.pressure = [](const Vec2& q, double) { return std::sin(q.x()) - std::sin(q.y()); };
  b.pressure_gradient = [](const Vec2& q, double) {
    return Vec2(std::cos(q.x()), -std::cos(q.y()));
  };
  return b;
}

/// Unsteady variant: u scaled by (t+1)^2, p by (t+1).
inline BenchmarkCase make_example4(double nu) {
  BenchmarkCase b = make_example1(nu);
  const BenchmarkCase steady = make_example1(nu);
  b.name = "example4";
  b.unsteady = true;
  auto s2 = [](double t) { return (t + 1.0) * (t + 1.0); };
  b.velocity = [steady, s2](const Vec2& x, double t) { return s2(t) * steady.velocity(x, 0); };
  b.velocity_gradient = [steady, s2](const Vec2& x, double t) {
    return Mat2(s2(t) * steady.velocity_gradient(x, 0));
  };
  b.velocity_laplacian = [steady, s2](const Vec2& x, double t) {
    return Vec2(s2(t) * steady.velocity_laplacian(x, 0));
  };
  b.velocity_dt = [steady](const Vec2& x, double t) {
    return Vec2(2.0 * (t + 1.0) * steady.velocity(x, 0));
  };
  b.pressure = [steady](const Vec2& x, double t) { return (t + 1.0) * steady.pressure(x, 0); };
  b.pressure_gradient = [steady](const Vec2& x, double t) {
    return Vec2((t + 1.0) * steady.pressure_gradient(x, 0));
  };
  return b;
}

/// Kovasznay flow on (-0.5, 1) x (-0.5, 1.5); p_0 makes the pressure mean-zero
/// (computed by numerical integration of -exp(2 lambda x)/2 over the domain).
inline BenchmarkCase make_kovasznay(double reynolds) {
  BenchmarkCase b;
  b.name = "kovasznay";
  b.nu = 1.0 / reynolds;
  b.domain = Rect{-0.5, -0.5, 1.0, 1.5};
  const double pi = std::numbers::pi;
  const double lam = 0.5 * reynolds - std::sqrt(0.25 * reynolds * reynolds + 4.0 * pi * pi);

  double mean = 0.0;  // composite Simpson in x of -exp(2 lam x)/2, constant in y
  {
    const int n = 256;
    const double a = b.domain.xmin, h = b.domain.width() / n;
    auto f = [&](double x) { return -0.5 * std::exp(2.0 * lam * x); };
    double s = f(a) + f(a + n * h);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    mean = (h / 3.0) * s / b.domain.width();
  }
  const double p0 = -mean;

  b.velocity = [lam, pi](const Vec2& q, double) {
    const double e = std::exp(lam * q.x());
    return Vec2(1.0 - e * std::cos(2 * pi * q.y()), lam / (2 * pi) * e * std::sin(2 * pi * q.y()));
  };
  b.velocity_gradient = [lam, pi](const Vec2& q, double) {
    const double e = std::exp(lam * q.x());
    Mat2 g;
    g(0, 0) = -lam * e * std::cos(2 * pi * q.y());
    g(0, 1) = 2 * pi * e * std::sin(2 * pi * q.y());
    g(1, 0) = lam * lam / (2 * pi) * e * std::sin(2 * pi * q.y());
    g(1, 1) = lam * e * std::cos(2 * pi * q.y());
    return g;
  };
  b.velocity_laplacian = [lam, pi](const Vec2& q, double) {
    const double e = std::exp(lam * q.x());
    const double c = std::cos(2 * pi * q.y()), s = std::sin(2 * pi * q.y());
    return Vec2((4 * pi * pi - lam * lam) * e * c,
                lam / (2 * pi) * (lam * lam - 4 * pi * pi) * e * s);
  };
  b.pressure = [lam, p0](const Vec2& q, double) {
    return -0.5 * std::exp(2.0 * lam * q.x()) + p0;
  };
  b.pressure_gradient = [lam](const Vec2& q, double) {
    return Vec2(-lam * std::exp(2.0 * lam * q.x()), 0.0);
  };
  return b;
}

/// Lid-driven cavity on the unit square: u = (1,0) on the top edge (lid value
/// wins at the corners), no-slip elsewhere, f = 0. No exact solution.
inline BenchmarkCase make_cavity(double reynolds) {
  BenchmarkCase b;
  b.name = "cavity";
  b.nu = 1.0 / reynolds;
  b.domain = Rect{0.0, 0.0, 1.0, 1.0};
  b.has_exact = false;
  b.flux_correction = false;
  const double ytop = b.domain.ymax;
  b.velocity = [ytop](const Vec2& q, double) {
    return std::abs(q.y() - ytop) < 1e-12 ? Vec2(1.0, 0.0) : Vec2(0.0, 0.0);
  };
  b.forcing_override = [](const Vec2&, double) { return Vec2(0.0, 0.0); };
  return b;
}

/// f = 0, homogeneous boundary data; exact solution is zero.
inline BenchmarkCase make_zero(double nu) {
  BenchmarkCase b;
  b.name = "zero";
  b.nu = nu;
  b.domain = Rect{0.0, 0.0, 1.0, 1.0};
  auto zero2 = [](const Vec2&, double) { return Vec2(0.0, 0.0); };
  b.velocity = zero2;
  b.velocity_gradient = [](const Vec2&, double) { return Mat2(Mat2::Zero()); };
  b.velocity_laplacian = zero2;
  b.pressure = [](const Vec2&, double) { return 0.0; };
  b.pressure_gradient = zero2;
  return b;
}

/// Divergence-free quadratic velocity with linear mean-zero pressure on the
/// unit square; the classical patch-test data for the linear (Stokes) solve.
inline BenchmarkCase make_patch_quadratic(double nu) {
  BenchmarkCase b;
  b.name = "patch_quadratic";
  b.nu = nu;
  b.domain = Rect{0.0, 0.0, 1.0, 1.0};
  b.velocity = [](const Vec2& q, double) {
    return Vec2(q.x() * q.x() - 2.0 * q.x() * q.y(), q.y() * q.y() - 2.0 * q.x() * q.y());
  };
  b.velocity_gradient = [](const Vec2& q, double) {
    Mat2 g;
    g(0, 0) = 2.0 * q.x() - 2.0 * q.y();
    g(0, 1) = -2.0 * q.x();
    g(1, 0) = -2.0 * q.y();
    g(1, 1) = 2.0 * q.y() - 2.0 * q.x();
    return g;
  };
  b.velocity_laplacian = [](const Vec2&, double) { return Vec2(2.0, 2.0); };
  b.pressure = [](const Vec2& q, double) { return q.x() - 2.0 * q.y() + 0.5; };
  b.pressure_gradient = [](const Vec2&, double) { return Vec2(1.0, -2.0); };
  return b;
}

/// Constant velocity with linear mean-zero pressure; passes the full
/// nonlinear solve exactly (constants are reproduced by every projector).
inline BenchmarkCase make_patch_constant(double nu) {
  BenchmarkCase b;
  b.name = "patch_constant";
  b.nu = nu;
  b.domain = Rect{0.0, 0.0, 1.0, 1.0};
  b.velocity = [](const Vec2&, double) { return Vec2(2.0, 1.0); };
  b.velocity_gradient = [](const Vec2&, double) { return Mat2(Mat2::Zero()); };
  b.velocity_laplacian = [](const Vec2&, double) { return Vec2(0.0, 0.0); };
  b.pressure = [](const Vec2& q, double) { return q.x() - 2.0 * q.y() + 0.5; };
  b.pressure_gradient = [](const Vec2&, double) { return Vec2(1.0, -2.0); };
  return b;
}

/// Compiled-in benchmarks keyed by name; unknown names throw.
inline BenchmarkCase make_benchmark(const std::string& name, double nu) {
  if (name == "example1") return make_example1(nu);
  if (name == "example4") return make_example4(nu);
  if (name == "kovasznay") return make_kovasznay(1.0 / nu);
  if (name == "cavity") return make_cavity(1.0 / nu);
  if (name == "zero") return make_zero(nu);
  if (name == "patch_quadratic") return make_patch_quadratic(nu);
  if (name == "patch_constant") return make_patch_constant(nu);
  throw std::invalid_argument("unknown benchmark: " + name);
}

}  // namespace vemns
