// Command-line front end: meshes, benchmarks, the Arrow-Hurwicz solver, and
// file exports. Subcommands: solve, convergence, flow.

#include "vemns/vemns.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace vemns;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitNumerical = 4;

struct RunConfig {
  std::string command;
  std::string mesh = "voronoi:64";
  std::string benchmark = "example1";
  double nu = 1.0;
  double rho = 0.0;    // 0: recipe default
  double alpha = 0.0;  // 0: recipe default
  double tol = 0.0;    // 0: resolution^5 default
  int max_iter = 2000;
  double dt = 0.0;     // 0: resolution^2 in unsteady mode
  double t_end = 0.5;
  double reynolds = 0.0;  // flow presets; 0 = preset default
  std::string out;
  bool export_matrices = false;
  bool dump_local = false;
  bool export_field = false;
  int grid = 64;
  unsigned long long seed = 1;
  int lloyd = 100;
  bool unsteady = false;
  std::vector<int> family = {32, 64, 128, 256, 512};
};

json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["mesh"] = c.mesh;
  j["benchmark"] = c.benchmark;
  j["nu"] = c.nu;
  j["rho"] = c.rho;
  j["alpha"] = c.alpha;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["dt"] = c.dt;
  j["t_end"] = c.t_end;
  j["reynolds"] = c.reynolds;
  j["out"] = c.out;
  j["export_matrices"] = c.export_matrices;
  j["dump_local"] = c.dump_local;
  j["export_field"] = c.export_field;
  j["grid"] = c.grid;
  j["seed"] = c.seed;
  j["lloyd"] = c.lloyd;
  j["unsteady"] = c.unsteady;
  j["family"] = c.family;
  return j;
}

void config_from_json(const json& j, RunConfig& c) {
  auto get = [&](const char* k, auto& field) {
    if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
  };
  get("mesh", c.mesh);
  get("benchmark", c.benchmark);
  get("nu", c.nu);
  get("rho", c.rho);
  get("alpha", c.alpha);
  get("tol", c.tol);
  get("max_iter", c.max_iter);
  get("dt", c.dt);
  get("t_end", c.t_end);
  get("reynolds", c.reynolds);
  get("out", c.out);
  get("export_matrices", c.export_matrices);
  get("dump_local", c.dump_local);
  get("export_field", c.export_field);
  get("grid", c.grid);
  get("seed", c.seed);
  get("lloyd", c.lloyd);
  get("unsteady", c.unsteady);
  get("family", c.family);
}

/// Mesh source: "quad:NxM", "tri:NxM", "voronoi:N", or a JSON file path.
PolygonalMesh make_mesh(const std::string& spec, const Rect& domain, unsigned long long seed,
                        int lloyd, int override_cells = 0) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if (kind == "quad" || kind == "tri") {
    if (colon == std::string::npos) throw std::invalid_argument("mesh spec needs :NxM");
    const std::string dims = spec.substr(colon + 1);
    const auto x = dims.find('x');
    const int nx = std::stoi(dims.substr(0, x));
    const int ny = x == std::string::npos ? nx : std::stoi(dims.substr(x + 1));
    return generate_structured(nx, ny,
                               kind == "quad" ? GeneratorSpec::Kind::Quad
                                              : GeneratorSpec::Kind::Triangle,
                               domain);
  }
  if (kind == "voronoi") {
    if (colon == std::string::npos) throw std::invalid_argument("mesh spec needs :N");
    const int n = override_cells > 0 ? override_cells : std::stoi(spec.substr(colon + 1));
    return generate_voronoi(domain, n, lloyd, seed);
  }
  return load_mesh(spec);  // treat as a file path
}

struct PreparedRun {
  BenchmarkCase bench;
  GlobalSystem sys;
  AHParams params;
};

PreparedRun prepare(const RunConfig& c, const PolygonalMesh& mesh) {
  PreparedRun run{make_benchmark(c.benchmark, c.nu), assemble_global(mesh), {}};
  set_dirichlet(run.sys, [&](const Vec2& x) { return run.bench.boundary(x); },
                run.bench.flux_correction);
  assemble_load(run.sys, [&](const Vec2& x) { return run.bench.forcing(x); });
  run.params = AHParams::defaults_for(c.nu, run.sys.resolution());
  if (c.rho > 0) run.params.rho = c.rho;
  if (c.alpha > 0) run.params.alpha = c.alpha;
  if (c.tol > 0) run.params.tol = c.tol;
  run.params.max_iter = c.max_iter;
  return run;
}

std::filesystem::path ensure_out_dir(const RunConfig& c) {
  std::filesystem::path dir = c.out.empty() ? std::filesystem::path("out") : std::filesystem::path(c.out);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_manifest(const RunConfig& c, const std::filesystem::path& dir,
                    const json& extra = {}) {
  json j;
  j["version"] = kVersion;
  j["config"] = config_to_json(c);
  if (!extra.is_null()) j["run"] = extra;
  std::ofstream out(dir / "manifest.json");
  out << j.dump(1) << "\n";
}

void export_run_artifacts(const RunConfig& c, const PreparedRun& run, const AHResult& res,
                          const std::filesystem::path& dir) {
  write_telemetry_csv(res.telemetry, (dir / "telemetry.csv").string());
  {
    std::ofstream out(dir / "solution.json");
    out << solution_to_json(res).dump() << "\n";
  }
  if (c.export_matrices) {
    write_matrix_market(run.sys.A, (dir / "A.mtx").string());
    write_matrix_market(run.sys.B, (dir / "B.mtx").string());
    SpMat C(run.sys.n_pressure(), run.sys.n_pressure());
    std::vector<Triplet> t;
    for (std::size_t cblk = 0; cblk < run.sys.C_blocks.size(); ++cblk)
      for (int i = 0; i < 3; ++i)
        for (int jj = 0; jj < 3; ++jj)
          t.emplace_back(3 * cblk + i, 3 * cblk + jj, run.sys.C_blocks[cblk](i, jj));
    C.setFromTriplets(t.begin(), t.end());
    write_matrix_market(C, (dir / "C.mtx").string());
  }
  if (c.dump_local) {
    json all = json::array();
    for (int cell = 0; cell < run.sys.mesh.n_cells(); ++cell)
      all.push_back(local_matrices_json(build_local_projectors(run.sys.mesh, cell)));
    std::ofstream out(dir / "local_matrices.json");
    out << all.dump() << "\n";
  }
  if (c.export_field) {
    const auto grid = sample_velocity_grid(run.sys, res.state.chi, c.grid, c.grid);
    write_grid_field_csv(grid, (dir / "field.csv").string());
    write_grid_field_vtk(grid, (dir / "field.vtk").string());
  }
}

int cmd_solve(const RunConfig& c) {
  const auto bench = make_benchmark(c.benchmark, c.nu);
  const auto mesh = make_mesh(c.mesh, bench.domain, c.seed, c.lloyd);
  auto run = prepare(c, mesh);
  const auto dir = ensure_out_dir(c);
  const auto res = ah_solve(run.sys, run.params);

  std::printf("mesh: %d cells, %d vertices, h = %.6g, resolution = %.6g\n", mesh.n_cells(),
              mesh.n_vertices(), run.sys.h_max, run.sys.resolution());
  std::printf("dofs: velocity %d (free %d), pressure %d\n", run.sys.n_velocity(),
              run.sys.dofs.n_free, run.sys.n_pressure());
  std::printf("params: nu=%g rho=%g alpha=%g tol=%.3g\n", run.params.nu, run.params.rho,
              run.params.alpha, run.params.tol);
  std::printf("iterations: %d (%s), |dp| = %.3g, |div u| = %.3g, lambda = %.3g\n",
              res.iterations, res.converged ? "converged" : "NOT converged", res.last_dp,
              res.divergence_norm, res.state.lambda);

  json extra;
  extra["iterations"] = res.iterations;
  extra["converged"] = res.converged;
  if (run.bench.has_exact) {
    const double eu = h1_velocity_error(run.sys, res.state.chi, [&](const Vec2& x) {
      return run.bench.velocity_gradient(x, 0);
    });
    const double ep = l2_pressure_error(run.sys, res.state.p, [&](const Vec2& x) {
      return run.bench.pressure(x, 0);
    });
    std::printf("errors: ErruH1 = %.6e, ErrpL2 = %.6e\n", eu, ep);
    extra["erruH1"] = eu;
    extra["errpL2"] = ep;
    write_error_table_csv({{run.sys.n_velocity(), run.sys.h_max, eu, ep, res.iterations}},
                          (dir / "error_table.csv").string());
  }
  export_run_artifacts(c, run, res, dir);
  write_manifest(c, dir, extra);
  return res.converged ? kExitOk : kExitNonConvergence;
}

int cmd_convergence(const RunConfig& c) {
  const auto dir = ensure_out_dir(c);
  std::vector<ErrorTableRow> rows;
  std::vector<double> hs, eus, eps;
  const auto flush = [&] {
    write_error_table_csv(rows, (dir / "error_table.csv").string());
  };
  for (const int n : c.family) {
    const auto bench = make_benchmark(c.benchmark, c.nu);
    const auto mesh = make_mesh(c.mesh, bench.domain, c.seed, c.lloyd, n);
    auto run = prepare(c, mesh);
    int iterations = 0;
    double eu = 0, ep = 0;
    try {
      if (c.unsteady) {
        if (!run.bench.unsteady)
          throw std::invalid_argument("benchmark " + c.benchmark + " has no time dependence");
        const double res_h = run.sys.resolution();
        const double dt = c.dt > 0 ? c.dt : res_h * res_h;
        // DoF interpolation of the exact initial state
        Eigen::VectorXd chi0 = Eigen::VectorXd::Zero(run.sys.n_velocity());
        for (int v = 0; v < mesh.n_vertices(); ++v) {
          const Vec2 u0 = run.bench.velocity(mesh.vertices[v], 0.0);
          chi0(run.sys.dofs.vertex_dof(0, v)) = u0.x();
          chi0(run.sys.dofs.vertex_dof(1, v)) = u0.y();
        }
        for (int e = 0; e < mesh.n_edges(); ++e) {
          const Vec2 u0 = run.bench.velocity(mesh.edges[e].midpoint, 0.0);
          chi0(run.sys.dofs.midpoint_dof(0, e)) = u0.x();
          chi0(run.sys.dofs.midpoint_dof(1, e)) = u0.y();
        }
        const auto traj = backward_euler_solve(
            run.sys, run.params, dt, c.t_end, chi0,
            [&](const Vec2& x, double t) { return run.bench.forcing(x, t); },
            [&](const Vec2& x, double t) { return run.bench.boundary(x, t); },
            run.bench.flux_correction);
        const auto& last = traj.back();
        for (const auto& rec : traj)
          if (!rec.result.converged)
            throw NumericalError("time step at t = " + std::to_string(rec.t) +
                                 " did not converge");
        const double t_final = last.t;
        eu = h1_velocity_error(run.sys, last.result.state.chi, [&](const Vec2& x) {
          return run.bench.velocity_gradient(x, t_final);
        });
        ep = l2_pressure_error(run.sys, last.result.state.p, [&](const Vec2& x) {
          return run.bench.pressure(x, t_final);
        });
        iterations = last.result.iterations;
      } else {
        const auto res = ah_solve(run.sys, run.params);
        if (!res.converged) throw NumericalError("member run did not converge");
        eu = h1_velocity_error(run.sys, res.state.chi, [&](const Vec2& x) {
          return run.bench.velocity_gradient(x, 0);
        });
        ep = l2_pressure_error(run.sys, res.state.p, [&](const Vec2& x) {
          return run.bench.pressure(x, 0);
        });
        iterations = res.iterations;
      }
    } catch (const std::exception& e) {
      flush();
      std::fprintf(stderr, "convergence: member %d failed: %s (partial table flushed)\n", n,
                   e.what());
      return kExitNonConvergence;
    }
    rows.push_back({run.sys.n_velocity(), run.sys.h_max, eu, ep, iterations});
    hs.push_back(run.sys.h_max);
    eus.push_back(eu);
    eps.push_back(ep);
    std::printf("n=%5d  dof=%6d  h=%.4e  erruH1=%.6e  errpL2=%.6e  iters=%d\n", n,
                run.sys.n_velocity(), run.sys.h_max, eu, ep, iterations);
  }
  flush();
  json extra;
  if (hs.size() >= 2) {
    const double su = fit_rate(hs, eus), sp = fit_rate(hs, eps);
    std::printf("fitted rates: ErruH1 %.3f, ErrpL2 %.3f\n", su, sp);
    extra["rate_u"] = su;
    extra["rate_p"] = sp;
  } else {
    std::printf("fitted rates: not applicable (single-mesh family)\n");
  }
  write_manifest(c, dir, extra);
  return kExitOk;
}

int cmd_flow(const RunConfig& c, const std::string& preset) {
  RunConfig cfg = c;
  if (preset == "kovasznay") {
    cfg.benchmark = "kovasznay";
    const double re = c.reynolds > 0 ? c.reynolds : 40.0;
    cfg.nu = 1.0 / re;
    if (cfg.mesh.empty() || cfg.mesh == "voronoi:64") cfg.mesh = "voronoi:1000";
  } else if (preset == "cavity") {
    cfg.benchmark = "cavity";
    const double re = c.reynolds > 0 ? c.reynolds : 100.0;
    cfg.nu = 1.0 / re;
    if (cfg.mesh.empty() || cfg.mesh == "voronoi:64") cfg.mesh = "tri:64x64";
  } else {
    throw std::invalid_argument("unknown flow preset: " + preset);
  }

  const auto bench = make_benchmark(cfg.benchmark, cfg.nu);
  const auto mesh = make_mesh(cfg.mesh, bench.domain, cfg.seed, cfg.lloyd);
  auto run = prepare(cfg, mesh);
  if (preset == "cavity" && cfg.rho <= 0 && cfg.alpha <= 0) {
    const auto preset_params = AHParams::cavity_preset(1.0 / cfg.nu, run.sys.resolution());
    run.params.rho = preset_params.rho;
    run.params.alpha = preset_params.alpha;
  }
  const auto dir = ensure_out_dir(cfg);
  const auto res = ah_solve(run.sys, run.params);
  std::printf("%s: %d cells, %d velocity dofs, %d iterations (%s)\n", preset.c_str(),
              mesh.n_cells(), run.sys.n_velocity(), res.iterations,
              res.converged ? "converged" : "NOT converged");

  const auto grid = sample_velocity_grid(run.sys, res.state.chi, cfg.grid, cfg.grid);
  write_grid_field_csv(grid, (dir / "field.csv").string());
  write_grid_field_vtk(grid, (dir / "field.vtk").string());
  write_telemetry_csv(res.telemetry, (dir / "telemetry.csv").string());

  json extra;
  extra["iterations"] = res.iterations;
  extra["converged"] = res.converged;
  if (run.bench.has_exact) {
    // pointwise field check away from the boundary
    double num = 0, den = 0;
    for (const auto& s : grid.samples) {
      if (!s.value) continue;
      const Rect& bb = grid.bounds;
      const double margin = std::min(bb.width(), bb.height()) / cfg.grid;
      if (s.position.x() < bb.xmin + margin || s.position.x() > bb.xmax - margin ||
          s.position.y() < bb.ymin + margin || s.position.y() > bb.ymax - margin)
        continue;
      const double exact = run.bench.velocity(s.position, 0).x();
      num += (s.value->x() - exact) * (s.value->x() - exact);
      den += exact * exact;
    }
    const double rel = std::sqrt(num / den);
    std::printf("interior-grid u1 relative l2 error: %.4e\n", rel);
    extra["u1_interior_rel_l2"] = rel;
  }
  write_manifest(cfg, dir, extra);
  export_run_artifacts(cfg, run, res, dir);
  return res.converged ? kExitOk : kExitNonConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divergence-free virtual element Navier-Stokes solver (Arrow-Hurwicz)"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::string flow_preset;

  // pre-scan for --config so command-line flags override file values
  for (int i = 1; i < argc - 1; ++i)
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::fprintf(stderr, "cannot open config file: %s\n", config_path.c_str());
      return kExitInput;
    }
    try {
      json j;
      in >> j;
      config_from_json(j, cfg);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "config parse failure: %s\n", e.what());
      return kExitInput;
    }
  }

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("--mesh", cfg.mesh, "mesh source: quad:NxM | tri:NxM | voronoi:N | file.json");
    sub->add_option("--nu", cfg.nu, "viscosity");
    sub->add_option("--rho", cfg.rho, "velocity relaxation (default 1/(2 nu))");
    sub->add_option("--alpha", cfg.alpha, "pressure relaxation (default rho^2)");
    sub->add_option("--tol", cfg.tol, "pressure-increment stopping tolerance (L2 norm)");
    sub->add_option("--max-iter", cfg.max_iter, "iteration cap");
    sub->add_option("--out", cfg.out, "output directory (default ./out)");
    sub->add_option("--seed", cfg.seed, "voronoi seed");
    sub->add_option("--lloyd", cfg.lloyd, "lloyd relaxation sweeps");
    sub->add_option("--grid", cfg.grid, "sampling grid resolution");
    sub->add_flag("--export-matrices", cfg.export_matrices, "write A, B, C in Matrix Market form");
    sub->add_flag("--dump-local", cfg.dump_local, "dump per-element local matrices as JSON");
    sub->add_flag("--export-field", cfg.export_field, "write sampled velocity grid (csv + vtk)");
  };

  auto* solve = app.add_subcommand("solve", "assemble, iterate, export");
  solve->add_option("--benchmark", cfg.benchmark, "benchmark name");
  add_common(solve);

  auto* conv = app.add_subcommand("convergence", "mesh-family study with fitted rates");
  conv->add_option("--benchmark", cfg.benchmark, "benchmark name");
  conv->add_option("--family", cfg.family, "cell counts of the voronoi family");
  conv->add_flag("--unsteady", cfg.unsteady, "backward-Euler mode with dt = h^2");
  conv->add_option("--dt", cfg.dt, "time step (default resolution^2)");
  conv->add_option("--t-end", cfg.t_end, "final time");
  add_common(conv);

  auto* flow = app.add_subcommand("flow", "kovasznay / cavity presets");
  flow->add_option("preset", flow_preset, "kovasznay | cavity")->required();
  flow->add_option("--re", cfg.reynolds, "Reynolds number");
  add_common(flow);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      cfg.command = "solve";
      return cmd_solve(cfg);
    }
    if (conv->parsed()) {
      cfg.command = "convergence";
      return cmd_convergence(cfg);
    }
    cfg.command = "flow " + flow_preset;
    return cmd_flow(cfg, flow_preset);
  } catch (const vemns::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}
