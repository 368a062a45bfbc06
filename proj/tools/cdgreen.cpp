// Command-line front end. Subcommands map one-to-one onto the study drivers;
// all numerical policy lives in the headers, this file only parses options,
// routes output files, and maps failures onto exit codes:
//   0 success, 1 verification failure, 2 configuration error, 3 numerical error.
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>

#include "cdgreen/studies.hpp"

namespace fs = std::filesystem;
using namespace cdgreen;

namespace {

void print_fits(const std::map<std::string, NamedFit>& fits) {
  for (const auto& [name, nf] : fits)
    std::printf("fit %-18s %-14s c0=%-12.6g c1=%-12.6g r2=%.4f band=%.3f  %s%s\n", name.c_str(),
                nf.fit.model.c_str(), nf.fit.c0, nf.fit.c1, nf.fit.r2, nf.fit.band_ratio,
                to_string(nf.verdict), nf.had_errors ? " (partial data)" : "");
}

void write_fits_json(const std::string& path, const std::map<std::string, NamedFit>& fits,
                     const std::vector<std::string>& errors) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << fits_to_json(fits, errors).dump(2) << "\n";
}

std::string out_path(const StudyConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit parametrix toolkit for the Green's function of a singularly\n"
               "perturbed convection-diffusion operator on the unit cube."};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, variant_str, preset_str, side_str = "adjoint";
  int threads = 0, mesh_n = 0;
  double tol = 0.0;
  std::vector<double> eps_opt, rho_opt, x_opt, xi_opt;
  bool jet = false;

  app.add_option("--config", config_path, "key=value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default from config, else '.')");
  app.add_option("--threads", threads, "worker threads for the eps sweeps");
  app.add_option("--tol", tol, "relative quadrature tolerance");
  app.add_option("--eps", eps_opt, "perturbation parameter(s), comma separated")
      ->delimiter(',');
  app.add_option("--x", x_opt, "source point x1,x2,x3")->delimiter(',')->expected(3);
  app.add_option("--variant", variant_str,
                 "field variant: bare_g, bar_slab, tilde_slab, bar_cube, tilde_cube");
  app.add_option("--preset", preset_str, "coefficient preset: const or smooth1");
  app.add_option("--rho", rho_opt, "ball radii as multiples of eps, comma separated")
      ->delimiter(',');

  CLI::App* sub_eval = app.add_subcommand("eval", "evaluate the field at one observation point");
  sub_eval->add_option("--xi", xi_opt, "observation point xi1,xi2,xi3")
      ->delimiter(',')
      ->expected(3)
      ->required();
  sub_eval->add_flag("--jet", jet, "print first and second derivatives too");

  CLI::App* sub_norms =
      app.add_subcommand("norms", "integrated norm suite at a single eps, written as CSV");
  CLI::App* sub_sweep =
      app.add_subcommand("sweep", "norm suite across an eps ladder with scaling-law fits");
  CLI::App* sub_ball =
      app.add_subcommand("ball", "gradient mass of shrinking balls with two-regime fits");
  CLI::App* sub_residual =
      app.add_subcommand("residual", "L1 norms of the cutoff commutator residuals across eps");
  CLI::App* sub_solve = app.add_subcommand(
      "solve", "layer-adapted finite-difference reference solve, written as VTK and CDGB");
  sub_solve->add_option("--mesh-n", mesh_n, "nodes per axis (multiple of 8, at least 16)");
  sub_solve->add_option("--side", side_str, "adjoint (Green's function in xi) or primal");
  CLI::App* sub_figure = app.add_subcommand(
      "figure", "sample the parametrix on a source-graded grid and export level-set extents");
  CLI::App* sub_verify = app.add_subcommand("verify", "fast internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    KeyValues kv;
    if (!config_path.empty()) kv = KeyValues::parse_file(config_path);
    StudyConfig cfg = StudyConfig::from(kv);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads > 0) cfg.threads = threads;
    if (tol > 0.0) cfg.tol = tol;
    if (!eps_opt.empty()) cfg.eps_list = eps_opt;
    if (!rho_opt.empty()) cfg.rho_list = rho_opt;
    if (!x_opt.empty()) cfg.x = {x_opt[0], x_opt[1], x_opt[2]};
    if (!variant_str.empty()) cfg.variant = StudyConfig::parse_variant(variant_str);
    if (!preset_str.empty()) cfg.preset = preset_str;
    if (mesh_n > 0) cfg.mesh_n = mesh_n;
    for (double e : cfg.eps_list)
      if (!(e > 0) || e > 1.0) throw ConfigError("--eps entries must be in (0,1]");

    if (sub_eval->parsed()) {
      if (cfg.eps_list.size() != 1) throw ConfigError("eval needs exactly one --eps");
      const ProblemSpec spec = cfg.problem(cfg.eps_list[0]);
      const Vec3 xi{xi_opt[0], xi_opt[1], xi_opt[2]};
      if (cfg.variant == FieldVariant::BareKernel) {
        const double q = 0.5 * spec.a.value(cfg.x);
        const double v = eval_g(hat_coords(cfg.x, xi, spec.eps), q, spec.eps);
        std::printf("value %.12g\n", v);
      } else {
        const DerivMask mask = jet ? DerivMask::everything() : DerivMask::value_only();
        const ParametrixEval pe =
            eval_parametrix(cfg.x, xi, spec, to_parametrix_kind(cfg.variant), mask);
        std::printf("value %.12g\n", pe.value);
        if (jet) {
          std::printf("d_xi  %.12g %.12g %.12g\n", pe.d_xi.x, pe.d_xi.y, pe.d_xi.z);
          std::printf("d_x   %.12g %.12g %.12g\n", pe.d_x.x, pe.d_x.y, pe.d_x.z);
          std::printf("d2_xi %.12g %.12g %.12g (diagonal)\n", pe.d2_xi1xi1, pe.d2_xi2xi2,
                      pe.d2_xi3xi3);
          std::printf("d2_xi1xi2 %.12g  d2_xi1xi3 %.12g\n", pe.d2_xi1xi2, pe.d2_xi1xi3);
        }
        if (pe.saturated) std::printf("note: boundary weights saturated at this eps\n");
      }
      return 0;
    }

    if (sub_norms->parsed()) {
      if (cfg.eps_list.size() != 1) throw ConfigError("norms needs exactly one --eps");
      const double eps = cfg.eps_list[0];
      const ProblemSpec spec = cfg.problem(eps);
      NormSuiteOptions opt;
      opt.tol = cfg.tol;
      const std::vector<double> mults =
          cfg.rho_list.empty() ? std::vector<double>{0.5, 1.0, 2.0, 4.0} : cfg.rho_list;
      for (double m : mults) opt.rho_list.push_back(m * eps);
      const NormReport rep = norm_suite(cfg.x, spec, to_parametrix_kind(cfg.variant), opt);
      const std::vector<NormRow> rows = rows_from(rep);
      char name[64];
      std::snprintf(name, sizeof name, "norms_eps%g.csv", eps);
      const std::string path = out_path(cfg, name);
      write_csv(path, rows);
      bool any_fail = false;
      for (const NormEntry& e : rep.entries) {
        if (e.ok)
          std::printf("%-16s rho=%-10.4g %.10g  (est err %.2g, %lld cells, %.0f ms)\n",
                      to_string(e.quantity), e.rho, e.result.value, e.result.error_estimate,
                      e.result.cells, e.wall_ms);
        else {
          std::printf("%-16s rho=%-10.4g FAILED: %s\n", to_string(e.quantity), e.rho,
                      e.error.c_str());
          any_fail = true;
        }
      }
      std::printf("wrote %s\n", path.c_str());
      return any_fail ? 3 : 0;
    }

    if (sub_sweep->parsed()) {
      const SweepResult res = run_sweep(cfg);
      const std::string csv = out_path(cfg, "sweep.csv");
      write_csv(csv, res.rows);
      write_fits_json(out_path(cfg, "sweep_fits.json"), res.fits, res.errors);
      print_fits(res.fits);
      for (const std::string& e : res.errors) std::printf("warning: %s\n", e.c_str());
      std::printf("wrote %s\n", csv.c_str());
      return 0;
    }

    if (sub_ball->parsed()) {
      const BallResult res = run_ball(cfg);
      const std::string csv = out_path(cfg, "ball.csv");
      write_csv(csv, res.rows);
      write_fits_json(out_path(cfg, "ball_fits.json"), res.fits, res.errors);
      print_fits(res.fits);
      for (const std::string& e : res.errors) std::printf("warning: %s\n", e.c_str());
      std::printf("wrote %s\n", csv.c_str());
      return 0;
    }

    if (sub_residual->parsed()) {
      const ResidualResult res = run_residual(cfg);
      const std::string csv = out_path(cfg, "residual.csv");
      write_csv(csv, res.rows);
      write_fits_json(out_path(cfg, "residual_fits.json"), res.fits, res.errors);
      print_fits(res.fits);
      for (const std::string& e : res.errors) std::printf("warning: %s\n", e.c_str());
      std::printf("wrote %s\n", csv.c_str());
      return 0;
    }

    if (sub_solve->parsed()) {
      if (cfg.eps_list.size() > 1) throw ConfigError("solve takes at most one --eps");
      const double eps = cfg.eps_list.empty() ? 0.1 : cfg.eps_list[0];
      OperatorSide side;
      if (side_str == "adjoint")
        side = OperatorSide::Adjoint;
      else if (side_str == "primal")
        side = OperatorSide::Primal;
      else
        throw ConfigError("--side must be adjoint or primal");
      const ProblemSpec spec = cfg.problem(eps);
      const TensorMesh mesh = layered_mesh(cfg.mesh_n, cfg.x, eps, spec.alpha);
      const SolveResult sol = solve_green(mesh, spec, cfg.x, side);
      const DiscreteNorms dn = discrete_norms(mesh, sol.field);
      std::printf("mesh %dx%dx%d, source snapped to (%.6g, %.6g, %.6g)\n", mesh.n(0), mesh.n(1),
                  mesh.n(2), sol.source.x, sol.source.y, sol.source.z);
      std::printf("iterations %d, relative residual %.3e, clamped %d (worst %.3e)\n",
                  sol.iterations, sol.residual, sol.clamped, sol.worst_negative);
      std::printf("value_L1 %.10g\n", dn.value_L1);
      for (int a = 0; a < 3; ++a)
        std::printf("d%d_L1 %.10g (one-sided spread %.2g)\n", a + 1, dn.d1_L1[a], dn.d1_err[a]);
      char stem[96];
      std::snprintf(stem, sizeof stem, "solve_%s_eps%g_n%d", side_str.c_str(), eps, mesh.n(0));
      const std::string vtk = out_path(cfg, std::string(stem) + ".vtk");
      const std::string cdgb = out_path(cfg, std::string(stem) + ".cdgb");
      write_vtk(vtk, mesh, sol.field, "green_fd");
      write_cdgb(cdgb, mesh, sol.field, eps, sol.source);
      std::printf("wrote %s\nwrote %s\n", vtk.c_str(), cdgb.c_str());
      return 0;
    }

    if (sub_figure->parsed()) {
      const FigureResult res = run_figure(cfg);
      std::printf("grid %dx%dx%d at eps %g\n", res.grid.n(0), res.grid.n(1), res.grid.n(2),
                  res.eps);
      std::printf("%8s %10s %12s %12s %12s %12s\n", "level", "nodes", "downstream", "upstream",
                  "halfwidth2", "halfwidth3");
      for (const FigureLevelRow& r : res.levels)
        std::printf("%8g %10lld %12.6g %12.6g %12.6g %12.6g\n", r.level, r.count, r.downstream,
                    r.upstream, r.half_width_2, r.half_width_3);
      std::printf("wrote %s\nwrote %s\nwrote %s\n", res.vtk_path.c_str(), res.cdgb_path.c_str(),
                  res.json_path.c_str());
      return 0;
    }

    if (sub_verify->parsed()) {
      const VerifyReport rep = run_verify();
      for (const VerifyCheck& c : rep.checks)
        std::printf("[%s] %-24s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
      return rep.all_pass() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
