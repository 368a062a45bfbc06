// Study drivers: norm sweeps over eps, ball-radius studies, residual decay,
// and the level-set figure export. These produce CSV rows, fitted scaling
// laws with verdicts, and field snapshots; the CLI is a thin shell over
// these functions and the acceptance suite calls them directly.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cdgreen/config.hpp"
#include "cdgreen/fdsolver.hpp"
#include "cdgreen/fitting.hpp"
#include "cdgreen/normsuite.hpp"

namespace cdgreen {

inline const std::vector<double>& default_parametrix_eps() {
  static const std::vector<double> v = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  return v;
}
inline const std::vector<double>& default_fd_eps() {
  static const std::vector<double> v = {0.2, 0.1, 0.05, 0.02};
  return v;
}
inline const std::vector<double>& default_residual_eps() {
  static const std::vector<double> v = {0.1, 0.05, 0.02, 0.01};
  return v;
}

template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&next, n, &fn]() {
      int i;
      while ((i = next.fetch_add(1)) < n) fn(i);
    });
  for (std::thread& th : pool) th.join();
}

struct NormRow {
  std::string quantity;
  double eps = 0.0, rho = 0.0, value = 0.0, error_est = 0.0;
  long long cells = 0;
  double wall_ms = 0.0;
};

inline std::vector<NormRow> rows_from(const NormReport& rep) {
  std::vector<NormRow> rows;
  rows.reserve(rep.entries.size());
  for (const NormEntry& e : rep.entries) {
    NormRow r;
    r.quantity = to_string(e.quantity);
    r.eps = rep.eps;
    r.rho = e.rho;
    r.value = e.result.value;
    r.error_est = e.result.error_estimate;
    r.cells = e.result.cells;
    r.wall_ms = e.wall_ms;
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_csv(const std::string& path, const std::vector<NormRow>& rows) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << "quantity,eps,rho,value,error_est,cells,wall_ms\n";
  char buf[256];
  for (const NormRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%.12g,%.12g,%lld,%.3f\n", r.quantity.c_str(),
                  r.eps, r.rho, r.value, r.error_est, r.cells, r.wall_ms);
    os << buf;
  }
  if (!os) throw ConfigError("short write on " + path);
}

struct NamedFit {
  FitResult fit;
  Verdict verdict = Verdict::Inconclusive;
  bool had_errors = false;
};

inline nlohmann::json fit_to_json(const NamedFit& nf) {
  return nlohmann::json{{"model", nf.fit.model},       {"c0", nf.fit.c0},
                        {"c1", nf.fit.c1},             {"r2", nf.fit.r2},
                        {"band_ratio", nf.fit.band_ratio}, {"n", nf.fit.n},
                        {"had_errors", nf.had_errors}, {"verdict", to_string(nf.verdict)}};
}

struct SweepResult {
  std::vector<NormRow> rows;
  std::map<std::string, NamedFit> fits;
  std::vector<std::string> errors;  // per-entry integration failures
};

// Full eps sweep of the norm suite plus the scaling-law fits the sweep data
// supports. rho entries use cfg.rho_list as multiples of eps when given,
// otherwise {1/2, 1, 2, 4} * eps.
inline SweepResult run_sweep(const StudyConfig& cfg) {
  if (cfg.variant == FieldVariant::BareKernel)
    throw ConfigError("sweep: variant must be a parametrix, not the bare kernel");
  const ParametrixKind kind = to_parametrix_kind(cfg.variant);
  const std::vector<double> eps = cfg.eps_list.empty() ? default_parametrix_eps() : cfg.eps_list;
  const std::vector<double> rho_mults =
      cfg.rho_list.empty() ? std::vector<double>{0.5, 1.0, 2.0, 4.0} : cfg.rho_list;

  std::vector<NormReport> reps(eps.size());
  std::vector<std::exception_ptr> hard(eps.size());
  parallel_for(static_cast<int>(eps.size()), cfg.threads, [&](int i) {
    try {
      const ProblemSpec spec = cfg.problem(eps[i]);
      NormSuiteOptions opt;
      opt.tol = cfg.tol;
      for (double m : rho_mults) opt.rho_list.push_back(m * eps[i]);
      reps[i] = norm_suite(cfg.x, spec, kind, opt);
    } catch (...) {
      hard[i] = std::current_exception();
    }
  });
  for (const std::exception_ptr& e : hard)
    if (e) std::rethrow_exception(e);

  SweepResult out;
  for (const NormReport& rep : reps) {
    const std::vector<NormRow> rows = rows_from(rep);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    for (const NormEntry& e : rep.entries)
      if (!e.ok)
        out.errors.push_back(std::string(to_string(e.quantity)) + " eps=" +
                             std::to_string(rep.eps) + ": " + e.error);
  }

  auto gather = [&](NormQuantity q) {
    std::vector<double> e, v;
    bool bad = false;
    for (size_t i = 0; i < eps.size(); ++i) {
      const NormEntry* en = reps[i].find(q);
      if (en && en->ok) {
        e.push_back(eps[i]);
        v.push_back(en->result.value);
      } else {
        bad = true;
      }
    }
    return std::tuple<std::vector<double>, std::vector<double>, bool>(e, v, bad);
  };

  // streamwise first derivative: affine in ln(1/eps)
  {
    auto [e, v, bad] = gather(NormQuantity::DXi1L1);
    if (e.size() >= 3) {
      std::vector<double> t(e.size());
      for (size_t i = 0; i < e.size(); ++i) t[i] = std::log(1.0 / e[i]);
      NamedFit nf;
      nf.fit = fit_affine(t, v);
      nf.had_errors = bad;
      nf.verdict = judge(nf.fit, 0.98, bad, 0.0);
      out.fits["dxi1_log"] = nf;
    }
  }
  // transverse first derivatives and source derivatives: eps^{-1/2} band
  for (const auto& [q, name] :
       std::vector<std::pair<NormQuantity, std::string>>{{NormQuantity::DXi2L1, "dxi2_sqrt"},
                                                         {NormQuantity::DXi3L1, "dxi3_sqrt"},
                                                         {NormQuantity::DX2L1, "dx2_sqrt"},
                                                         {NormQuantity::DX3L1, "dx3_sqrt"}}) {
    auto [e, v, bad] = gather(q);
    if (e.size() >= 3) {
      std::vector<double> scaled(v.size());
      for (size_t i = 0; i < v.size(); ++i) scaled[i] = v[i] * std::sqrt(e[i]);
      NamedFit nf;
      nf.fit = fit_const(scaled);
      nf.had_errors = bad;
      nf.verdict = judge(nf.fit, 0.0, bad);
      out.fits[name] = nf;
    }
  }
  // value norms: bounded
  for (const auto& [q, name] : std::vector<std::pair<NormQuantity, std::string>>{
           {NormQuantity::GL1, "G_const"}, {NormQuantity::CrossplaneSup, "crossplane_const"}}) {
    auto [e, v, bad] = gather(q);
    if (e.size() >= 3) {
      NamedFit nf;
      nf.fit = fit_const(v);
      nf.had_errors = bad;
      nf.verdict = judge(nf.fit, 0.0, bad);
      out.fits[name] = nf;
    }
  }
  // excluded-ball second derivatives over the (eps, rho) grid
  for (const auto& [q, name, lneps] : std::vector<std::tuple<NormQuantity, std::string, bool>>{
           {NormQuantity::D2Xi1L1Excl, "d2xi1_ball", false},
           {NormQuantity::D2Xi2L1Excl, "d2xi2_ball", true},
           {NormQuantity::D2Xi3L1Excl, "d2xi3_ball", true}}) {
    std::vector<double> ge, gr, gv;
    bool bad = false;
    for (size_t i = 0; i < eps.size(); ++i)
      for (double m : rho_mults) {
        const NormEntry* en = reps[i].find(q, m * eps[i]);
        if (en && en->ok) {
          ge.push_back(eps[i]);
          gr.push_back(en->rho);
          gv.push_back(en->result.value);
        } else {
          bad = true;
        }
      }
    if (gv.size() >= 6) {
      NamedFit nf;
      nf.fit = fit_ball_log(ge, gr, gv, lneps);
      nf.had_errors = bad;
      nf.verdict = judge(nf.fit, 0.95, bad, 0.0);
      out.fits[name] = nf;
    }
  }
  return out;
}

struct BallResult {
  std::vector<NormRow> rows;
  std::map<std::string, NamedFit> fits;  // keyed two_regime_eps=<eps>
  std::vector<std::string> errors;
};

// Ball-gradient study: ||G||_{1,1;B(x,rho)} against rho at each eps, with the
// two-regime fit and its knee. cfg.rho_list holds multiples of eps
// (default {1/4,1/2,1,3/2,2,3,4,6,8,16}).
inline BallResult run_ball(const StudyConfig& cfg) {
  if (cfg.variant == FieldVariant::BareKernel)
    throw ConfigError("ball: variant must be a parametrix, not the bare kernel");
  const ParametrixKind kind = to_parametrix_kind(cfg.variant);
  std::vector<double> eps = cfg.eps_list;
  if (eps.empty()) {
    for (double e : default_parametrix_eps())
      if (e <= cfg.lower_eps_max) eps.push_back(e);
  }
  if (eps.empty()) throw ConfigError("ball: no eps at or below lower_eps_max");
  const std::vector<double> rho_mults =
      cfg.rho_list.empty() ? std::vector<double>{0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0}
                           : cfg.rho_list;

  BallResult out;
  std::vector<NormReport> reps(eps.size());
  std::vector<std::exception_ptr> hard(eps.size());
  parallel_for(static_cast<int>(eps.size()), cfg.threads, [&](int i) {
    try {
      const ProblemSpec spec = cfg.problem(eps[i]);
      NormSuiteOptions opt;
      opt.tol = cfg.tol;
      opt.with_first = opt.with_second = opt.with_value = false;
      opt.with_x_derivs = opt.with_crossplane = false;
      for (double m : rho_mults) opt.rho_list.push_back(m * eps[i]);
      reps[i] = norm_suite(cfg.x, spec, kind, opt);
    } catch (...) {
      hard[i] = std::current_exception();
    }
  });
  for (const std::exception_ptr& e : hard)
    if (e) std::rethrow_exception(e);

  for (size_t i = 0; i < eps.size(); ++i) {
    const std::vector<NormRow> rows = rows_from(reps[i]);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    std::vector<double> r, v;
    bool bad = false;
    for (const NormEntry& e : reps[i].entries) {
      if (e.quantity != NormQuantity::BallW11) continue;
      if (e.ok) {
        r.push_back(e.rho);
        v.push_back(e.result.value);
      } else {
        bad = true;
        out.errors.push_back("ball_W11 eps=" + std::to_string(eps[i]) + ": " + e.error);
      }
    }
    if (r.size() >= 3) {
      NamedFit nf;
      nf.fit = fit_two_regime(r, v, eps[i]);
      nf.had_errors = bad;
      nf.verdict = judge(nf.fit, 0.95, bad, 0.0);
      char key[64];
      std::snprintf(key, sizeof key, "two_regime_eps=%g", eps[i]);
      out.fits[key] = nf;
    }
  }
  return out;
}

struct ResidualResult {
  std::vector<NormRow> rows;
  std::map<std::string, NamedFit> fits;
  std::vector<std::string> errors;
};

// L1 norms of the cutoff-commutator residuals against eps; their decay is
// exponential in 1/eps, so ln(value) is fitted affinely in 1/eps.
inline ResidualResult run_residual(const StudyConfig& cfg) {
  const std::vector<double> eps = cfg.eps_list.empty() ? default_residual_eps() : cfg.eps_list;
  ResidualResult out;
  struct Series {
    std::vector<double> e, v;
    bool bad = false;
  };
  std::map<std::string, Series> series;
  std::vector<std::vector<NormRow>> rows(eps.size());
  std::vector<std::exception_ptr> hard(eps.size());
  std::vector<std::map<std::string, std::pair<double, std::string>>> vals(eps.size());

  parallel_for(static_cast<int>(eps.size()), cfg.threads, [&](int i) {
    try {
      const ProblemSpec spec = cfg.problem(eps[i]);
      for (ResidualKind kind : {ResidualKind::Bar, ResidualKind::Tilde}) {
        const char* name = (kind == ResidualKind::Bar) ? "phi_bar_L1" : "phi_tilde_L1";
        NormRow row;
        row.quantity = name;
        row.eps = eps[i];
        const auto t0 = std::chrono::steady_clock::now();
        try {
          // bar: defect in the observation variable at fixed source x;
          // tilde: defect in the source variable at fixed observation point
          auto field = [&cfg, &spec, kind](const Vec3& v) {
            return kind == ResidualKind::Bar ? residual_phi(cfg.x, v, spec, kind)
                                             : residual_phi(v, cfg.x, spec, kind);
          };
          const QuadResult r = l1_norm(field, Region::cube(), cfg.x, eps[i], cfg.tol);
          row.value = r.value;
          row.error_est = r.error_estimate;
          row.cells = r.cells;
          vals[i][name] = {r.value, ""};
        } catch (const std::exception& ex) {
          vals[i][name] = {0.0, ex.what()};
        }
        row.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        rows[i].push_back(row);
      }
    } catch (...) {
      hard[i] = std::current_exception();
    }
  });
  for (const std::exception_ptr& e : hard)
    if (e) std::rethrow_exception(e);

  for (size_t i = 0; i < eps.size(); ++i) {
    out.rows.insert(out.rows.end(), rows[i].begin(), rows[i].end());
    for (const auto& [name, pv] : vals[i]) {
      Series& s = series[name];
      if (!pv.second.empty()) {
        s.bad = true;
        out.errors.push_back(name + " eps=" + std::to_string(eps[i]) + ": " + pv.second);
      } else if (pv.first > 0.0) {
        s.e.push_back(eps[i]);
        s.v.push_back(pv.first);
      } else {
        s.bad = true;  // residual vanished identically; nothing to fit
      }
    }
  }
  for (const auto& [name, s] : series) {
    if (s.e.size() < 3) continue;
    std::vector<double> t(s.e.size()), ly(s.e.size());
    for (size_t i = 0; i < s.e.size(); ++i) {
      t[i] = 1.0 / s.e[i];
      ly[i] = std::log(s.v[i]);
    }
    NamedFit nf;
    nf.fit = fit_affine(t, ly);
    nf.fit.model = "log_linear_inv_eps";
    nf.had_errors = s.bad;
    // decay: slope in 1/eps must be negative and the fit tight
    const bool ok = !s.bad && nf.fit.c0 < 0.0 && nf.fit.r2 >= 0.99;
    nf.verdict = s.bad ? Verdict::Inconclusive
                       : (ok ? Verdict::Consistent : Verdict::Inconsistent);
    out.fits[name == "phi_bar_L1" ? "phi_bar_decay" : "phi_tilde_decay"] = nf;
  }
  return out;
}

// Sample grid for the figure export: geometric growth away from the source
// with floor eps/4 and cap 0.01, so the source-scale structure and the far
// field are both represented.
inline std::vector<double> graded_axis(double center, double eps) {
  std::vector<double> nodes{0.0, 1.0, center};
  for (int dir : {-1, 1}) {
    double step = 0.25 * eps, pos = center;
    while (true) {
      pos += dir * step;
      if (pos <= 1e-9 || pos >= 1.0 - 1e-9) break;
      nodes.push_back(pos);
      step = std::min(1.25 * step, 0.01);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double a, double b) { return b - a < 1e-12; }),
              nodes.end());
  return nodes;
}

struct FigureLevelRow {
  double level = 0.0;
  long long count = 0;           // grid nodes at or above the level
  double downstream = 0.0;       // max xi1 - x1 over the level set
  double upstream = 0.0;         // max x1 - xi1
  double half_width_2 = 0.0;     // max |xi2 - x2|
  double half_width_3 = 0.0;
};

struct FigureResult {
  double eps = 0.0;
  Vec3 x;
  TensorMesh grid;
  std::vector<double> values;
  std::vector<FigureLevelRow> levels;
  std::string vtk_path, cdgb_path, json_path;
};

inline FigureResult run_figure(const StudyConfig& cfg) {
  if (cfg.variant == FieldVariant::BareKernel)
    throw ConfigError("figure: variant must be a parametrix, not the bare kernel");
  const ParametrixKind kind = to_parametrix_kind(cfg.variant);
  FigureResult out;
  out.eps = cfg.eps_list.empty() ? 0.01 : cfg.eps_list[0];
  out.x = cfg.x;
  const ProblemSpec spec = cfg.problem(out.eps);
  out.grid.nodes[0] = graded_axis(out.x.x, out.eps);
  out.grid.nodes[1] = graded_axis(out.x.y, out.eps);
  out.grid.nodes[2] = graded_axis(out.x.z, out.eps);
  const int n0 = out.grid.n(0), n1 = out.grid.n(1), n2 = out.grid.n(2);
  out.values.assign(out.grid.total_nodes(), 0.0);

  parallel_for(n0, cfg.threads, [&](int i) {
    for (int j = 0; j < n1; ++j)
      for (int k = 0; k < n2; ++k) {
        const Vec3 xi = out.grid.point(i, j, k);
        double v = 0.0;
        try {
          v = eval_parametrix(out.x, xi, spec, kind).value;
        } catch (const SingularityError&) {
          v = std::numeric_limits<double>::infinity();  // grid node hit the source
        }
        out.values[out.grid.index(i, j, k)] = v;
      }
  });

  for (double level : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0}) {
    FigureLevelRow row;
    row.level = level;
    for (int i = 0; i < n0; ++i)
      for (int j = 0; j < n1; ++j)
        for (int k = 0; k < n2; ++k) {
          if (out.values[out.grid.index(i, j, k)] < level) continue;
          ++row.count;
          const Vec3 p = out.grid.point(i, j, k);
          row.downstream = std::max(row.downstream, p.x - out.x.x);
          row.upstream = std::max(row.upstream, out.x.x - p.x);
          row.half_width_2 = std::max(row.half_width_2, std::abs(p.y - out.x.y));
          row.half_width_3 = std::max(row.half_width_3, std::abs(p.z - out.x.z));
        }
    out.levels.push_back(row);
  }

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  char stem[128];
  std::snprintf(stem, sizeof stem, "figure_eps%g", out.eps);
  out.vtk_path = (fs::path(cfg.out_dir) / (std::string(stem) + ".vtk")).string();
  out.cdgb_path = (fs::path(cfg.out_dir) / (std::string(stem) + ".cdgb")).string();
  out.json_path = (fs::path(cfg.out_dir) / (std::string(stem) + "_levels.json")).string();

  std::vector<double> clean = out.values;  // exports must stay finite
  for (double& v : clean)
    if (!std::isfinite(v)) v = 0.0;
  write_vtk(out.vtk_path, out.grid, clean, "green_parametrix");
  write_cdgb(out.cdgb_path, out.grid, clean, out.eps, out.x);

  nlohmann::json j;
  j["eps"] = out.eps;
  j["x"] = {out.x.x, out.x.y, out.x.z};
  j["variant"] = to_string(cfg.variant);
  j["grid"] = {n0, n1, n2};
  j["levels"] = nlohmann::json::array();
  for (const FigureLevelRow& r : out.levels)
    j["levels"].push_back({{"level", r.level},
                           {"count", r.count},
                           {"downstream", r.downstream},
                           {"upstream", r.upstream},
                           {"half_width_2", r.half_width_2},
                           {"half_width_3", r.half_width_3}});
  std::ofstream os(out.json_path);
  if (!os) throw ConfigError("cannot write " + out.json_path);
  os << j.dump(2) << "\n";
  return out;
}

inline nlohmann::json fits_to_json(const std::map<std::string, NamedFit>& fits,
                                   const std::vector<std::string>& errors) {
  nlohmann::json j;
  j["fits"] = nlohmann::json::object();
  for (const auto& [name, nf] : fits) j["fits"][name] = fit_to_json(nf);
  j["errors"] = errors;
  return j;
}

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass() const {
    for (const VerifyCheck& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

// Fast internal consistency pass (a few seconds): kernel derivatives against
// central differences, annihilation by the frozen operator, the cross-plane
// closed form, boundary vanishing of the cube parametrices, residual support,
// and a small finite-difference solve.
inline VerifyReport run_verify() {
  VerifyReport rep;
  char buf[256];
  auto add = [&rep](const std::string& name, bool pass, const std::string& detail) {
    rep.checks.push_back({name, pass, detail});
  };

  // deterministic low-discrepancy point set on (0,1)^3, kept off the axes
  auto halton = [](int i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * (i % base);
      i /= base;
    }
    return r;
  };

  {  // kernel jet against central differences of the value
    double worst = 0.0;
    for (double eps : {1.0, 0.05}) {
      const double q = 0.7;
      for (int n = 1; n <= 20; ++n) {
        const double s = 0.3 + 3.0 * halton(n, 2);
        double c[3] = {(2.0 * halton(n, 3) - 1.0) * s, (2.0 * halton(n, 5) - 1.0) * s,
                       (2.0 * halton(n, 7) - 1.0) * s};
        if (std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) < 0.1) c[0] += 0.5;
        auto jet_at = [&](double d0, double d1, double d2) {
          HatCoords h;
          h.xi1 = c[0] + d0;
          h.xi2 = c[1] + d1;
          h.xi3 = c[2] + d2;
          h.r = std::sqrt(h.xi1 * h.xi1 + h.xi2 * h.xi2 + h.xi3 * h.xi3);
          return eval_jet(h, q, eps);
        };
        const FundamentalJet j = jet_at(0, 0, 0);
        const double h = 1e-5 * std::max(1.0, std::abs(c[0]) + std::abs(c[1]) + std::abs(c[2]));
        const double scale = std::abs(j.value) / (h * eps);  // FD noise floor
        auto rel = [&](double got, double fd, double extra_scale) {
          return std::abs(got - fd) / std::max({std::abs(fd), extra_scale * 1e-9, 1e-300});
        };
        // probes step the hat coordinates, so each difference carries a
        // factor eps relative to the physical derivative
        worst = std::max(worst, rel(j.d_xi1, (jet_at(h, 0, 0).value - jet_at(-h, 0, 0).value) / (2 * h * eps), scale));
        worst = std::max(worst, rel(j.d_xi2, (jet_at(0, h, 0).value - jet_at(0, -h, 0).value) / (2 * h * eps), scale));
        worst = std::max(worst, rel(j.d2_xi1xi1, (jet_at(h, 0, 0).d_xi1 - jet_at(-h, 0, 0).d_xi1) / (2 * h * eps), scale / h));
        worst = std::max(worst, rel(j.d2_xi2xi2, (jet_at(0, h, 0).d_xi2 - jet_at(0, -h, 0).d_xi2) / (2 * h * eps), scale / h));
      }
    }
    std::snprintf(buf, sizeof buf, "worst rel dev %.2e (limit 1e-4)", worst);
    add("kernel_derivatives", worst < 1e-4, buf);
  }

  {  // frozen operator annihilates the kernel away from the source
    double worst = 0.0;
    const double eps = 0.05, q = 0.9;
    const Vec3 x{0.45, 0.5, 0.55};
    for (int n = 1; n <= 20; ++n) {
      const Vec3 xi{halton(n, 2), halton(n, 3), halton(n, 5)};
      if (dist(x, xi) < 3.0 * eps * 1e-12) continue;
      const FrozenResidual fr = frozen_residual(x, xi, q, eps);
      if (fr.scale > 0.0) worst = std::max(worst, std::abs(fr.residual) / fr.scale);
    }
    std::snprintf(buf, sizeof buf, "worst rel residual %.2e (limit 1e-8)", worst);
    add("frozen_annihilation", worst < 1e-8, buf);
  }

  {  // plane integral of the kernel against the closed form
    const ProblemSpec spec = make_preset("const", 0.1);
    const Vec3 x{0.3, 0.5, 0.5};
    const double q = 0.5 * spec.a.value(x);
    double worst = 0.0;
    bool failed = false;
    std::string err;
    for (double xi1 : {0.5, 0.15}) {
      try {
        const QuadResult r = crossplane_integral(x, xi1, spec, FieldVariant::BareKernel, 1e-7);
        const double s = (xi1 - x.x) / spec.eps;
        const double exact = std::exp(q * (s - std::abs(s))) / (2.0 * q);
        worst = std::max(worst, std::abs(r.value - exact) / exact);
      } catch (const std::exception& ex) {
        failed = true;
        err = ex.what();
      }
    }
    if (failed)
      std::snprintf(buf, sizeof buf, "integration failed: %s", err.c_str());
    else
      std::snprintf(buf, sizeof buf, "worst rel dev %.2e (limit 1e-5)", worst);
    add("crossplane_closed_form", !failed && worst < 1e-5, buf);
  }

  {  // cube parametrices vanish on the boundary of their own variable:
     // xi-faces for the bar construction, x-faces for the tilde one
    const ProblemSpec spec = make_preset("smooth1", 0.02);
    const Vec3 inner{0.4, 0.55, 0.5}, probe{0.4 + 2.0 * spec.eps, 0.55, 0.5};
    const double ref =
        std::abs(eval_parametrix(inner, probe, spec, ParametrixKind::BarCube).value);
    double worst = 0.0;
    for (int face = 0; face < 6; ++face)
      for (int n = 1; n <= 16; ++n) {
        Vec3 p{halton(n, 2), halton(n, 3), halton(n, 5)};
        p[face / 2] = (face % 2) ? 1.0 : 0.0;
        worst = std::max(
            worst, std::abs(eval_parametrix(inner, p, spec, ParametrixKind::BarCube).value));
        worst = std::max(
            worst, std::abs(eval_parametrix(p, probe, spec, ParametrixKind::TildeCube).value));
      }
    std::snprintf(buf, sizeof buf, "worst |G| on faces %.2e vs interior %.2e", worst, ref);
    add("boundary_vanishing", worst <= 1e-10 * ref, buf);
  }

  {  // residual supported only in the cutoff transition band
    const ProblemSpec spec = make_preset("const", 0.1);
    const Vec3 x{0.45, 0.5, 0.5};
    const double inside = std::abs(residual_phi(x, {0.25, 0.5, 0.5}, spec, ResidualKind::Bar));
    double outside = 0.0;
    for (double xi1 : {0.05, 0.15, 0.4, 0.6, 0.95})
      outside = std::max(outside, std::abs(residual_phi(x, {xi1, 0.5, 0.5}, spec, ResidualKind::Bar)));
    std::snprintf(buf, sizeof buf, "band value %.2e, outside %.2e", inside, outside);
    add("residual_support", inside > 0.0 && outside == 0.0, buf);
  }

  {  // small finite-difference solve: convergence and positivity
    try {
      const ProblemSpec spec = make_preset("const", 0.2);
      const TensorMesh mesh = layered_mesh(16, {0.5, 0.5, 0.5}, spec.eps, spec.alpha);
      const SolveResult sol = solve_green(mesh, spec, {0.5, 0.5, 0.5}, OperatorSide::Adjoint);
      double mn = 0.0, mx = 0.0;
      for (double v : sol.field) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      std::snprintf(buf, sizeof buf, "residual %.2e, iters %d, range [%.2e, %.2e]", sol.residual,
                    sol.iterations, mn, mx);
      add("fd_small_solve", sol.residual < 1e-8 && mn >= 0.0 && mx > 0.0, buf);
    } catch (const std::exception& ex) {
      add("fd_small_solve", false, ex.what());
    }
  }

  return rep;
}

}  // namespace cdgreen
