// Upwind finite differences for the convection-diffusion operator and its
// adjoint on a tensor mesh, with a matrix-free Krylov solver specialized to
// the point-source (discrete Green's function) problem.
//
// Adjoint in xi:  -eps*Lap u + a(xi) d_xi1 u + b(xi) u   (backward upwind)
// Primal in x:    -eps*Lap u - d_x1(a u) + b u           (conservative upwind)
//
// Both discretizations produce M-matrices: positive diagonal, nonpositive
// off-diagonals, nonnegative row sums; the discrete Green's function is
// therefore nonnegative at every node.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cdgreen/errors.hpp"
#include "cdgreen/mesh.hpp"
#include "cdgreen/quadrature.hpp"

namespace cdgreen {

enum class OperatorSide { Adjoint, Primal };

class FdOperator {
 public:
  FdOperator(const TensorMesh& mesh, const ProblemSpec& spec, OperatorSide side)
      : mesh_(&mesh), side_(side), n_{mesh.n(0), mesh.n(1), mesh.n(2)} {
    const double eps = spec.eps;
    for (int a = 0; a < 3; ++a) {
      cm_[a].assign(n_[a], 0.0);
      cp_[a].assign(n_[a], 0.0);
      const std::vector<double>& t = mesh.nodes[a];
      for (int i = 1; i + 1 < n_[a]; ++i) {
        const double hm = t[i] - t[i - 1], hp = t[i + 1] - t[i];
        cm_[a][i] = 2.0 * eps / ((hm + hp) * hm);
        cp_[a][i] = 2.0 * eps / ((hm + hp) * hp);
      }
    }
    const long long total = mesh.total_nodes();
    lo1_.assign(total, 0.0);
    hi1_.assign(total, 0.0);
    diag_.assign(total, 1.0);  // boundary rows stay identity
    const std::vector<double>& t1 = mesh.nodes[0];
    double min_row_sum = 1e300;
    for (int i = 1; i + 1 < n_[0]; ++i) {
      const double hm = t1[i] - t1[i - 1], hp = t1[i + 1] - t1[i];
      const double hbar = 0.5 * (hm + hp);
      for (int j = 1; j + 1 < n_[1]; ++j) {
        for (int k = 1; k + 1 < n_[2]; ++k) {
          const long long id = mesh.index(i, j, k);
          const Vec3 p = mesh.point(i, j, k);
          const double bp = spec.b.value(p);
          double lo, hi, dg =
              cm_[0][i] + cp_[0][i] + cm_[1][j] + cp_[1][j] + cm_[2][k] + cp_[2][k] + bp;
          if (side == OperatorSide::Adjoint) {
            const double conv = spec.a.value(p) / hm;
            lo = -(cm_[0][i] + conv);
            hi = -cp_[0][i];
            dg += conv;
          } else {
            const Vec3 pm{0.5 * (t1[i - 1] + t1[i]), p.y, p.z};
            const Vec3 pp{0.5 * (t1[i] + t1[i + 1]), p.y, p.z};
            const double am = spec.a.value(pm), ap = spec.a.value(pp);
            lo = -cm_[0][i];
            hi = -(cp_[0][i] + ap / hbar);
            dg += am / hbar;
          }
          lo1_[id] = lo;
          hi1_[id] = hi;
          diag_[id] = dg;
          if (dg <= 0.0 || lo > 0.0 || hi > 0.0)
            throw SolverError("discretization lost the M-matrix sign pattern", 0.0, 0);
          const double row = dg + lo + hi - cm_[1][j] - cp_[1][j] - cm_[2][k] - cp_[2][k];
          min_row_sum = std::min(min_row_sum, row);
        }
      }
    }
    // row sums must be >= 0 up to roundoff for the positivity argument
    row_sum_ok_ = (min_row_sum > -1e-10 * eps);
    min_row_sum_ = min_row_sum;
  }

  const TensorMesh& mesh() const { return *mesh_; }
  OperatorSide side() const { return side_; }
  bool row_sum_ok() const { return row_sum_ok_; }
  double min_row_sum() const { return min_row_sum_; }
  const std::vector<double>& diagonal() const { return diag_; }

  // y = A u on interior nodes; boundary nodes get y = u (identity rows).
  void apply(const std::vector<double>& u, std::vector<double>& y) const {
    const TensorMesh& m = *mesh_;
    const long long s1 = static_cast<long long>(n_[1]) * n_[2], s2 = n_[2];
    for (long long id = 0; id < static_cast<long long>(u.size()); ++id) y[id] = u[id];
    for (int i = 1; i + 1 < n_[0]; ++i)
      for (int j = 1; j + 1 < n_[1]; ++j) {
        const long long base = m.index(i, j, 1);
        for (int k = 1; k + 1 < n_[2]; ++k) {
          const long long id = base + (k - 1);
          y[id] = diag_[id] * u[id] + lo1_[id] * u[id - s1] + hi1_[id] * u[id + s1] -
                  cm_[1][j] * u[id - s2] - cp_[1][j] * u[id + s2] - cm_[2][k] * u[id - 1] -
                  cp_[2][k] * u[id + 1];
        }
      }
  }

  // One Gauss-Seidel sweep ordered along the convection direction.
  // From a nonnegative iterate and nonnegative f the update stays
  // nonnegative: the diagonal is positive and off-diagonals nonpositive.
  void gauss_seidel(std::vector<double>& u, const std::vector<double>& f) const {
    const TensorMesh& m = *mesh_;
    const long long s1 = static_cast<long long>(n_[1]) * n_[2], s2 = n_[2];
    const bool fwd = (side_ == OperatorSide::Adjoint);
    const int ib = fwd ? 1 : n_[0] - 2, ie = fwd ? n_[0] - 1 : 0, is = fwd ? 1 : -1;
    for (int i = ib; i != ie; i += is)
      for (int j = 1; j + 1 < n_[1]; ++j)
        for (int k = 1; k + 1 < n_[2]; ++k) {
          const long long id = m.index(i, j, k);
          const double off = lo1_[id] * u[id - s1] + hi1_[id] * u[id + s1] -
                             cm_[1][j] * u[id - s2] - cp_[1][j] * u[id + s2] -
                             cm_[2][k] * u[id - 1] - cp_[2][k] * u[id + 1];
          u[id] = (f[id] - off) / diag_[id];
        }
  }

 private:
  const TensorMesh* mesh_;
  OperatorSide side_;
  int n_[3];
  std::array<std::vector<double>, 3> cm_, cp_;  // per-axis diffusion couplings
  std::vector<double> lo1_, hi1_, diag_;        // streamwise couplings and diagonal
  bool row_sum_ok_ = true;
  double min_row_sum_ = 0.0;
};

struct SolveResult {
  std::vector<double> field;  // nodal values, boundary included (zeros there)
  long long snapped = 0;      // linear index of the source node
  Vec3 source;                // snapped source location
  double residual = 0.0;      // relative to the right-hand side
  int iterations = 0;
  int clamped = 0;            // negatives zeroed by the positivity finish
  double worst_negative = 0.0;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double nrm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

// Solves A u = f with Jacobi-preconditioned BiCGStab; on breakdown or
// stagnation falls back to convection-ordered Gauss-Seidel. rel_tol is
// measured against ||f||_2.
inline int krylov_solve(const FdOperator& op, const std::vector<double>& f,
                        std::vector<double>& u, double rel_tol, int max_iter,
                        double* final_resid = nullptr) {
  using detail::dot;
  using detail::nrm2;
  const size_t n = f.size();
  u.assign(n, 0.0);
  const double fn = nrm2(f);
  if (fn == 0.0) {
    if (final_resid) *final_resid = 0.0;
    return 0;
  }
  const std::vector<double>& dg = op.diagonal();
  std::vector<double> r = f, r0 = f, p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  int it = 0;
  bool fallback = false;
  for (; it < max_iter; ++it) {
    const double rho1 = dot(r0, r);
    if (std::abs(rho1) < 1e-300 || std::abs(omega) < 1e-300) {
      fallback = true;
      break;
    }
    const double beta = (rho1 / rho) * (alpha / omega);
    rho = rho1;
    for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    for (size_t i = 0; i < n; ++i) ph[i] = p[i] / dg[i];
    op.apply(ph, v);
    const double r0v = dot(r0, v);
    if (std::abs(r0v) < 1e-300) {
      fallback = true;
      break;
    }
    alpha = rho / r0v;
    for (size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (nrm2(s) <= rel_tol * fn) {
      for (size_t i = 0; i < n; ++i) u[i] += alpha * ph[i];
      r = s;
      ++it;
      break;
    }
    for (size_t i = 0; i < n; ++i) sh[i] = s[i] / dg[i];
    op.apply(sh, t);
    const double tt = dot(t, t);
    if (tt < 1e-300) {
      fallback = true;
      break;
    }
    omega = dot(t, s) / tt;
    for (size_t i = 0; i < n; ++i) u[i] += alpha * ph[i] + omega * sh[i];
    for (size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    if (nrm2(r) <= rel_tol * fn) {
      ++it;
      break;
    }
  }
  double rn = nrm2(r) / fn;
  if (fallback || rn > rel_tol) {
    // Gauss-Seidel rescue: restart from the nonnegative part of the iterate
    for (size_t i = 0; i < n; ++i) u[i] = std::max(u[i], 0.0);
    std::vector<double> y(n);
    for (int sweep = 0; sweep < 2000; ++sweep) {
      op.gauss_seidel(u, f);
      ++it;
      if (sweep % 8 == 7) {
        op.apply(u, y);
        double e2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
          const double d = y[i] - f[i];
          e2 += d * d;
        }
        rn = std::sqrt(e2) / fn;
        if (rn <= rel_tol) break;
      }
    }
  }
  if (final_resid) *final_resid = rn;
  return it;
}

// Discrete Green's function: delta load 1/V at the node nearest to source.
// Adjoint side: field of xi -> G(source; xi). Primal side: x -> G(x; source).
inline SolveResult solve_green(const TensorMesh& mesh, const ProblemSpec& spec, const Vec3& source,
                               OperatorSide side, double rel_tol = 1e-10, int max_iter = 20000) {
  const FdOperator op(mesh, spec, side);
  const int i = mesh.nearest(0, source.x), j = mesh.nearest(1, source.y),
            k = mesh.nearest(2, source.z);
  if (i == 0 || j == 0 || k == 0 || i + 1 == mesh.n(0) || j + 1 == mesh.n(1) ||
      k + 1 == mesh.n(2))
    throw DomainError("solve_green: source snapped to the boundary");
  SolveResult out;
  out.snapped = mesh.index(i, j, k);
  out.source = mesh.point(i, j, k);
  std::vector<double> f(mesh.total_nodes(), 0.0);
  f[out.snapped] = 1.0 / mesh.node_volume(i, j, k);

  out.iterations = krylov_solve(op, f, out.field, rel_tol, max_iter, &out.residual);
  if (!(out.residual <= rel_tol))
    throw SolverError("discrete Green's function solve did not converge", out.residual,
                      out.iterations);

  // Positivity finish: zero the roundoff negatives, then re-polish with the
  // sign-preserving sweep so the residual target still holds.
  double umax = 0.0;
  for (double v : out.field) umax = std::max(umax, v);
  for (double& v : out.field) {
    if (v < 0.0) {
      out.worst_negative = std::min(out.worst_negative, v);
      ++out.clamped;
      v = 0.0;
    }
  }
  if (out.clamped > 0) {
    std::vector<double> y(out.field.size());
    for (int sweep = 0; sweep < 200; ++sweep) {
      op.gauss_seidel(out.field, f);
      op.apply(out.field, y);
      double e2 = 0.0, f2 = 0.0;
      for (size_t m = 0; m < f.size(); ++m) {
        const double d = y[m] - f[m];
        e2 += d * d;
        f2 += f[m] * f[m];
      }
      out.residual = std::sqrt(e2 / f2);
      if (out.residual <= rel_tol) break;
    }
  }
  (void)umax;
  return out;
}

// One-sided-difference L1 norms of a nodal field, with optional ball
// exclusion classified at nodes. The forward/backward spread is the error
// estimate; the value is their mean.
struct DiscreteNorms {
  double value_L1 = 0.0;
  std::array<double, 3> d1_L1{};
  std::array<double, 3> d1_err{};
};

inline DiscreteNorms discrete_norms(const TensorMesh& mesh, const std::vector<double>& u,
                                    const std::optional<Ball>& exclude = std::nullopt) {
  DiscreteNorms out;
  const int n0 = mesh.n(0), n1 = mesh.n(1), n2 = mesh.n(2);
  auto excluded = [&](int i, int j, int k) {
    if (!exclude) return false;
    return dist(mesh.point(i, j, k), exclude->center) < exclude->rho;
  };
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      for (int k = 0; k < n2; ++k) {
        if (excluded(i, j, k)) continue;
        const double V = mesh.node_volume(i, j, k);
        out.value_L1 += V * std::abs(u[mesh.index(i, j, k)]);
      }
  for (int axis = 0; axis < 3; ++axis) {
    double fwd = 0.0, bwd = 0.0;
    const int na = mesh.n(axis);
    for (int i = 0; i < n0; ++i)
      for (int j = 0; j < n1; ++j)
        for (int k = 0; k < n2; ++k) {
          if (excluded(i, j, k)) continue;
          const int idx[3] = {i, j, k};
          const double V = mesh.node_volume(i, j, k);
          const std::vector<double>& t = mesh.nodes[axis];
          const long long id = mesh.index(i, j, k);
          const long long stride =
              axis == 0 ? static_cast<long long>(n1) * n2 : (axis == 1 ? n2 : 1);
          if (idx[axis] + 1 < na) {
            const double h = t[idx[axis] + 1] - t[idx[axis]];
            fwd += V * std::abs(u[id + stride] - u[id]) / h;
          }
          if (idx[axis] > 0) {
            const double h = t[idx[axis]] - t[idx[axis] - 1];
            bwd += V * std::abs(u[id] - u[id - stride]) / h;
          }
        }
    out.d1_L1[axis] = 0.5 * (fwd + bwd);
    out.d1_err[axis] = 0.5 * std::abs(fwd - bwd);
  }
  return out;
}

// Legacy VTK rectilinear-grid export of one nodal scalar.
inline void write_vtk(const std::string& path, const TensorMesh& mesh,
                      const std::vector<double>& u, const std::string& name) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << "# vtk DataFile Version 3.0\n" << name << "\nASCII\nDATASET RECTILINEAR_GRID\n";
  os << "DIMENSIONS " << mesh.n(0) << " " << mesh.n(1) << " " << mesh.n(2) << "\n";
  const char* axis_name[3] = {"X_COORDINATES", "Y_COORDINATES", "Z_COORDINATES"};
  char buf[64];
  for (int a = 0; a < 3; ++a) {
    os << axis_name[a] << " " << mesh.n(a) << " double\n";
    for (int i = 0; i < mesh.n(a); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", mesh.nodes[a][i]);
      os << buf << (i + 1 == mesh.n(a) ? "\n" : " ");
    }
  }
  os << "POINT_DATA " << mesh.total_nodes() << "\n";
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  // VTK expects x fastest; our linear index runs z fastest
  for (int k = 0; k < mesh.n(2); ++k)
    for (int j = 0; j < mesh.n(1); ++j)
      for (int i = 0; i < mesh.n(0); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", u[mesh.index(i, j, k)]);
        os << buf << "\n";
      }
  if (!os) throw ConfigError("short write on " + path);
}

// Compact binary snapshot of a solved field. Fixed little-endian layout:
// magic "CDGB", u32 version, u32 n1,n2,n3, f64 eps, f64 source[3],
// node coordinates per axis, then values with z fastest.
struct FieldSnapshot {
  TensorMesh mesh;
  std::vector<double> values;
  double eps = 0.0;
  Vec3 source;
};

inline void write_cdgb(const std::string& path, const TensorMesh& mesh,
                       const std::vector<double>& u, double eps, const Vec3& source) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  os.write("CDGB", 4);
  auto put_u32 = [&os](uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_f64 = [&os](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  put_u32(1u);
  for (int a = 0; a < 3; ++a) put_u32(static_cast<uint32_t>(mesh.n(a)));
  put_f64(eps);
  put_f64(source.x);
  put_f64(source.y);
  put_f64(source.z);
  for (int a = 0; a < 3; ++a)
    os.write(reinterpret_cast<const char*>(mesh.nodes[a].data()), 8 * mesh.n(a));
  os.write(reinterpret_cast<const char*>(u.data()), 8 * static_cast<long long>(u.size()));
  if (!os) throw ConfigError("short write on " + path);
}

inline FieldSnapshot read_cdgb(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CDGB", 4) != 0)
    throw ConfigError(path + " is not a field snapshot");
  auto get_u32 = [&is]() {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_f64 = [&is]() {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  const uint32_t version = get_u32();
  if (version != 1u) throw ConfigError("unsupported field snapshot version");
  FieldSnapshot snap;
  uint32_t n[3];
  for (int a = 0; a < 3; ++a) n[a] = get_u32();
  snap.eps = get_f64();
  snap.source.x = get_f64();
  snap.source.y = get_f64();
  snap.source.z = get_f64();
  for (int a = 0; a < 3; ++a) {
    if (n[a] < 2 || n[a] > 100000) throw ConfigError("corrupt field snapshot");
    snap.mesh.nodes[a].resize(n[a]);
    is.read(reinterpret_cast<char*>(snap.mesh.nodes[a].data()), 8 * n[a]);
  }
  snap.values.resize(static_cast<size_t>(n[0]) * n[1] * n[2]);
  is.read(reinterpret_cast<char*>(snap.values.data()), 8 * snap.values.size());
  if (!is) throw ConfigError("truncated field snapshot " + path);
  return snap;
}

}  // namespace cdgreen
