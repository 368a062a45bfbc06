#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "cdgreen/fdsolver.hpp"

using namespace cdgreen;
using Catch::Approx;

namespace {

double manufactured(const Vec3& p) {
  return std::sin(M_PI * p.x) * std::sin(M_PI * p.y) * std::sin(M_PI * p.z);
}

// continuous operator applied to the manufactured field, per side
double applied(const Vec3& p, const ProblemSpec& s, OperatorSide side) {
  const double u = manufactured(p);
  const double d1 = M_PI * std::cos(M_PI * p.x) * std::sin(M_PI * p.y) * std::sin(M_PI * p.z);
  const double lap = -3.0 * M_PI * M_PI * u;
  const double a = s.a.value(p), da = s.a.d1(p), b = s.b.value(p);
  if (side == OperatorSide::Adjoint) return -s.eps * lap + a * d1 + b * u;
  return -s.eps * lap - a * d1 - da * u + b * u;
}

bool boundary_node(const TensorMesh& m, int i, int j, int k) {
  return i == 0 || j == 0 || k == 0 || i + 1 == m.n(0) || j + 1 == m.n(1) || k + 1 == m.n(2);
}

std::vector<double> nodal(const TensorMesh& m, const ScalarField& f) {
  std::vector<double> u(m.total_nodes());
  for (int i = 0; i < m.n(0); ++i)
    for (int j = 0; j < m.n(1); ++j)
      for (int k = 0; k < m.n(2); ++k) u[m.index(i, j, k)] = f(m.point(i, j, k));
  return u;
}

}  // namespace

TEST_CASE("mesh builders fix endpoints and respect layer budgets") {
  const TensorMesh u = uniform_mesh(10);
  for (int a = 0; a < 3; ++a) {
    REQUIRE(u.n(a) == 11);
    CHECK(u.nodes[a].front() == 0.0);
    CHECK(u.nodes[a].back() == 1.0);
    CHECK(u.min_spacing(a) == Approx(0.1).epsilon(1e-12));
  }

  const double eps = 0.01;
  const TensorMesh m = layered_mesh(32, {0.4, 0.5, 0.5}, eps, 1.0);
  const double tb = 2.0 * eps * std::log(32.0);  // face layer width, uncapped here
  for (int a = 0; a < 3; ++a) {
    REQUIRE(m.n(a) == 33);
    CHECK(m.nodes[a].front() == 0.0);
    CHECK(m.nodes[a].back() == 1.0);
    for (int i = 1; i < m.n(a); ++i) CHECK(m.nodes[a][i] > m.nodes[a][i - 1]);
  }
  int in_face_layer = 0;
  for (double t : m.nodes[0])
    if (t <= tb + 1e-12) ++in_face_layer;
  CHECK(in_face_layer >= 4);
  CHECK(m.min_spacing(0) <= tb / 3.0);
  // transverse layers live on the sqrt(eps) scale around the source ordinate
  int in_transverse = 0;
  for (double t : m.nodes[1])
    if (t >= 0.25 && t <= 0.75) ++in_transverse;
  CHECK(in_transverse >= 15);
  CHECK(m.min_spacing(1) <= 0.5 / 15.0);

  CHECK_THROWS_AS(layered_mesh(12, {0.5, 0.5, 0.5}, 0.1, 1.0), DomainError);
  CHECK_THROWS_AS(layered_mesh(20, {0.5, 0.5, 0.5}, 0.1, 1.0), DomainError);
  CHECK_THROWS_AS(layered_mesh(32, {0.5, 0.5, 0.5}, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(layered_mesh(32, {0.5, 0.5, 0.5}, 0.1, 0.0), DomainError);
  CHECK_THROWS_AS(uniform_mesh(1), DomainError);
}

TEST_CASE("upwind stencils are consistent with the differential operator") {
  const ProblemSpec spec = make_preset("smooth1", 0.5);
  for (OperatorSide side : {OperatorSide::Adjoint, OperatorSide::Primal}) {
    double prev_err = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      const int N = pass == 0 ? 16 : 32;
      const TensorMesh mesh = uniform_mesh(N);
      const FdOperator op(mesh, spec, side);
      CHECK(op.row_sum_ok());
      const std::vector<double> u = nodal(mesh, manufactured);
      std::vector<double> y(u.size());
      op.apply(u, y);
      double err = 0.0;
      for (int i = 1; i + 1 < mesh.n(0); ++i)
        for (int j = 1; j + 1 < mesh.n(1); ++j)
          for (int k = 1; k + 1 < mesh.n(2); ++k) {
            const Vec3 p = mesh.point(i, j, k);
            err = std::max(err, std::abs(y[mesh.index(i, j, k)] - applied(p, spec, side)));
          }
      if (pass == 1) {
        const double rate = std::log2(prev_err / err);
        CHECK(rate > 0.7);
        CHECK(rate < 2.3);
      }
      prev_err = err;
    }
  }
}

TEST_CASE("the two sides are exact transposes for constant coefficients") {
  // upwind advective form on one side vs conservative form on the other:
  // with frozen coefficients on a uniform mesh the interior blocks must agree
  const ProblemSpec spec = make_preset("const", 0.3);
  const TensorMesh mesh = uniform_mesh(4);
  const long long n = mesh.total_nodes();
  const FdOperator Aa(mesh, spec, OperatorSide::Adjoint);
  const FdOperator Ap(mesh, spec, OperatorSide::Primal);
  std::vector<std::vector<double>> cols_a(n), cols_p(n);
  std::vector<double> e(n, 0.0);
  for (long long c = 0; c < n; ++c) {
    e[c] = 1.0;
    cols_a[c].resize(n);
    cols_p[c].resize(n);
    Aa.apply(e, cols_a[c]);
    Ap.apply(e, cols_p[c]);
    e[c] = 0.0;
  }
  auto interior = [&](long long id) {
    const int k = static_cast<int>(id % 5), j = static_cast<int>((id / 5) % 5),
              i = static_cast<int>(id / 25);
    return !boundary_node(mesh, i, j, k);
  };
  double worst = 0.0, scale = 0.0;
  for (long long r = 0; r < n; ++r)
    for (long long c = 0; c < n; ++c) {
      if (!interior(r) || !interior(c)) continue;
      worst = std::max(worst, std::abs(cols_a[c][r] - cols_p[r][c]));
      scale = std::max(scale, std::abs(cols_a[c][r]));
    }
  CHECK(worst <= 1e-12 * scale);
}

TEST_CASE("delta solves satisfy the discrete duality identity") {
  // <g, 1>_V equals the primal unit-load solution at the source node; this
  // exercises the transpose property through the whole solver path
  const ProblemSpec spec = make_preset("const", 0.2);
  const TensorMesh mesh = uniform_mesh(16);
  const SolveResult g = solve_green(mesh, spec, {0.5, 0.5, 0.5}, OperatorSide::Adjoint);

  const FdOperator op(mesh, spec, OperatorSide::Primal);
  std::vector<double> f(mesh.total_nodes(), 0.0);
  for (int i = 1; i + 1 < mesh.n(0); ++i)
    for (int j = 1; j + 1 < mesh.n(1); ++j)
      for (int k = 1; k + 1 < mesh.n(2); ++k) f[mesh.index(i, j, k)] = 1.0;
  std::vector<double> w;
  double resid = 0.0;
  krylov_solve(op, f, w, 1e-11, 20000, &resid);
  REQUIRE(resid <= 1e-11);

  double mass = 0.0;
  for (int i = 0; i < mesh.n(0); ++i)
    for (int j = 0; j < mesh.n(1); ++j)
      for (int k = 0; k < mesh.n(2); ++k)
        mass += mesh.node_volume(i, j, k) * g.field[mesh.index(i, j, k)];
  CHECK(mass == Approx(w[g.snapped]).epsilon(1e-8));
}

TEST_CASE("point-source fields are positive, pinned on the boundary, and skewed downstream") {
  const ProblemSpec spec = make_preset("const", 0.2);
  const TensorMesh mesh = uniform_mesh(16);
  const Vec3 x0{0.5, 0.5, 0.5};
  for (OperatorSide side : {OperatorSide::Adjoint, OperatorSide::Primal}) {
    const SolveResult r = solve_green(mesh, spec, x0, side);
    CHECK(r.residual <= 1e-10);
    CHECK(r.iterations > 0);
    CHECK(r.snapped == mesh.index(8, 8, 8));
    CHECK(r.source.x == 0.5);
    double mn = 0.0, bmax = 0.0;
    for (int i = 0; i < mesh.n(0); ++i)
      for (int j = 0; j < mesh.n(1); ++j)
        for (int k = 0; k < mesh.n(2); ++k) {
          const double v = r.field[mesh.index(i, j, k)];
          mn = std::min(mn, v);
          if (boundary_node(mesh, i, j, k)) bmax = std::max(bmax, std::abs(v));
        }
    CHECK(mn >= 0.0);
    CHECK(bmax == 0.0);
    CHECK(r.field[r.snapped] > 0.0);
    // the field of the observation variable piles up where the kernel does:
    // downstream of x0 in xi for the adjoint side, upstream in x for the primal
    const double plus = r.field[mesh.index(12, 8, 8)];
    const double minus = r.field[mesh.index(4, 8, 8)];
    if (side == OperatorSide::Adjoint)
      CHECK(plus > 2.0 * minus);
    else
      CHECK(minus > 2.0 * plus);
  }
}

TEST_CASE("the solver pair is reciprocal on a shared uniform mesh") {
  const ProblemSpec spec = make_preset("const", 0.1);
  const TensorMesh mesh = uniform_mesh(24);
  const Vec3 xA{0.4, 0.45, 0.55}, xB{0.6, 0.55, 0.45};
  const SolveResult adj = solve_green(mesh, spec, xA, OperatorSide::Adjoint);
  const SolveResult prim = solve_green(mesh, spec, xB, OperatorSide::Primal);
  const long long iB =
      mesh.index(mesh.nearest(0, xB.x), mesh.nearest(1, xB.y), mesh.nearest(2, xB.z));
  const long long iA =
      mesh.index(mesh.nearest(0, xA.x), mesh.nearest(1, xA.y), mesh.nearest(2, xA.z));
  CHECK(adj.field[iB] == Approx(prim.field[iA]).epsilon(1e-8));
}

TEST_CASE("discrete solutions converge to a manufactured solution") {
  const ProblemSpec spec = make_preset("smooth1", 0.5);
  for (OperatorSide side : {OperatorSide::Adjoint, OperatorSide::Primal}) {
    std::vector<double> errs;
    for (int N : {8, 16, 32}) {
      const TensorMesh mesh = uniform_mesh(N);
      const FdOperator op(mesh, spec, side);
      std::vector<double> f(mesh.total_nodes(), 0.0);
      for (int i = 1; i + 1 < mesh.n(0); ++i)
        for (int j = 1; j + 1 < mesh.n(1); ++j)
          for (int k = 1; k + 1 < mesh.n(2); ++k)
            f[mesh.index(i, j, k)] = applied(mesh.point(i, j, k), spec, side);
      std::vector<double> u;
      double resid = 0.0;
      krylov_solve(op, f, u, 1e-11, 20000, &resid);
      REQUIRE(resid <= 1e-11);
      double err = 0.0;
      for (int i = 0; i < mesh.n(0); ++i)
        for (int j = 0; j < mesh.n(1); ++j)
          for (int k = 0; k < mesh.n(2); ++k)
            err = std::max(err,
                           std::abs(u[mesh.index(i, j, k)] - manufactured(mesh.point(i, j, k))));
      errs.push_back(err);
    }
    for (size_t m = 1; m < errs.size(); ++m) {
      const double rate = std::log2(errs[m - 1] / errs[m]);
      CHECK(rate > 0.7);
      CHECK(rate < 2.3);
    }
  }
}

TEST_CASE("discrete norms take exact values on simple fields") {
  const TensorMesh mesh = uniform_mesh(10);
  const double h = 0.1;

  const std::vector<double> ones(mesh.total_nodes(), 1.0);
  const DiscreteNorms nc = discrete_norms(mesh, ones);
  CHECK(nc.value_L1 == Approx(1.0).epsilon(1e-13));
  for (int a = 0; a < 3; ++a) {
    CHECK(nc.d1_L1[a] == 0.0);
    CHECK(nc.d1_err[a] == 0.0);
  }

  const std::vector<double> lin = nodal(mesh, [](const Vec3& p) { return p.x; });
  const DiscreteNorms nl = discrete_norms(mesh, lin);
  CHECK(nl.value_L1 == Approx(0.5).epsilon(1e-13));
  // one-sided sums each miss one boundary sliver of depth h/2
  CHECK(nl.d1_L1[0] == Approx(1.0 - 0.5 * h).epsilon(1e-13));
  CHECK(nl.d1_err[0] <= 1e-14);
  CHECK(nl.d1_L1[1] == 0.0);

  const TensorMesh fine = uniform_mesh(20);
  const std::vector<double> onesf(fine.total_nodes(), 1.0);
  const Ball hole{{0.5, 0.5, 0.5}, 0.25};
  const DiscreteNorms nx = discrete_norms(fine, onesf, hole);
  const double vol = 4.0 / 3.0 * M_PI * 0.25 * 0.25 * 0.25;
  CHECK(nx.value_L1 == Approx(1.0 - vol).epsilon(0.04));
}

TEST_CASE("snapshots survive a round trip and reject corruption") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cdgb_test";
  fs::create_directories(dir);
  const std::string path = (dir / "field.cdgb").string();

  const ProblemSpec spec = make_preset("const", 0.2);
  const TensorMesh mesh = layered_mesh(16, {0.4, 0.5, 0.5}, spec.eps, 1.0);
  const SolveResult r = solve_green(mesh, spec, {0.4, 0.5, 0.5}, OperatorSide::Adjoint);
  write_cdgb(path, mesh, r.field, spec.eps, r.source);

  const FieldSnapshot snap = read_cdgb(path);
  CHECK(snap.eps == spec.eps);
  CHECK(snap.source.x == r.source.x);
  CHECK(snap.source.z == r.source.z);
  for (int a = 0; a < 3; ++a) {
    REQUIRE(snap.mesh.n(a) == mesh.n(a));
    CHECK(snap.mesh.nodes[a] == mesh.nodes[a]);
  }
  CHECK(snap.values == r.field);

  const std::string bad = (dir / "bad.cdgb").string();
  {
    std::ofstream os(bad, std::ios::binary);
    os << "not a snapshot at all, just text long enough to cover the header";
  }
  CHECK_THROWS_AS(read_cdgb(bad), ConfigError);

  const std::string cut = (dir / "cut.cdgb").string();
  {
    std::ifstream is(path, std::ios::binary);
    std::vector<char> head(120);
    is.read(head.data(), head.size());
    std::ofstream os(cut, std::ios::binary);
    os.write(head.data(), head.size());
  }
  CHECK_THROWS_AS(read_cdgb(cut), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("vtk export writes a rectilinear grid with matching counts") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vtk_test";
  fs::create_directories(dir);
  const std::string path = (dir / "field.vtk").string();

  const TensorMesh mesh = uniform_mesh(4);
  std::vector<double> u(mesh.total_nodes(), 2.5);
  write_vtk(path, mesh, u, "green");

  std::ifstream is(path);
  REQUIRE(is.good());
  std::string line, all;
  bool grid = false, dims = false, pdata = false;
  while (std::getline(is, line)) {
    if (line.find("RECTILINEAR_GRID") != std::string::npos) grid = true;
    if (line.find("DIMENSIONS 5 5 5") != std::string::npos) dims = true;
    if (line.find("POINT_DATA 125") != std::string::npos) pdata = true;
  }
  CHECK(grid);
  CHECK(dims);
  CHECK(pdata);
  fs::remove_all(dir);
}

TEST_CASE("sources snapping to the boundary are rejected") {
  const ProblemSpec spec = make_preset("const", 0.2);
  const TensorMesh mesh = uniform_mesh(16);
  CHECK_THROWS_AS(solve_green(mesh, spec, {0.01, 0.5, 0.5}, OperatorSide::Adjoint), DomainError);
  CHECK_THROWS_AS(solve_green(mesh, spec, {0.5, 0.999, 0.5}, OperatorSide::Primal), DomainError);
}
