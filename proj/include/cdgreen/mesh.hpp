// Tensor-product meshes on the unit cube with piecewise-uniform
// (Shishkin-type) grading toward the layers of a point-source field:
// an eps-wide streamwise layer upstream of the source, eps-wide layers at
// the streamwise faces, and sqrt(eps)-wide transverse layers around the
// source ordinates. Transition widths carry the usual ln N factor so the
// layers stay resolved uniformly in eps.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cdgreen/errors.hpp"
#include "cdgreen/problem.hpp"

namespace cdgreen {

struct TensorMesh {
  std::array<std::vector<double>, 3> nodes;  // each size n[a], ascending, 0 and 1 included

  int n(int axis) const { return static_cast<int>(nodes[axis].size()); }
  long long total_nodes() const {
    return static_cast<long long>(n(0)) * n(1) * n(2);
  }
  long long index(int i, int j, int k) const {
    return (static_cast<long long>(i) * n(1) + j) * n(2) + k;
  }
  Vec3 point(int i, int j, int k) const {
    return {nodes[0][i], nodes[1][j], nodes[2][k]};
  }

  // one-dimensional control length: half the span of the two adjacent intervals
  double control(int axis, int i) const {
    const std::vector<double>& t = nodes[axis];
    const double lo = (i == 0) ? t[0] : 0.5 * (t[i - 1] + t[i]);
    const double hi = (i + 1 == n(axis)) ? t.back() : 0.5 * (t[i] + t[i + 1]);
    return hi - lo;
  }
  double node_volume(int i, int j, int k) const {
    return control(0, i) * control(1, j) * control(2, k);
  }

  int nearest(int axis, double v) const {
    const std::vector<double>& t = nodes[axis];
    const auto it = std::lower_bound(t.begin(), t.end(), v);
    if (it == t.begin()) return 0;
    if (it == t.end()) return n(axis) - 1;
    const int hi = static_cast<int>(it - t.begin());
    return (v - t[hi - 1] <= t[hi] - v) ? hi - 1 : hi;
  }

  double min_spacing(int axis) const {
    const std::vector<double>& t = nodes[axis];
    double m = 1.0;
    for (size_t i = 1; i < t.size(); ++i) m = std::min(m, t[i] - t[i - 1]);
    return m;
  }
};

namespace detail {

struct Segment {
  double lo = 0, hi = 0;
  double weight = 0;  // share of the axis interval budget
};

// Distributes N intervals over the segments proportionally to weight,
// at least one per nonempty segment, then fills each uniformly.
inline std::vector<double> fill_axis(std::vector<Segment> segs, int N) {
  std::vector<Segment> keep;
  for (const Segment& s : segs)
    if (s.hi - s.lo > 1e-12) keep.push_back(s);
  if (keep.empty()) throw DomainError("mesh axis has no usable segments");
  double wsum = 0;
  for (const Segment& s : keep) wsum += s.weight;
  std::vector<int> counts(keep.size(), 1);
  int assigned = static_cast<int>(keep.size());
  if (assigned > N) throw DomainError("mesh axis interval budget too small");
  // largest-remainder rounding of the proportional shares
  std::vector<double> want(keep.size());
  for (size_t i = 0; i < keep.size(); ++i)
    want[i] = std::max(1.0, keep[i].weight / wsum * N);
  while (assigned < N) {
    size_t best = 0;
    double worst = -1e300;
    for (size_t i = 0; i < keep.size(); ++i) {
      const double deficit = want[i] - counts[i];
      if (deficit > worst) {
        worst = deficit;
        best = i;
      }
    }
    ++counts[best];
    ++assigned;
  }
  std::vector<double> out;
  out.reserve(N + 1);
  out.push_back(keep.front().lo);
  for (size_t i = 0; i < keep.size(); ++i) {
    const double h = (keep[i].hi - keep[i].lo) / counts[i];
    for (int m = 1; m <= counts[i]; ++m) out.push_back(keep[i].lo + m * h);
    out.back() = keep[i].hi;  // exact segment endpoint
  }
  return out;
}

}  // namespace detail

// Uniform N x N x N mesh (N intervals per axis).
inline TensorMesh uniform_mesh(int N) {
  if (N < 2) throw DomainError("uniform_mesh: need at least 2 intervals");
  TensorMesh m;
  for (int a = 0; a < 3; ++a) {
    m.nodes[a].resize(N + 1);
    for (int i = 0; i <= N; ++i) m.nodes[a][i] = static_cast<double>(i) / N;
  }
  return m;
}

// Layer-adapted mesh for a point source at x. Streamwise axis: eps-scale
// layers upstream of the source and at both faces; transverse axes:
// sqrt(eps)-scale layers around the source ordinate. Caps keep the mesh
// quasi-uniform when eps is moderate.
inline TensorMesh layered_mesh(int N, const Vec3& x, double eps, double alpha) {
  if (N < 16 || N % 8 != 0) throw DomainError("layered_mesh: N must be a multiple of 8, >= 16");
  if (eps <= 0 || alpha <= 0) throw DomainError("layered_mesh: eps and alpha must be positive");
  const double lnN = std::log(static_cast<double>(N));
  TensorMesh m;

  {  // streamwise
    const double tb = std::min(0.125, 2.0 * (eps / alpha) * lnN);
    double tu = std::min(0.25, 2.0 * (eps / alpha) * lnN);
    const double x1 = std::clamp(x.x, 0.0, 1.0);
    tu = std::min(tu, std::max(0.0, x1 - tb));  // upstream layer must clear the inflow layer
    std::vector<detail::Segment> segs;
    const double up_hi = std::min(x1, 1.0 - tb);
    const double up_lo = up_hi - tu;
    segs.push_back({0.0, tb, 0.125});
    segs.push_back({tb, up_lo, 0.0});  // coarse share filled below
    segs.push_back({up_lo, up_hi, 0.5});
    segs.push_back({up_hi, 1.0 - tb, 0.0});
    segs.push_back({1.0 - tb, 1.0, 0.125});
    const double len1 = std::max(0.0, up_lo - tb), len2 = std::max(0.0, 1.0 - tb - up_hi);
    const double coarse = len1 + len2;
    segs[1].weight = coarse > 0 ? 0.25 * len1 / coarse : 0.0;
    segs[3].weight = coarse > 0 ? 0.25 * len2 / coarse : 0.0;
    m.nodes[0] = detail::fill_axis(segs, N);
  }
  for (int a = 1; a < 3; ++a) {  // transverse
    const double xa = std::clamp(a == 1 ? x.y : x.z, 0.0, 1.0);
    const double t = std::min(0.25, 2.0 * std::sqrt(eps / alpha) * lnN);
    const double lo = std::max(0.0, xa - t), hi = std::min(1.0, xa + t);
    std::vector<detail::Segment> segs;
    segs.push_back({0.0, lo, 0.0});
    segs.push_back({lo, hi, 0.5});
    segs.push_back({hi, 1.0, 0.0});
    const double coarse = lo + (1.0 - hi);
    segs[0].weight = coarse > 0 ? 0.5 * lo / coarse : 0.0;
    segs[2].weight = coarse > 0 ? 0.5 * (1.0 - hi) / coarse : 0.0;
    m.nodes[a] = detail::fill_axis(segs, N);
  }
  return m;
}

}  // namespace cdgreen
