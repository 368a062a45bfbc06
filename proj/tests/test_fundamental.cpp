#include <catch_amalgamated.hpp>

#include <cmath>

#include "cdgreen/fundamental.hpp"

using namespace cdgreen;
using Catch::Approx;

namespace {

double halton(int i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

HatCoords at(double x1, double x2, double x3) {
  HatCoords h;
  h.xi1 = x1;
  h.xi2 = x2;
  h.xi3 = x3;
  h.r = std::sqrt(x1 * x1 + x2 * x2 + x3 * x3);
  return h;
}

// deterministic points in a shell 0.15 <= r <= 4, avoiding the axes
HatCoords shell_point(int n) {
  const double u = 2.0 * halton(n, 2) - 1.0, v = 2.0 * halton(n, 3) - 1.0,
               w = 2.0 * halton(n, 5) - 1.0;
  const double r = std::sqrt(u * u + v * v + w * w) + 1e-30;
  const double s = (0.15 + 3.85 * halton(n, 7)) / r;
  return at(u * s, v * s, w * s);
}

}  // namespace

TEST_CASE("hat coordinates apply the shift to the streamwise axis only") {
  const Vec3 x{0.3, 0.6, 0.8}, xi{0.5, 0.55, 0.95};
  const HatCoords h = hat_coords(x, xi, 0.05, 0.25);
  CHECK(h.xi1 == Approx((0.5 - 0.25) / 0.05));
  CHECK(h.xi2 == Approx((0.55 - 0.6) / 0.05));
  CHECK(h.xi3 == Approx((0.95 - 0.8) / 0.05));
  CHECK(h.r == Approx(std::sqrt(h.xi1 * h.xi1 + h.xi2 * h.xi2 + h.xi3 * h.xi3)));
  // default shift recenters on the source
  CHECK(hat_coords(x, xi, 0.05).xi1 == Approx((0.5 - 0.3) / 0.05));
}

TEST_CASE("kernel value matches its explicit formula") {
  for (int n = 1; n <= 12; ++n) {
    const HatCoords h = shell_point(n);
    for (double eps : {1.0, 0.04}) {
      const double q = 0.8;
      const double expect =
          std::exp(q * (h.xi1 - h.r)) / (4.0 * M_PI * eps * eps * h.r);
      CHECK(eval_g(h, q, eps) == Approx(expect).epsilon(1e-14));
    }
  }
}

// Oracle chain for the closed forms: first derivatives against central
// differences of the value, second derivatives against central differences
// of the (already verified) first derivatives. Probes step the hat
// coordinates, so each difference carries a factor eps against the physical
// derivative stored in the jet.
TEST_CASE("closed-form jet matches central differences") {
  double worst = 0.0;
  for (double eps : {1.0, 0.1, 0.02}) {
    for (double q : {0.5, 1.3}) {
      for (int n = 1; n <= 50; ++n) {
        const HatCoords h0 = shell_point(n);
        auto jet = [&](double d1, double d2, double d3, double dq) {
          return eval_jet(at(h0.xi1 + d1, h0.xi2 + d2, h0.xi3 + d3), q + dq, eps);
        };
        const FundamentalJet j = jet(0, 0, 0, 0);
        const double s = 3e-6 * std::max(1.0, h0.r);
        auto rel = [](double got, double fd, double floor_scale) {
          return std::abs(got - fd) / std::max(std::abs(fd), floor_scale);
        };
        const double vfloor = 1e-3 * std::abs(j.value) / (s * eps);
        worst = std::max(worst, rel(j.d_xi1, (jet(s, 0, 0, 0).value - jet(-s, 0, 0, 0).value) / (2 * s * eps), vfloor));
        worst = std::max(worst, rel(j.d_xi2, (jet(0, s, 0, 0).value - jet(0, -s, 0, 0).value) / (2 * s * eps), vfloor));
        worst = std::max(worst, rel(j.d_xi3, (jet(0, 0, s, 0).value - jet(0, 0, -s, 0).value) / (2 * s * eps), vfloor));
        worst = std::max(worst, rel(j.d_q, (jet(0, 0, 0, s).value - jet(0, 0, 0, -s).value) / (2 * s), 1e-3 * std::abs(j.value) / s));
        const double dfloor = 1e-3 * (std::abs(j.d_xi1) + std::abs(j.d_xi2) + std::abs(j.d_xi3)) / (s * eps);
        worst = std::max(worst, rel(j.d2_xi1xi1, (jet(s, 0, 0, 0).d_xi1 - jet(-s, 0, 0, 0).d_xi1) / (2 * s * eps), dfloor));
        worst = std::max(worst, rel(j.d2_xi2xi2, (jet(0, s, 0, 0).d_xi2 - jet(0, -s, 0, 0).d_xi2) / (2 * s * eps), dfloor));
        worst = std::max(worst, rel(j.d2_xi3xi3, (jet(0, 0, s, 0).d_xi3 - jet(0, 0, -s, 0).d_xi3) / (2 * s * eps), dfloor));
        worst = std::max(worst, rel(j.d2_xi1xi2, (jet(0, s, 0, 0).d_xi1 - jet(0, -s, 0, 0).d_xi1) / (2 * s * eps), dfloor));
        worst = std::max(worst, rel(j.d2_xi1xi3, (jet(0, 0, s, 0).d_xi1 - jet(0, 0, -s, 0).d_xi1) / (2 * s * eps), dfloor));
        worst = std::max(worst, rel(j.d2_xi1q, (jet(0, 0, 0, s).d_xi1 - jet(0, 0, 0, -s).d_xi1) / (2 * s), 1e-3 * std::abs(j.d_xi1) / s));
      }
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("streamwise curvature satisfies the kernel ODE identity") {
  // -eps*Lap g + 2q d1 g = 0 rearranged: d11 = -d22 - d33 + (2q/eps) d1
  for (int n = 1; n <= 40; ++n) {
    const HatCoords h = shell_point(n);
    const double q = 0.9, eps = 0.03;
    const FundamentalJet j = eval_jet(h, q, eps);
    const double rhs = -j.d2_xi2xi2 - j.d2_xi3xi3 + (2.0 * q / eps) * j.d_xi1;
    const double scale =
        std::abs(j.d2_xi2xi2) + std::abs(j.d2_xi3xi3) + std::abs(2.0 * q / eps * j.d_xi1);
    CHECK(std::abs(j.d2_xi1xi1 - rhs) <= 1e-12 * scale);
  }
}

TEST_CASE("frozen operator annihilates the kernel away from the source") {
  const Vec3 x{0.42, 0.5, 0.61};
  for (double eps : {0.5, 0.02}) {
    for (int n = 1; n <= 60; ++n) {
      const Vec3 xi{halton(n, 2), halton(n, 3), halton(n, 5)};
      const FrozenResidual fr = frozen_residual(x, xi, 0.85, eps);
      if (fr.scale == 0.0) continue;  // underflowed far field
      CHECK(std::abs(fr.residual) <= 1e-10 * fr.scale);
    }
  }
}

TEST_CASE("log-space weights factor out of the jet exactly") {
  const HatCoords h = shell_point(5);
  const double q = 1.1, eps = 0.07, lw = -3.25;
  const FundamentalJet base = eval_jet(h, q, eps);
  const FundamentalJet scaled = weighted_jet(h, q, eps, lw);
  const double f = std::exp(lw);
  CHECK(scaled.value == Approx(f * base.value).epsilon(1e-13));
  CHECK(scaled.d_xi1 == Approx(f * base.d_xi1).epsilon(1e-13));
  CHECK(scaled.d2_xi1xi2 == Approx(f * base.d2_xi1xi2).epsilon(1e-13));
  CHECK(scaled.d2_xi1q == Approx(f * base.d2_xi1q).epsilon(1e-13));
}

TEST_CASE("fused exponent survives weights that overflow on their own") {
  // an image weight with exponent +1300 against a kernel exponent ~ -1320:
  // the product is a modest number even though exp(1300) overflows
  const double q = 0.5, eps = 1e-3;
  HatCoords h = at(-1320.0, 3.0, 0.0);  // q*(xi1 - r) ~ -1320.003
  const double log_w = 1300.0;
  const double kernel_exp = q * (h.xi1 - h.r);
  const double expect = std::exp(log_w + kernel_exp) / (4.0 * M_PI * eps * eps * h.r);
  const double got = weighted_value(h, q, eps, log_w);
  CHECK(std::isfinite(got));
  CHECK(got == Approx(expect).epsilon(1e-13));
}

TEST_CASE("deep underflow yields an exact zero, not a denormal storm") {
  const double q = 0.5, eps = 1e-3;
  const HatCoords h = at(-800.0, 10.0, 0.0);  // exponent ~ -800
  CHECK(eval_g(h, q, eps) == 0.0);
  const FundamentalJet j = eval_jet(h, q, eps);
  CHECK(j.value == 0.0);
  CHECK(j.d_xi1 == 0.0);
  CHECK(j.d2_xi1xi1 == 0.0);
}

TEST_CASE("evaluation at the source is a reported error") {
  CHECK_THROWS_AS(eval_g(at(0.0, 0.0, 0.0), 1.0, 0.1), SingularityError);
  CHECK_THROWS_AS(eval_jet(at(1e-13, 0.0, 0.0), 1.0, 0.1), SingularityError);
}

TEST_CASE("boundary weight identities") {
  const double x1 = 0.3, q = 0.7, eps = 0.2;
  const Weights w = eval_weights(x1, q, eps);
  CHECK_FALSE(w.saturated);
  CHECK(w.p == Approx(std::exp(-2.0 * q * x1 / eps)).epsilon(1e-14));
  CHECK(w.lambda_minus == Approx(std::exp(2.0 * q * (1.0 - x1) / eps)).epsilon(1e-14));
  CHECK(w.lambda_plus == Approx(std::exp(2.0 * q * (1.0 + x1) / eps)).epsilon(1e-14));
  CHECK(w.lambda == Approx(1.0 / w.lambda_minus).epsilon(1e-13));
  // p * lambda_plus and lambda_minus * exp(2q x1/eps) both equal exp(2q/eps)
  CHECK(w.p * w.lambda_plus == Approx(w.lambda_minus * std::exp(2.0 * q * x1 / eps)).epsilon(1e-12));

  // small eps saturates the growing exponentials but flags it
  const Weights ws = eval_weights(0.5, 0.7, 1e-4);
  CHECK(ws.saturated);
  CHECK(std::isfinite(ws.lambda_plus));
}
