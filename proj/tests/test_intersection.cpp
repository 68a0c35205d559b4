#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pecbf/intersection.hpp"

using namespace pecbf;
using namespace pecbf::intersection;

namespace {

PlanarPair boxed(double dx, double dy, double bxe, double bxo, double bye, double byo, double r) {
  PlanarPair pp;
  pp.dx = dx;
  pp.dy = dy;
  pp.bx_ego = bxe;
  pp.bx_other = bxo;
  pp.by_ego = bye;
  pp.by_other = byo;
  pp.r_extra = r;
  return pp;
}

struct Pair {
  VehicleState ego, other;
  VehicleInput other_u;
};

Pair random_pair(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-30, 30), ang(-3.1, 3.1), spd(0.5, 12), acc(-2, 2),
      slip(-0.2, 0.2);
  return {{pos(rng), pos(rng), ang(rng), spd(rng)},
          {pos(rng), pos(rng), ang(rng), spd(rng)},
          {acc(rng), slip(rng)}};
}

}  // namespace

TEST_SUITE("intersection_barrier") {

TEST_CASE("h_o arithmetic") {
  CHECK(h_o(boxed(6, 0, 2, 2, 1, 1, 1)) == -1.0);
  CHECK(h_o(boxed(10, 10, 2, 2, 1, 1, 1)) == 13.0);
  CHECK(h_o(boxed(-10, -10, 2, 2, 1, 1, 1)) == 13.0);
}

TEST_CASE("non-negative h_o separates the boxes") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(-8, 8), b(0.1, 3), r(0, 1);
  for (int i = 0; i < 20000; ++i) {
    const auto pp = boxed(d(rng), d(rng), b(rng), b(rng), b(rng), b(rng), r(rng));
    if (h_o(pp) < 0.0) continue;
    const bool overlap_x = std::abs(pp.dx) < pp.bx_ego + pp.bx_other;
    const bool overlap_y = std::abs(pp.dy) < pp.by_ego + pp.by_other;
    CHECK_FALSE((overlap_x && overlap_y));
  }
}

TEST_CASE("head-on rate") {
  VehicleParams p;
  const auto pp = planar_pair({0, 0, 0, 10}, p, {30, 0.5, std::numbers::pi, 10}, p, {0, 0}, {});
  const auto be = barrier_derivatives(pp);
  CHECK(pp.sx == -1);
  CHECK(be.h_dot == doctest::Approx(pp.sx * pp.dxdot).epsilon(1e-12));
  CHECK(be.h_dot == doctest::Approx(-20.0));
}

TEST_CASE("second derivative carries no noise") {
  VehicleParams p;
  std::mt19937_64 rng(32);
  const GaussianNoise n{{0, 0}, {0.2, 0.2}, 2};
  for (int i = 0; i < 50; ++i) {
    const auto pr = random_pair(rng);
    auto pp = planar_pair(pr.ego, p, pr.other, p, pr.other_u, {});
    const auto a = barrier_derivatives(pp);
    pp.dxdot += 0.3;
    pp.dydot -= 0.2;
    const auto b = barrier_derivatives(pp);
    CHECK(a.c0 == b.c0);
    CHECK(a.c_u == b.c_u);
    CHECK(lift(pp, n).quad == 0.0);
  }
}

TEST_CASE("rates match finite differences away from sign flips") {
  VehicleParams p;
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> acc(-5, 3), slip(-0.2, 0.2);
  const double h = 1e-5;
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const auto pr = random_pair(rng);
    const VehicleInput u{acc(rng), slip(rng)};
    const auto pp = planar_pair(pr.ego, p, pr.other, p, pr.other_u, {});
    if (std::abs(pp.dx) < 1.0 || std::abs(pp.dy) < 1.0) continue;
    ++checked;
    const auto be = barrier_derivatives(pp);
    // the barrier moves with the drift position rates, so differentiate those
    auto rate = [&](double dt) {
      const auto e = oracle::rk4(oracle::as_array(pr.ego), u.a, u.beta, p.l_r, dt);
      const auto o = oracle::rk4(oracle::as_array(pr.other), pr.other_u.a, pr.other_u.beta, p.l_r, dt);
      return pp.sx * (e[3] * std::cos(e[2]) - o[3] * std::cos(o[2])) +
             pp.sy * (e[3] * std::sin(e[2]) - o[3] * std::sin(o[2]));
    };
    CHECK(be.h_dot == doctest::Approx(rate(0.0)).epsilon(1e-12));
    CHECK(be.h_ddot(u.as_array()) == doctest::Approx((rate(h) - rate(-h)) / (2 * h)).epsilon(1e-6));
  }
  CHECK(checked > 150);
}

TEST_CASE("value follows straight-wheel motion") {
  VehicleParams p;
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> acc(-5, 3);
  const double h = 1e-4;
  for (int i = 0; i < 100; ++i) {
    auto pr = random_pair(rng);
    pr.other_u.beta = 0.0;
    const VehicleInput u{acc(rng), 0.0};
    PairOptions opts;
    const auto pp = planar_pair(pr.ego, p, pr.other, p, pr.other_u, opts);
    if (std::abs(pp.dx) < 1.0 || std::abs(pp.dy) < 1.0) continue;
    auto value = [&](double dt) {
      const auto e = oracle::rk4(oracle::as_array(pr.ego), u.a, 0.0, p.l_r, dt);
      const auto o = oracle::rk4(oracle::as_array(pr.other), pr.other_u.a, 0.0, p.l_r, dt);
      return std::abs(e[0] - o[0]) + std::abs(e[1] - o[1]);
    };
    const auto be = barrier_derivatives(pp);
    CHECK(be.h_dot == doctest::Approx((value(h) - value(-h)) / (2 * h)).epsilon(1e-6));
    CHECK(be.h_ddot(u.as_array()) ==
          doctest::Approx((value(h) - 2 * value(0) + value(-h)) / (h * h)).epsilon(1e-3));
  }
}

TEST_CASE("degenerate signs") {
  VehicleParams p;
  // dx = 0 with the ego pulling ahead: the rate decides the sign
  auto pp = planar_pair({0, 0, 0, 12}, p, {0, 20, 0, 10}, p, {0, 0}, {});
  CHECK(pp.degenerate_x);
  CHECK(pp.sx == 1);
  // dx = 0 and no relative motion along x: treat as closing, sign opposite to the accel
  pp = planar_pair({0, 0, 0, 10}, p, {0, 20, 0, 10}, p, {1, 0}, {});
  CHECK(pp.degenerate_x);
  CHECK(pp.sx == 1);
  pp = planar_pair({0, 0, std::numbers::pi / 2, 10}, p, {5, 20, std::numbers::pi / 2, 10}, p, {0, 0}, {});
  CHECK_FALSE(pp.degenerate());
  CHECK_THROWS(planar_pair({0, 0, 0, 1}, p, {5, 5, 0, 1}, p, {0, 0}, {-1.0, true}));
}

TEST_CASE("deterministic limit and far-apart admissibility") {
  VehicleParams p;
  const auto pp = planar_pair({0, -40, std::numbers::pi / 2, 0}, p, {-40, 0, 0, 0}, p, {0, 0}, {});
  const auto g = gains_from_poles(1, 1);
  const GaussianNoise n{{0, 0}, {0.15, 0.15}, 2};
  CHECK(admissible_control_set_2d(pp, g, n, 0.9999).satisfied({0, 0}));
  const GaussianNoise none{{0, 0}, {0, 0}, 2};
  const auto be = barrier_derivatives(pp);
  for (double a : {-5.0, 0.0, 3.0}) {
    const Input2 u{a, 0.1};
    CHECK(admissible_control_set_2d(pp, g, none, 0.5).best_residual(u) ==
          doctest::Approx(ecbf_residual(be, g, u)));
  }
}

TEST_CASE("affine tightening agrees with sampling in both directions") {
  VehicleParams p;
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> acc(-5, 3), slip(-0.2, 0.2), pole(0.05, 4);
  const GaussianNoise n{{0.02, -0.01}, {0.3, 0.2}, 2};
  const double eta = 0.99;
  int in = 0, out = 0;
  for (int i = 0; i < 500; ++i) {
    const auto pr = random_pair(rng);
    const auto pp = planar_pair(pr.ego, p, pr.other, p, pr.other_u, {});
    const auto g = gains_from_poles(pole(rng), pole(rng));
    const Input2 u{acc(rng), slip(rng)};
    const bool member = admissible_control_set_2d(pp, g, n, eta).satisfied(u);
    const double prob = mc_satisfaction(
        [&](const NoiseSample& z) {
          auto q = pp;
          q.dxdot += z[0];
          q.dydot += z[1];
          return ecbf_residual(barrier_derivatives(q), g, u) >= 0.0;
        },
        n, 100000, 500 + i);
    if (member) {
      ++in;
      CHECK(prob >= eta - 0.01);
    } else {
      ++out;
      CHECK(prob <= eta + 0.01);
    }
  }
  CHECK(in > 50);
  CHECK(out > 50);
}

TEST_CASE("gain conditions") {
  VehicleParams p;
  const GaussianNoise n{{0, 0}, {0.15, 0.15}, 2};
  const auto pp = planar_pair({0, -40, std::numbers::pi / 2, 0}, p, {-40, 0, 0, 0}, p, {0, 0}, {});
  CHECK_FALSE(kalpha_admissible_set_2d(pp, {0, 0}, 0.0, 1.0, n, 0.99).feasible);
  CHECK_FALSE(kalpha_admissible_set_2d(pp, {0, 0}, 1.0, -1.0, n, 0.99).feasible);
  for (double p1 : {0.5, 1.0, 2.0})
    for (double p2 : {0.5, 1.0, 2.0}) CHECK(kalpha_admissible_set_2d(pp, {0, 0}, p1, p2, n, 0.99).feasible);
}

TEST_CASE("gain verdicts agree with sampling") {
  VehicleParams p;
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> acc(-5, 3), pole(0.05, 4);
  const GaussianNoise n{{0, 0}, {0.3, 0.3}, 2};
  const double eta = 0.9;
  for (int i = 0; i < 500; ++i) {
    const auto pr = random_pair(rng);
    const auto pp = planar_pair(pr.ego, p, pr.other, p, pr.other_u, {});
    const double p1 = pole(rng), p2 = pole(rng);
    const VehicleInput u{acc(rng), 0.0};
    const auto rep = kalpha_admissible_set_2d(pp, u, p1, p2, n, eta);
    const auto g = gains_from_poles(p1, p2);
    auto sampled = [&](bool second) {
      return mc_satisfaction(
          [&](const NoiseSample& z) {
            auto q = pp;
            q.dxdot += z[0];
            q.dydot += z[1];
            const auto r = lemma1_residuals(barrier_derivatives(q), g, u.as_array());
            return (second ? r.r_p2 : r.r_p1) >= 0.0;
          },
          n, 50000, 3000 + 2 * i + second);
    };
    const double q1 = sampled(false), q2 = sampled(true);
    CHECK((rep.p1_residual >= 0.0 ? q1 >= eta - 0.01 : q1 <= eta + 0.01));
    CHECK((rep.p2_residual >= 0.0 ? q2 >= eta - 0.01 : q2 <= eta + 0.01));
  }
}

}
