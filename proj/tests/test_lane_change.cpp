#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pecbf/lane_change.hpp"

using namespace pecbf;
using namespace pecbf::lane_change;

namespace {

struct Instance {
  VehicleState ego, other;
  VehicleInput other_u;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> gap(-40, 40), lat(-0.05, 0.05), spd(10, 28), acc(-1, 1);
  Instance in;
  in.ego = {0.0, 0.0, lat(rng), spd(rng)};
  in.other = {gap(rng), 3.5, lat(rng), spd(rng)};
  in.other_u = {acc(rng), 0.0};
  return in;
}

// Raw noisy eCBF residual: the relative longitudinal rate is shifted by z.
double raw_ecbf(PairGeometry pg, double z, const EcbfGains& g, const Input2& u) {
  pg.dxdot += z;
  return ecbf_residual(barrier_eval(pg), g, u);
}

}  // namespace

TEST_SUITE("lane_change_barrier") {

TEST_CASE("h_m") {
  CHECK(h_m(0, 10, 5) == 75.0);
  CHECK(h_m(3, 8, 5) == 0.0);
  CHECK(h_m(0, 0, 5) == -25.0);
}

TEST_CASE("pair geometry") {
  VehicleParams p;
  auto pg = pair_geometry({0, 0, 0, 20}, p, {30, 3.5, 0, 18}, p, {0, 0}, 5.0);
  CHECK(pg.dx == -30.0);
  CHECK(pg.dxdot == doctest::Approx(2.0));
  CHECK(pg.ddx.constant == 0.0);
  CHECK_THROWS(pair_geometry({0, 0, 0, 20}, p, {30, 3.5, 0, 18}, p, {0, 0}, 0.0));
}

TEST_CASE("relative acceleration matches finite differences") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> acc(-5, 3), slip(-0.2, 0.2);
  VehicleParams p;
  const double h = 1e-5;
  for (int i = 0; i < 200; ++i) {
    auto in = random_instance(rng);
    in.other_u.beta = slip(rng);
    const VehicleInput u{acc(rng), slip(rng)};
    const auto pg = pair_geometry(in.ego, p, in.other, p, in.other_u, 5.0);
    auto rate = [&](double dt) {
      const auto e = oracle::rk4(oracle::as_array(in.ego), u.a, u.beta, p.l_r, dt);
      const auto o = oracle::rk4(oracle::as_array(in.other), in.other_u.a, in.other_u.beta, p.l_r, dt);
      return e[3] * std::cos(e[2]) - o[3] * std::cos(o[2]);
    };
    CHECK(pg.dxdot == doctest::Approx(rate(0.0)).epsilon(1e-12));
    CHECK(pg.ddx(u.as_array()) == doctest::Approx((rate(h) - rate(-h)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("second difference of the gap with straight wheels") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> acc(-5, 3);
  VehicleParams p;
  const double h = 1e-4;
  for (int i = 0; i < 100; ++i) {
    const auto in = random_instance(rng);
    const VehicleInput u{acc(rng), 0.0};
    const auto pg = pair_geometry(in.ego, p, in.other, p, in.other_u, 5.0);
    auto dx = [&](double dt) {
      const auto e = oracle::rk4(oracle::as_array(in.ego), u.a, 0.0, p.l_r, dt);
      const auto o = oracle::rk4(oracle::as_array(in.other), in.other_u.a, 0.0, p.l_r, dt);
      return e[0] - o[0];
    };
    const double fd = (dx(h) - 2 * dx(0) + dx(-h)) / (h * h);
    CHECK(pg.ddx(u.as_array()) == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("deterministic limit of the admissible set") {
  VehicleParams p;
  const auto pg = pair_geometry({0, 0, 0, 20}, p, {-20, 3.5, 0, 22}, p, {0, 0}, 5.0);
  const auto g = gains_from_poles(1.0, 1.0);
  const GaussianNoise none{{0, 0}, {0, 0}, 1};
  const auto set = admissible_control_set(pg, g, none, 0.5);
  const auto be = barrier_eval(pg);
  for (double a : {-5.0, -2.0, 0.0, 1.0, 3.0}) {
    const Input2 u{a, 0.0};
    CHECK(set.satisfied(u, 1e-9) == (ecbf_residual(be, g, u) >= -1e-9));
  }
}

TEST_CASE("far behind at equal speed admits zero input") {
  VehicleParams p;
  const auto pg = pair_geometry({0, 0, 0, 20}, p, {60, 3.5, 0, 20}, p, {0, 0}, 5.0);
  const GaussianNoise n{{0, 0}, {0.15, 0.15}, 1};
  CHECK(admissible_control_set(pg, gains_from_poles(1, 1), n, 0.99).satisfied({0, 0}));
}

TEST_CASE("admissible set membership agrees with sampling") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> acc(-5, 3), slip(-0.2, 0.2), pole(0.1, 5.0);
  VehicleParams p;
  const GaussianNoise n{{0, 0}, {0.3, 0.3}, 1};
  int inside = 0;
  for (int i = 0; i < 500; ++i) {
    const auto in = random_instance(rng);
    const auto pg = pair_geometry(in.ego, p, in.other, p, in.other_u, 5.0);
    const auto g = gains_from_poles(pole(rng), pole(rng));
    const Input2 u{acc(rng), slip(rng)};
    const double eta = i % 2 ? 0.99 : 0.9;
    if (!admissible_control_set(pg, g, n, eta).satisfied(u)) continue;
    ++inside;
    const double prob = mc_satisfaction(
        [&](const NoiseSample& z) { return raw_ecbf(pg, z[0], g, u) >= 0.0; }, n, 100000, i);
    CHECK(prob >= eta - 0.01);
  }
  CHECK(inside > 50);
}

TEST_CASE("gain conditions") {
  VehicleParams p;
  const GaussianNoise n{{0, 0}, {0.15, 0.15}, 1};
  auto pg = pair_geometry({0, 0, 0, 20}, p, {0, 3.5, 0, 20}, p, {0, 0}, 5.0);
  for (double p1 : {0.1, 1.0, 10.0}) {
    const auto rep = kalpha_admissible_set(pg, {0, 0}, p1, 1.0, n, 0.99);
    CHECK(rep.hard_infeasible);
    CHECK_FALSE(rep.feasible);
    CHECK(rep.gap_sign == GapSign::Zero);
  }
  pg = pair_geometry({0, 0, 0, 20}, p, {80, 3.5, 0, 20}, p, {0, 0}, 5.0);
  for (double p1 : {0.5, 1.0, 3.0}) {
    for (double p2 : {0.5, 1.0, 3.0}) {
      const auto rep = kalpha_admissible_set(pg, {0, 0}, p1, p2, n, 0.99);
      CHECK(rep.feasible);
      CHECK(rep.gap_sign == GapSign::Negative);
    }
  }
  CHECK_FALSE(kalpha_admissible_set(pg, {0, 0}, -1.0, 1.0, n, 0.99).feasible);
}

TEST_CASE("gain condition verdicts agree with sampling") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> acc(-5, 3), pole(0.05, 5.0);
  VehicleParams p;
  const GaussianNoise n{{0, 0}, {0.3, 0.3}, 1};
  const double eta = 0.99;
  int p1_in = 0, p1_out = 0, p2_in = 0;
  for (int i = 0; i < 500; ++i) {
    const auto in = random_instance(rng);
    const auto pg = pair_geometry(in.ego, p, in.other, p, in.other_u, 5.0);
    if (barrier_eval(pg).h <= 0.0) continue;
    const double p1 = pole(rng), p2 = pole(rng);
    const VehicleInput u{acc(rng), 0.0};
    const auto rep = kalpha_admissible_set(pg, u, p1, p2, n, eta);
    const auto g = gains_from_poles(p1, p2);
    // v1 is affine in the noise, so the tightening is exact in both directions
    const double prob1 = mc_satisfaction(
        [&](const NoiseSample& z) {
          auto q = pg;
          q.dxdot += z[0];
          return lemma1_residuals(barrier_eval(q), g, u.as_array()).r_p1 >= 0.0;
        },
        n, 100000, 1000 + i);
    if (rep.p1_residual >= 0.0) {
      ++p1_in;
      CHECK(prob1 >= eta - 0.01);
    } else {
      ++p1_out;
      CHECK(prob1 <= eta + 0.01);
    }
    if (rep.p2_ok) {
      ++p2_in;
      const double prob2 = mc_satisfaction(
          [&](const NoiseSample& z) {
            auto q = pg;
            q.dxdot += z[0];
            return lemma1_residuals(barrier_eval(q), g, u.as_array()).r_p2 >= 0.0;
          },
          n, 100000, 2000 + i);
      CHECK(prob2 >= eta - 0.01);
    }
  }
  CHECK(p1_in > 20);
  CHECK(p1_out > 20);
  CHECK(p2_in > 20);
}

}
