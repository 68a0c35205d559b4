#include "pecbf/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "pecbf/intersection.hpp"
#include "pecbf/lane_change.hpp"
#include "pecbf/scenario.hpp"
#include "pecbf/stochastic.hpp"

namespace pecbf {

std::vector<std::string> calibration_families() {
  return {"lane_ecbf", "intersection_ecbf", "lane_p1", "lane_p2", "intersection_p1",
          "intersection_p2"};
}

namespace {

struct Rng {
  std::mt19937_64 eng;
  double uni(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  double log_uni(double lo, double hi) { return std::exp(uni(std::log(lo), std::log(hi))); }
  bool coin() { return uni(0.0, 1.0) < 0.5; }
};

struct Noise {
  GaussianNoise per_vehicle;
  GaussianNoise relative;
};

Noise random_noise(Rng& r, int dims) {
  Noise n;
  n.per_vehicle.dims = dims;
  n.per_vehicle.mean = {r.uni(-0.1, 0.1), r.uni(-0.1, 0.1)};
  n.per_vehicle.sigma = {r.uni(0.05, 0.5), r.uni(0.05, 0.5)};
  n.relative = difference_noise(n.per_vehicle, n.per_vehicle, r.coin());
  return n;
}

EcbfGains random_gains(Rng& r) {
  const double p1 = r.log_uni(0.05, 5.0);
  const double p2 = r.log_uni(0.05, 5.0);
  return {p1, p2, p1 * p2, p1 + p2};
}

VehicleInput random_input(Rng& r, const VehicleParams& p) {
  return {r.uni(p.a_min, p.a_max), r.uni(p.beta_min, p.beta_max)};
}

lane_change::PairGeometry random_lane_pair(Rng& r, const VehicleParams& p) {
  const double gap = r.uni(6.2, 40.0) * (r.coin() ? 1.0 : -1.0);
  const VehicleState ego{0.0, 0.0, r.uni(-0.1, 0.1), r.uni(10.0, 25.0)};
  const VehicleState other{-gap, r.coin() ? 0.0 : 3.5, r.uni(-0.05, 0.05), r.uni(10.0, 25.0)};
  return lane_change::pair_geometry(ego, p, other, p, random_input(r, p), 6.0);
}

intersection::PlanarPair random_planar_pair(Rng& r, const VehicleParams& p) {
  for (;;) {
    const VehicleState ego{r.uni(-15.0, 15.0), r.uni(-15.0, 15.0), r.uni(-3.14, 3.14),
                           r.uni(2.0, 12.0)};
    const VehicleState other{r.uni(-15.0, 15.0), r.uni(-15.0, 15.0), r.uni(-3.14, 3.14),
                             r.uni(2.0, 12.0)};
    const auto pp = intersection::planar_pair(ego, p, other, p, random_input(r, p), {});
    if (intersection::h_o(pp) > 0.05) return pp;
  }
}

// Input on the boundary normal . u + c = 0 (shortest such u).
Input2 boundary_input(const Input2& n, double c) {
  const double nn = dot(n, n);
  if (nn == 0.0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  return {-c * n[0] / nn, -c * n[1] / nn};
}

// Largest satisfied value of a pole on a sign change of f within [lo, hi] (log scan + bisection).
double pole_on_boundary(const std::function<double(double)>& f, double lo, double hi) {
  constexpr int scan = 200;
  double prev_x = lo;
  double prev_f = f(lo);
  for (int i = 1; i <= scan; ++i) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(i) / scan);
    const double fx = f(x);
    if ((prev_f >= 0.0) != (fx >= 0.0) && std::isfinite(prev_f) && std::isfinite(fx)) {
      double a = prev_x;  // keep f(a) on the prev side
      double b = x;
      const bool a_ok = prev_f >= 0.0;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        if ((f(m) >= 0.0) == a_ok) a = m; else b = m;
      }
      return a_ok ? a : b;
    }
    prev_x = x;
    prev_f = fx;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct Instance {
  std::function<bool(const NoiseSample&)> raw;
  GaussianNoise noise;  // noise the raw constraint is sampled under
};

// Returns false when the drawn instance cannot be placed on its boundary.
bool make_instance(const std::string& family, double eta, Rng& r, Instance& out) {
  const VehicleParams p;
  if (family == "lane_ecbf" || family == "lane_p1" || family == "lane_p2") {
    const auto pg = random_lane_pair(r, p);
    const Noise nz = random_noise(r, 1);
    const GaussianNoise rel = nz.relative;
    out.noise = rel;
    const double h = pg.dx * pg.dx - pg.r_margin * pg.r_margin;
    if (family == "lane_ecbf") {
      const EcbfGains g = random_gains(r);
      const auto set = lane_change::admissible_control_set(pg, g, rel, eta);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& b : set.branches) best = std::max(best, b.lhs.constant);
      const Input2 u = boundary_input(set.branches.front().lhs.coeffs, best);
      if (!std::isfinite(u[0])) return false;
      out.raw = [pg, g, h, u](const NoiseSample& e) {
        const double rate = pg.dxdot + e[0];
        const double hd = 2.0 * pg.dx * rate;
        const double hdd = 2.0 * rate * rate + 2.0 * pg.dx * pg.ddx(u);
        return hdd + g.k2 * hd + g.k1 * h >= 0.0;
      };
      return true;
    }
    const LiftedBarrier lb = lane_change::lift(pg, rel);
    if (family == "lane_p1") {
      const double p1 = lb.p1_lower_bound(eta);
      if (!(p1 > 0.0) || !std::isfinite(p1)) return false;
      out.raw = [pg, h, p1](const NoiseSample& e) {
        return 2.0 * pg.dx * (pg.dxdot + e[0]) + p1 * h >= 0.0;
      };
      return true;
    }
    const double p1 = r.log_uni(0.05, 5.0);
    const VehicleInput u = random_input(r, p);
    auto f = [&](double p2) {
      const auto rep = lane_change::kalpha_admissible_set(pg, u, p1, p2, rel, eta);
      return rep.p2_set.always_feasible ? std::numeric_limits<double>::infinity()
                                        : rep.p2_set.best_residual({0.0, 0.0});
    };
    const double p2 = pole_on_boundary(f, 1e-3, 1e3);
    if (!std::isfinite(p2)) return false;
    out.raw = [pg, h, p1, p2, u](const NoiseSample& e) {
      BarrierEval be;
      const double rate = pg.dxdot + e[0];
      be.h = h;
      be.h_dot = 2.0 * pg.dx * rate;
      be.c0 = 2.0 * rate * rate + 2.0 * pg.dx * pg.ddx.constant;
      be.c_u = {2.0 * pg.dx * pg.ddx.coeffs[0], 2.0 * pg.dx * pg.ddx.coeffs[1]};
      return lemma1_residuals(be, gains_from_poles(p1, p2), u.as_array()).r_p2 >= 0.0;
    };
    return true;
  }

  if (family == "intersection_ecbf" || family == "intersection_p1" ||
      family == "intersection_p2") {
    const auto pp = random_planar_pair(r, p);
    const Noise nz = random_noise(r, 2);
    const GaussianNoise rel = nz.relative;
    out.noise = rel;
    const double h = intersection::h_o(pp);
    auto rate = [pp](const NoiseSample& e) {
      return pp.sx * (pp.dxdot + e[0]) + pp.sy * (pp.dydot + e[1]);
    };
    if (family == "intersection_ecbf") {
      const EcbfGains g = random_gains(r);
      const auto set = intersection::admissible_control_set_2d(pp, g, rel, eta);
      const auto& b = set.branches.front();
      const Input2 u = boundary_input(b.lhs.coeffs, b.lhs.constant);
      if (!std::isfinite(u[0])) return false;
      out.raw = [pp, g, h, u, rate](const NoiseSample& e) {
        const double hdd = pp.sx * pp.ddx(u) + pp.sy * pp.ddy(u);
        return hdd + g.k2 * rate(e) + g.k1 * h >= 0.0;
      };
      return true;
    }
    const LiftedBarrier lb = intersection::lift(pp, rel);
    if (family == "intersection_p1") {
      const double p1 = lb.p1_lower_bound(eta);
      if (!(p1 > 0.0) || !std::isfinite(p1)) return false;
      out.raw = [h, p1, rate](const NoiseSample& e) { return rate(e) + p1 * h >= 0.0; };
      return true;
    }
    const double p1 = r.log_uni(0.05, 5.0);
    const VehicleInput u = random_input(r, p);
    auto f = [&](double p2) {
      return intersection::kalpha_admissible_set_2d(pp, u, p1, p2, rel, eta).p2_residual;
    };
    const double p2 = pole_on_boundary(f, 1e-3, 1e3);
    if (!std::isfinite(p2)) return false;
    out.raw = [pp, h, p1, p2, u, rate](const NoiseSample& e) {
      BarrierEval be;
      be.h = h;
      be.h_dot = rate(e);
      be.c0 = pp.sx * pp.ddx.constant + pp.sy * pp.ddy.constant;
      be.c_u = {pp.sx * pp.ddx.coeffs[0] + pp.sy * pp.ddy.coeffs[0],
                pp.sx * pp.ddx.coeffs[1] + pp.sy * pp.ddy.coeffs[1]};
      return lemma1_residuals(be, gains_from_poles(p1, p2), u.as_array()).r_p2 >= 0.0;
    };
    return true;
  }
  throw std::invalid_argument("unknown calibration family: " + family);
}

}  // namespace

CalibrationResult calibrate_family(const std::string& family, double eta,
                                   const CalibrationOptions& opts) {
  if (opts.instances < 1 || opts.samples < 1) throw std::invalid_argument("empty calibration");
  const auto fam_tag = std::hash<std::string>{}(family);
  const auto eta_tag = static_cast<std::uint64_t>(std::llround(eta * 1e6));
  std::vector<double> probs(static_cast<std::size_t>(opts.instances), 0.0);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= opts.instances) return;
      try {
        Rng r{std::mt19937_64(derive_seed(opts.seed, fam_tag ^ eta_tag, static_cast<std::uint64_t>(i)))};
        Instance inst;
        int tries = 0;
        while (!make_instance(family, eta, r, inst)) {
          if (++tries > 10000) throw std::runtime_error("cannot place instance on boundary");
        }
        probs[static_cast<std::size_t>(i)] =
            mc_satisfaction(inst.raw, inst.noise, opts.samples,
                            derive_seed(opts.seed ^ 0xca11b, fam_tag, static_cast<std::uint64_t>(i)));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(opts.instances);
        return;
      }
    }
  };
  const int n_threads = std::max(1, std::min(opts.jobs, opts.instances));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  CalibrationResult res;
  res.family = family;
  res.eta = eta;
  res.instances = opts.instances;
  double sum = 0.0;
  for (double pr : probs) {
    res.min_probability = std::min(res.min_probability, pr);
    sum += pr;
    if (pr < eta - opts.slack) ++res.failures;
  }
  res.mean_probability = sum / static_cast<double>(opts.instances);
  return res;
}

std::vector<CalibrationResult> run_calibration(const CalibrationOptions& opts) {
  std::vector<CalibrationResult> out;
  for (const auto& fam : calibration_families()) {
    for (double eta : opts.etas) out.push_back(calibrate_family(fam, eta, opts));
  }
  return out;
}

}  // namespace pecbf
