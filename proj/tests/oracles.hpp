#pragma once

// Reference implementations used as test oracles. None of them call into the library
// routine they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "pecbf/qp.hpp"
#include "pecbf/vehicle.hpp"

namespace oracle {

// erf by its Maclaurin series; fine for |x| < 3.
inline long double erf_series(long double x) {
  long double term = x, sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-22L) break;
  }
  return 2.0L / std::sqrt(std::numbers::pi_v<long double>) * sum;
}

// erfc by its continued fraction (modified Lentz); used for x >= 2.
inline long double erfc_cf(long double x) {
  const long double tiny = 1e-300L;
  long double f = x, c = x, d = 0.0L;
  for (int n = 1; n < 500; ++n) {
    const long double an = n * 0.5L;
    d = x + an * d;
    d = std::fabs(d) < tiny ? 1.0L / tiny : 1.0L / d;
    c = x + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    const long double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0L) < 1e-20L) break;
  }
  return std::exp(-x * x) / std::sqrt(std::numbers::pi_v<long double>) / f;
}

inline long double phi(long double x) {
  const long double t = x / std::sqrt(2.0L);
  if (t >= 2.0L) return 1.0L - 0.5L * erfc_cf(t);
  if (t <= -2.0L) return 0.5L * erfc_cf(-t);
  return 0.5L * (1.0L + erf_series(t));
}

// Lower-tail probability for very small p without the 1 - (...) cancellation.
inline long double phi_lower(long double x) {
  const long double t = -x / std::sqrt(2.0L);
  return t >= 2.0L ? 0.5L * erfc_cf(t) : phi(x);
}

inline double inv_phi_bisect(double p) {
  long double lo = -40.0L, hi = 40.0L;
  const bool lower = p < 0.5;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    const long double v = lower ? phi_lower(mid) : phi(mid);
    if (v < p) lo = mid;
    else hi = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

// Exact small-angle bicycle written out by hand.
inline std::array<double, 4> bicycle_rhs(const std::array<double, 4>& s, double a, double beta,
                                         double lr) {
  const double c = std::cos(s[2]), sn = std::sin(s[2]);
  return {s[3] * c - s[3] * sn * beta, s[3] * sn + s[3] * c * beta, s[3] * beta / lr, a};
}

inline std::array<double, 4> rk4(const std::array<double, 4>& s, double a, double beta, double lr,
                                 double dt) {
  auto add = [](std::array<double, 4> x, const std::array<double, 4>& k, double h) {
    for (int i = 0; i < 4; ++i) x[i] += h * k[i];
    return x;
  };
  const auto k1 = bicycle_rhs(s, a, beta, lr);
  const auto k2 = bicycle_rhs(add(s, k1, dt / 2), a, beta, lr);
  const auto k3 = bicycle_rhs(add(s, k2, dt / 2), a, beta, lr);
  const auto k4 = bicycle_rhs(add(s, k3, dt), a, beta, lr);
  std::array<double, 4> out = s;
  for (int i = 0; i < 4; ++i) out[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

inline std::array<double, 4> as_array(const pecbf::VehicleState& s) { return {s.x, s.y, s.psi, s.v}; }

// Weighted projection onto one half-plane inside a box: u(l) = clamp(t + l W^-1 n) is
// monotone in l, so bisect on the multiplier.
inline std::array<double, 2> project_halfplane_box(const pecbf::Input2& t, const pecbf::Input2& w,
                                                   const pecbf::Input2& n, double c,
                                                   const pecbf::Input2& lo,
                                                   const pecbf::Input2& hi, bool& feasible) {
  auto at = [&](double l) {
    return pecbf::Input2{std::clamp(t[0] + l * n[0] / w[0], lo[0], hi[0]),
                         std::clamp(t[1] + l * n[1] / w[1], lo[1], hi[1])};
  };
  auto g = [&](double l) { return pecbf::dot(n, at(l)) + c; };
  feasible = true;
  if (g(0.0) >= 0.0) return at(0.0);
  double best = 0.0;
  for (int i = 0; i < 2; ++i) best += n[i] > 0 ? n[i] * hi[i] : n[i] * lo[i];
  if (best + c < 0.0) {
    feasible = false;
    return at(0.0);
  }
  double l0 = 0.0, l1 = 1.0;
  while (g(l1) < 0.0 && l1 < 1e12) l1 *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (l0 + l1);
    if (g(m) < 0.0) l0 = m;
    else l1 = m;
  }
  return at(l1);
}

// Dense grid over the box followed by repeated zooming around the best feasible node.
inline pecbf::QpResult grid_qp(const pecbf::QpProblem& qp, int n = 201, int zooms = 8) {
  pecbf::Input2 lo = qp.lower, hi = qp.upper;
  pecbf::QpResult best;
  best.cost = std::numeric_limits<double>::infinity();
  auto feasible = [&](const pecbf::Input2& u) {
    for (const auto& c : qp.constraints)
      if (c.residual(u) < -1e-12) return false;
    return true;
  };
  for (int z = 0; z <= zooms; ++z) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const pecbf::Input2 u{lo[0] + (hi[0] - lo[0]) * i / (n - 1),
                              lo[1] + (hi[1] - lo[1]) * j / (n - 1)};
        if (!feasible(u)) continue;
        const double cost = qp.weights[0] * (u[0] - qp.target[0]) * (u[0] - qp.target[0]) +
                            qp.weights[1] * (u[1] - qp.target[1]) * (u[1] - qp.target[1]);
        if (cost < best.cost) best = {true, u, cost};
      }
    }
    if (!best.feasible) return best;
    for (int k = 0; k < 2; ++k) {
      const double span = 4.0 * (hi[k] - lo[k]) / (n - 1);
      lo[k] = std::max(qp.lower[k], best.u[k] - span);
      hi[k] = std::min(qp.upper[k], best.u[k] + span);
    }
  }
  return best;
}

// Exact weighted projection onto one half-plane inside a box. u(l) = clamp(t + l n / 2w) is
// piecewise linear in the multiplier, so the crossing is found between breakpoints.
inline double halfplane_box_cost(const pecbf::Input2& t, const pecbf::Input2& w,
                                 const pecbf::Input2& n, double c, const pecbf::Input2& lo,
                                 const pecbf::Input2& hi, bool& feasible) {
  auto at = [&](double l) {
    return pecbf::Input2{std::clamp(t[0] + l * n[0] / (2.0 * w[0]), lo[0], hi[0]),
                         std::clamp(t[1] + l * n[1] / (2.0 * w[1]), lo[1], hi[1])};
  };
  auto cost = [&](const pecbf::Input2& u) {
    return w[0] * (u[0] - t[0]) * (u[0] - t[0]) + w[1] * (u[1] - t[1]) * (u[1] - t[1]);
  };
  auto g = [&](double l) { return pecbf::dot(n, at(l)) + c; };
  feasible = true;
  if (g(0.0) >= 0.0) return cost(at(0.0));
  std::array<double, 5> bp{};
  int nb = 0;
  for (int i = 0; i < 2; ++i) {
    if (n[i] == 0.0) continue;
    for (double b : {lo[i], hi[i]}) {
      const double l = 2.0 * w[i] * (b - t[i]) / n[i];
      if (l > 0.0) bp[nb++] = l;
    }
  }
  std::sort(bp.begin(), bp.begin() + nb);
  double l0 = 0.0, g0 = g(0.0);
  for (int k = 0; k < nb; ++k) {
    const double g1 = g(bp[k]);
    if (g1 >= 0.0) return cost(at(l0 + (bp[k] - l0) * (-g0) / (g1 - g0)));
    l0 = bp[k];
    g0 = g1;
  }
  feasible = false;
  return 0.0;
}

// Lagrange dual of the box-constrained QP, maximized by exact coordinate ascent over the
// half-plane multipliers (Hildreth). Every dual value bounds the optimum from below; the
// ascent stops once the bound reaches stop_at.
inline double dual_bound(const pecbf::QpProblem& qp, double stop_at, int sweeps = 20000) {
  const size_t m = qp.constraints.size();
  std::vector<double> lam(m, 0.0);
  auto primal = [&]() {
    pecbf::Input2 u{};
    for (int i = 0; i < 2; ++i) {
      double s = 0.0;
      for (size_t j = 0; j < m; ++j) s += lam[j] * qp.constraints[j].normal[i];
      u[i] = std::clamp(qp.target[i] + s / (2.0 * qp.weights[i]), qp.lower[i], qp.upper[i]);
    }
    return u;
  };
  auto value = [&]() {
    const auto u = primal();
    double g = 0.0;
    for (int i = 0; i < 2; ++i) g += qp.weights[i] * (u[i] - qp.target[i]) * (u[i] - qp.target[i]);
    for (size_t j = 0; j < m; ++j) g -= lam[j] * qp.constraints[j].residual(u);
    return g;
  };
  double best = value();
  for (int s = 0; s < sweeps && m > 0; ++s) {
    for (size_t j = 0; j < m; ++j) {
      // the partial derivative -(residual) is non-increasing in lam_j
      auto slope = [&](double l) {
        lam[j] = l;
        return -qp.constraints[j].residual(primal());
      };
      if (slope(0.0) <= 0.0) continue;
      double lo = 0.0, hi = 1.0;
      while (slope(hi) > 0.0 && hi < 1e15) hi *= 2.0;
      for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) > 0.0) lo = mid;
        else hi = mid;
      }
      lam[j] = 0.5 * (lo + hi);
    }
    best = std::max(best, value());
    if (best >= stop_at) break;
  }
  return best;
}

}  // namespace oracle
