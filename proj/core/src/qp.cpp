#include "pecbf/qp.hpp"

#include <cmath>
#include <stdexcept>

namespace pecbf {
namespace {

constexpr double kFeasTol = 1e-9;

bool feasible_point(const QpProblem& qp, const std::vector<HalfPlane>& all, const Input2& u) {
  for (int i = 0; i < 2; ++i) {
    const double scale = std::max(1.0, std::abs(qp.upper[i]) + std::abs(qp.lower[i]));
    if (u[i] < qp.lower[i] - kFeasTol * scale || u[i] > qp.upper[i] + kFeasTol * scale) {
      return false;
    }
  }
  for (const auto& c : all) {
    const double scale =
        std::max(1.0, std::abs(c.normal[0]) + std::abs(c.normal[1]) + std::abs(c.offset));
    if (c.residual(u) < -kFeasTol * scale) return false;
  }
  return true;
}

}  // namespace

QpResult solve_convex_subproblem(const QpProblem& qp) {
  if (!(qp.weights[0] > 0.0 && qp.weights[1] > 0.0)) {
    throw std::invalid_argument("QP weights must be positive");
  }
  if (!(qp.lower[0] <= qp.upper[0] && qp.lower[1] <= qp.upper[1])) {
    throw std::invalid_argument("QP box bounds are inverted");
  }
  std::vector<HalfPlane> all = qp.constraints;
  for (const auto& c : all) {
    if (!std::isfinite(c.offset) || !std::isfinite(c.normal[0]) || !std::isfinite(c.normal[1])) {
      throw std::invalid_argument("QP constraint is not finite");
    }
  }
  all.push_back({{1.0, 0.0}, -qp.lower[0]});
  all.push_back({{-1.0, 0.0}, qp.upper[0]});
  all.push_back({{0.0, 1.0}, -qp.lower[1]});
  all.push_back({{0.0, -1.0}, qp.upper[1]});

  const Input2 winv{1.0 / qp.weights[0], 1.0 / qp.weights[1]};
  auto cost = [&](const Input2& u) {
    const double d0 = u[0] - qp.target[0];
    const double d1 = u[1] - qp.target[1];
    return qp.weights[0] * d0 * d0 + qp.weights[1] * d1 * d1;
  };

  QpResult best;
  auto consider = [&](Input2 u) {
    if (!std::isfinite(u[0]) || !std::isfinite(u[1])) return;
    if (!feasible_point(qp, all, u)) return;
    // snap into the box; box sides may have been hit only up to rounding
    for (int i = 0; i < 2; ++i) u[i] = std::min(std::max(u[i], qp.lower[i]), qp.upper[i]);
    const double c = cost(u);
    if (!best.feasible || c < best.cost ||
        (c == best.cost && (u[0] < best.u[0] || (u[0] == best.u[0] && u[1] < best.u[1])))) {
      best = {true, u, c};
    }
  };

  consider(qp.target);
  const size_t m = all.size();
  for (size_t i = 0; i < m; ++i) {
    const auto& n = all[i].normal;
    const double nwn = n[0] * n[0] * winv[0] + n[1] * n[1] * winv[1];
    if (nwn <= 0.0) continue;
    const double lambda = all[i].residual(qp.target) / nwn;
    consider({qp.target[0] - lambda * winv[0] * n[0], qp.target[1] - lambda * winv[1] * n[1]});
  }
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i + 1; j < m; ++j) {
      const auto& a = all[i];
      const auto& b = all[j];
      const double det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
      const double scale = std::hypot(a.normal[0], a.normal[1]) * std::hypot(b.normal[0], b.normal[1]);
      if (std::abs(det) <= 1e-14 * scale) continue;
      // a.n . u = -a.o, b.n . u = -b.o
      const double u0 = (-a.offset * b.normal[1] + b.offset * a.normal[1]) / det;
      const double u1 = (-b.offset * a.normal[0] + a.offset * b.normal[0]) / det;
      consider({u0, u1});
    }
  }
  return best;
}

}  // namespace pecbf
