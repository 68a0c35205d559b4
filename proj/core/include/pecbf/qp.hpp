#pragma once

#include <vector>

#include "pecbf/ecbf.hpp"

namespace pecbf {

/// normal . u + offset >= 0
struct HalfPlane {
  Input2 normal{0.0, 0.0};
  double offset = 0.0;

  double residual(const Input2& u) const { return dot(normal, u) + offset; }
};

/// min sum_i weights_i (u_i - target_i)^2  s.t. half-planes and lower <= u <= upper.
struct QpProblem {
  Input2 target{0.0, 0.0};
  Input2 weights{1.0, 1.0};
  std::vector<HalfPlane> constraints;
  Input2 lower{-1.0, -1.0};
  Input2 upper{1.0, 1.0};
};

struct QpResult {
  bool feasible = false;
  Input2 u{0.0, 0.0};
  double cost = 0.0;
};

/// Exact solver for the two-variable strictly convex QP.
///
/// The optimum is the W-metric projection of the target onto the face spanned by its
/// active set, so it is found by enumerating the empty set, every single constraint and
/// every pair of constraints (box sides included) and keeping the cheapest feasible
/// candidate. Ties go to the lexicographically smallest u. Weights must be positive.
QpResult solve_convex_subproblem(const QpProblem& qp);

}  // namespace pecbf
