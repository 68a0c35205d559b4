#pragma once

#include <array>
#include <vector>

namespace pecbf {

/// Two-dimensional input vector (a, beta) for the vehicle models in this library.
using Input2 = std::array<double, 2>;

inline double dot(const Input2& a, const Input2& b) { return a[0] * b[0] + a[1] * b[1]; }

/// Barrier value and derivatives along the dynamics.
///
/// The second derivative is affine in the input: h_ddot(u) = c0 + c_u . u.
struct BarrierEval {
  double h = 0.0;
  double h_dot = 0.0;
  double c0 = 0.0;
  Input2 c_u{0.0, 0.0};
  int degree = 2;

  double h_ddot(const Input2& u) const { return c0 + dot(c_u, u); }
};

/// Exponential CBF gains derived from a positive pole pair.
///
/// Poles are the negated eigenvalues of the closed-loop stack matrix, so
/// k1 = p1 * p2 and k2 = p1 + p2.
struct EcbfGains {
  double p1 = 1.0;
  double p2 = 1.0;
  double k1 = 1.0;
  double k2 = 2.0;

  bool operator==(const EcbfGains&) const = default;
};

/// Throws std::invalid_argument unless both poles are positive and finite.
EcbfGains gains_from_poles(double p1, double p2);

/// h_ddot(u) + k2 * h_dot + k1 * h. Non-negative iff the eCBF condition holds.
double ecbf_residual(const BarrierEval& be, const EcbfGains& g, const Input2& u);

/// Product-form residuals of the three safety conditions for a degree-2 barrier.
///
/// r_p1 = v1 = h_dot + p1 h, r_p2 = v1_dot + p2 v1 with v1_dot = h_ddot + p1 h_dot.
/// For h > 0 all three being non-negative is equivalent to the pole conditions.
struct Lemma1Residuals {
  double r_ecbf = 0.0;
  double r_p1 = 0.0;
  double r_p2 = 0.0;

  bool satisfied() const { return r_ecbf >= 0.0 && r_p1 >= 0.0 && r_p2 >= 0.0; }
};

Lemma1Residuals lemma1_residuals(const BarrierEval& be, const EcbfGains& g, const Input2& u);

/// Row-major dense matrix used for the generic barrier stack.
struct StackMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  double operator()(int r, int c) const { return data[static_cast<size_t>(r * cols + c)]; }
  double& operator()(int r, int c) { return data[static_cast<size_t>(r * cols + c)]; }
};

/// Chain-of-integrators matrices for a relative-degree-r barrier stack:
/// eta_b_dot = F eta_b + G h^(r).
StackMatrix stack_drift_matrix(int degree);
StackMatrix stack_input_matrix(int degree);

/// F - G K for a gain row K of length degree.
StackMatrix closed_loop_matrix(const std::vector<double>& gain_row);

/// Gain row whose closed loop has eigenvalues {-p_i}: coefficients of prod (s + p_i),
/// lowest order first. For two poles this is {p1 p2, p1 + p2}.
std::vector<double> gain_row_from_poles(const std::vector<double>& poles);

}  // namespace pecbf
