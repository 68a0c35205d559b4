#include "pecbf/ecbf.hpp"

#include <cmath>
#include <stdexcept>

namespace pecbf {

EcbfGains gains_from_poles(double p1, double p2) {
  if (!(std::isfinite(p1) && std::isfinite(p2)) || p1 <= 0.0 || p2 <= 0.0) {
    throw std::invalid_argument("eCBF poles must be positive and finite");
  }
  return EcbfGains{p1, p2, p1 * p2, p1 + p2};
}

double ecbf_residual(const BarrierEval& be, const EcbfGains& g, const Input2& u) {
  if (be.degree != 2) throw std::invalid_argument("ecbf_residual expects a degree-2 barrier");
  return be.h_ddot(u) + g.k2 * be.h_dot + g.k1 * be.h;
}

Lemma1Residuals lemma1_residuals(const BarrierEval& be, const EcbfGains& g, const Input2& u) {
  if (be.degree != 2) throw std::invalid_argument("lemma1_residuals expects a degree-2 barrier");
  const double hdd = be.h_ddot(u);
  const double v1 = be.h_dot + g.p1 * be.h;
  const double v1_dot = hdd + g.p1 * be.h_dot;
  return Lemma1Residuals{hdd + g.k2 * be.h_dot + g.k1 * be.h, v1, v1_dot + g.p2 * v1};
}

StackMatrix stack_drift_matrix(int degree) {
  if (degree < 1) throw std::invalid_argument("relative degree must be >= 1");
  StackMatrix f{degree, degree, std::vector<double>(static_cast<size_t>(degree * degree), 0.0)};
  for (int i = 0; i + 1 < degree; ++i) f(i, i + 1) = 1.0;
  return f;
}

StackMatrix stack_input_matrix(int degree) {
  if (degree < 1) throw std::invalid_argument("relative degree must be >= 1");
  StackMatrix g{degree, 1, std::vector<double>(static_cast<size_t>(degree), 0.0)};
  g(degree - 1, 0) = 1.0;
  return g;
}

StackMatrix closed_loop_matrix(const std::vector<double>& gain_row) {
  const int r = static_cast<int>(gain_row.size());
  StackMatrix m = stack_drift_matrix(r);
  const StackMatrix g = stack_input_matrix(r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) m(i, j) -= g(i, 0) * gain_row[static_cast<size_t>(j)];
  }
  return m;
}

std::vector<double> gain_row_from_poles(const std::vector<double>& poles) {
  // coefficients of prod (s + p), highest order first during expansion
  std::vector<double> c{1.0};
  for (double p : poles) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("poles must be positive");
    std::vector<double> next(c.size() + 1, 0.0);
    for (size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] += c[i] * p;
    }
    c = std::move(next);
  }
  // drop the leading 1 and reverse so index 0 multiplies h
  std::vector<double> k(c.rbegin(), c.rend() - 1);
  return k;
}

}  // namespace pecbf
