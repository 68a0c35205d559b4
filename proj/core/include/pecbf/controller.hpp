#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pecbf/ecbf.hpp"
#include "pecbf/qp.hpp"
#include "pecbf/stochastic.hpp"
#include "pecbf/vehicle.hpp"

namespace pecbf {

enum class Variant {
  Proposed,    // probabilistic constraints, per-step gain optimization
  DetNoKopt,   // deterministic constraints, fixed gains
  DetKopt,     // deterministic constraints, per-step gain optimization
  ProbNoKopt,  // probabilistic constraints, fixed gains
};

std::string to_string(Variant v);
/// Accepts the canonical names (proposed, det_noKopt, det_Kopt, prob_noKopt) and B2..B4.
Variant variant_from_string(const std::string& s);

struct ControllerConfig {
  double c1 = 1.0;
  double c2 = 0.1;
  /// Per-axis weights inside ||u - u_des||^2 (a in m/s^2, beta in rad).
  Input2 input_weights{1.0, 25.0};
  double eta = 0.99;
  std::array<double, 2> desired_poles{1.0, 1.0};
  bool probabilistic = true;
  bool kalpha_opt = true;
  /// Continuous pole search box.
  double pole_min = 0.01;
  double pole_max = 10.0;
  /// Log-spaced samples per pole axis used to seed the search.
  int pole_grid_size = 40;
  std::vector<double> pole_multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
  /// Stop size of the local pole refinement.
  double refine_tol = 1e-9;

  void validate() const;
  ControllerConfig with_variant(Variant v) const;
};

struct BarrierDecision {
  EcbfGains gains;
  int branch = 0;
  /// Tightened eCBF residual at the returned input.
  double ecbf_residual = 0.0;
  /// Tightened v1 >= 0 residual for the chosen p1.
  double p1_residual = 0.0;
};

struct ControllerDecision {
  VehicleInput u;
  std::vector<BarrierDecision> barriers;
  /// Base-3 encoding of the per-barrier branch indices (barrier 0 least significant).
  std::int64_t branch_id = 0;
  bool feasible = false;
  bool hard_infeasible = false;
  double objective = 0.0;
  int qp_solves = 0;
};

/// Per-step safety filter.
///
///   min  c1 ||u - u_des||_W^2 + c2 sum_m ||p_m - p*||^2
///   s.t. tightened eCBF condition of every barrier (affine in u for fixed poles)
///        tightened v1 >= 0 for every barrier, poles inside [pole_min, pole_max]
///        u inside the input box
///
/// Each barrier's constraint is normal_m . u + offset_m(p_m) >= 0. Pole candidates per barrier
/// are reduced to their (cost, offset) Pareto front, combinations are searched by branch and
/// bound over exact two-variable QPs, and the winning poles are then refined by a compass
/// search. Without gain optimization the poles are pinned to the desired values. In
/// deterministic mode the noise is dropped and eta is 0.5.
ControllerDecision solve_safe_control(const VehicleInput& u_desired,
                                      std::span<const LiftedBarrier> barriers,
                                      const VehicleParams& bounds, const ControllerConfig& cfg);

}  // namespace pecbf
