#include "pecbf/nominal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pecbf {
namespace {

double wrap_angle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

double LaneChangeReference::y_ref(double x) const {
  return y_start + (y_target - y_start) * logistic((x - x_mid) / length);
}

double LaneChangeReference::heading_ref(double x) const {
  const double s = logistic((x - x_mid) / length);
  return std::atan((y_target - y_start) * s * (1.0 - s) / length);
}

namespace {

VehicleInput lane_change_input(const VehicleState& ego, const VehicleParams& params,
                               const LaneChangeReference& ref, double v_ref) {
  const double v = std::max(ego.v, 1.0);
  const double w = ref.lateral_omega;
  const double k_e = w * w * params.l_r / (v * v);
  const double k_psi = (2.0 * ref.lateral_zeta * w / v - k_e) * params.l_r;
  const double e = ego.y - ref.y_ref(ego.x);
  const double e_psi = wrap_angle(ego.psi - ref.heading_ref(ego.x));
  VehicleInput u;
  u.beta = -(k_e * e + k_psi * e_psi);
  u.a = ref.speed_gain * (v_ref - ego.v);
  return params.clamp(u);
}

}  // namespace

VehicleInput nominal_lane_change(const VehicleState& ego, const VehicleParams& params,
                                 const LaneChangeReference& ref) {
  return lane_change_input(ego, params, ref, ref.v_set);
}

VehicleInput nominal_lane_change(const VehicleState& ego, const VehicleParams& params,
                                 const LaneChangeReference& ref, const MergeGap& gap) {
  const double v_gap = 0.5 * (gap.v_front + gap.v_back);
  const double x_gap = 0.5 * (gap.x_front + gap.x_back);
  return lane_change_input(ego, params, ref, v_gap + ref.gap_gain * (x_gap - ego.x));
}

double tracking_cost(const VehicleState& ego, const VehicleParams& params,
                     const ReferencePath& path, const TrackerOptions& opts,
                     const VehicleInput& u, const std::vector<PredictedVehicle>& others) {
  VehicleState s = ego;
  std::vector<VehicleState> o;
  if (opts.w_clearance > 0.0) {
    for (const auto& p : others) o.push_back(p.state);
  }
  double cost = 0.0;
  for (int k = 0; k < opts.horizon; ++k) {
    s = step(s, u, {0.0, 0.0}, opts.dt, params).state;
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] = step(o[i], others[i].input, {0.0, 0.0}, opts.dt, others[i].params).state;
      const double h = intersection::h_o(intersection::planar_pair(
          s, params, o[i], others[i].params, others[i].input, opts.pair));
      if (h < opts.clearance) cost += opts.w_clearance * (opts.clearance - h) * (opts.clearance - h);
    }
    const auto pr = path.project(s.x, s.y);
    const double eh = wrap_angle(s.psi - pr.heading);
    const double ev = s.v - opts.v_ref;
    cost += opts.w_lateral * pr.lateral * pr.lateral + opts.w_heading * eh * eh +
            opts.w_speed * ev * ev;
  }
  return cost;
}

VehicleInput nominal_intersection(const VehicleState& ego, const VehicleParams& params,
                                  const ReferencePath& path, const TrackerOptions& opts,
                                  const std::vector<PredictedVehicle>& others) {
  double a_lo = params.a_min, a_hi = params.a_max;
  double b_lo = params.beta_min, b_hi = params.beta_max;
  VehicleInput best{0.0, 0.0};
  double best_cost = tracking_cost(ego, params, path, opts, params.clamp(best), others);
  best = params.clamp(best);
  for (int round = 0; round <= opts.refinements; ++round) {
    const int na = std::max(2, opts.lattice_a);
    const int nb = std::max(2, opts.lattice_beta);
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < nb; ++j) {
        const VehicleInput u{a_lo + (a_hi - a_lo) * i / (na - 1),
                             b_lo + (b_hi - b_lo) * j / (nb - 1)};
        const double c = tracking_cost(ego, params, path, opts, u, others);
        if (c < best_cost) {
          best_cost = c;
          best = u;
        }
      }
    }
    const double da = (a_hi - a_lo) / (na - 1);
    const double db = (b_hi - b_lo) / (nb - 1);
    a_lo = std::max(params.a_min, best.a - da);
    a_hi = std::min(params.a_max, best.a + da);
    b_lo = std::max(params.beta_min, best.beta - db);
    b_hi = std::min(params.beta_max, best.beta + db);
  }
  return best;
}

}  // namespace pecbf
