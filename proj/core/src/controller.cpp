#include "pecbf/controller.hpp"

#include "pecbf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>

namespace pecbf {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Proposed: return "proposed";
    case Variant::DetNoKopt: return "det_noKopt";
    case Variant::DetKopt: return "det_Kopt";
    case Variant::ProbNoKopt: return "prob_noKopt";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  if (s == "proposed") return Variant::Proposed;
  if (s == "det_noKopt" || s == "B2") return Variant::DetNoKopt;
  if (s == "det_Kopt" || s == "B3") return Variant::DetKopt;
  if (s == "prob_noKopt" || s == "B4") return Variant::ProbNoKopt;
  throw std::invalid_argument("unknown controller variant: " + s);
}

void ControllerConfig::validate() const {
  if (!(c1 >= 0.0 && c2 >= 0.0) || (c1 == 0.0 && c2 == 0.0)) {
    throw std::invalid_argument("objective weights must be >= 0 and not both zero");
  }
  if (!(input_weights[0] > 0.0 && input_weights[1] > 0.0)) {
    throw std::invalid_argument("input weights must be positive");
  }
  if (probabilistic && !(eta > 0.5 && eta < 1.0)) {
    throw std::invalid_argument("confidence eta must lie in (0.5, 1)");
  }
  if (!(pole_min > 0.0 && pole_min < pole_max)) {
    throw std::invalid_argument("pole range must satisfy 0 < pole_min < pole_max");
  }
  for (double p : desired_poles) {
    if (!(p >= pole_min && p <= pole_max)) {
      throw std::invalid_argument("desired poles must lie inside the pole range");
    }
  }
  if (pole_grid_size < 2) throw std::invalid_argument("pole_grid_size must be >= 2");
  for (double m : pole_multipliers) {
    if (!(m > 0.0)) throw std::invalid_argument("pole multipliers must be positive");
  }
  if (!(refine_tol > 0.0)) throw std::invalid_argument("refine_tol must be positive");
}

ControllerConfig ControllerConfig::with_variant(Variant v) const {
  ControllerConfig c = *this;
  c.probabilistic = v == Variant::Proposed || v == Variant::ProbNoKopt;
  c.kalpha_opt = v == Variant::Proposed || v == Variant::DetKopt;
  return c;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kResidualTol = 1e-9;

struct Option {
  double p1 = 0.0;
  double p2 = 0.0;
  double offset = 0.0;
  double cost = 0.0;
  int branch = 0;
};

double pole_cost(double p1, double p2, const ControllerConfig& cfg) {
  const double d1 = p1 - cfg.desired_poles[0];
  const double d2 = p2 - cfg.desired_poles[1];
  return d1 * d1 + d2 * d2;
}

double max_over_box(const Input2& n, const VehicleParams& b) {
  return std::max(n[0] * b.a_min, n[0] * b.a_max) + std::max(n[1] * b.beta_min, n[1] * b.beta_max);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<size_t>(n));
  const double l0 = std::log(lo);
  const double l1 = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

struct BarrierContext {
  const LiftedBarrier* lb = nullptr;
  double eta = 0.5;
  double reach = 0.0;
  const ControllerConfig* cfg = nullptr;

  bool in_box(double p1, double p2) const {
    return p1 >= cfg->pole_min && p1 <= cfg->pole_max && p2 >= cfg->pole_min &&
           p2 <= cfg->pole_max;
  }

  std::optional<Option> make(double p1, double p2) const {
    if (!in_box(p1, p2)) return std::nullopt;
    // fixed-gain variants are the classical eCBF-QP: pole conditions are design-time only
    if (cfg->kalpha_opt && lb->p1_residual(p1, eta) < 0.0) return std::nullopt;
    const auto off = lb->ecbf_offset(EcbfGains{p1, p2, p1 * p2, p1 + p2}, eta);
    if (!std::isfinite(off.value)) return std::nullopt;
    return Option{p1, p2, off.value, pole_cost(p1, p2, *cfg), off.branch};
  }
};

// Minimizes f over the pole box by a compass search with step halving.
std::array<double, 2> compass_search(const std::function<double(double, double)>& f,
                                     std::array<double, 2> p, double step, double tol) {
  static constexpr double dirs[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                        {1, 1},  {-1, -1}, {1, -1}, {-1, 1}};
  double fp = f(p[0], p[1]);
  int evals = 0;
  while (step > tol && evals < 4000) {
    double best = fp;
    std::array<double, 2> arg = p;
    for (const auto& d : dirs) {
      const double q1 = p[0] + step * d[0];
      const double q2 = p[1] + step * d[1];
      const double fq = f(q1, q2);
      ++evals;
      if (fq < best) {
        best = fq;
        arg = {q1, q2};
      }
    }
    if (best < fp) {
      fp = best;
      p = arg;
    } else {
      step *= 0.5;
    }
  }
  return p;
}

std::vector<Option> build_options(const BarrierContext& ctx) {
  const ControllerConfig& cfg = *ctx.cfg;
  const LiftedBarrier& lb = *ctx.lb;
  std::vector<Option> raw;
  if (lb.hard_infeasible && cfg.kalpha_opt) return raw;
  auto push = [&](double p1, double p2) {
    if (auto o = ctx.make(p1, p2); o && o->offset + ctx.reach >= -kResidualTol) raw.push_back(*o);
  };
  if (!cfg.kalpha_opt) {
    push(cfg.desired_poles[0], cfg.desired_poles[1]);
    return raw;
  }

  std::vector<double> p1s = log_grid(cfg.pole_min, cfg.pole_max, cfg.pole_grid_size);
  std::vector<double> p2s = p1s;
  for (double m : cfg.pole_multipliers) {
    p1s.push_back(m * cfg.desired_poles[0]);
    p2s.push_back(m * cfg.desired_poles[1]);
  }
  // the v1 condition is affine in p1; its root is where the feasible p1 range starts or ends
  if (lb.h != 0.0) {
    const double crit = -lb.p1_residual(0.0, ctx.eta) / lb.h;
    if (std::isfinite(crit)) {
      for (double c : {crit, crit * (1.0 + 1e-12)}) {
        if (c >= cfg.pole_min && c <= cfg.pole_max) p1s.push_back(c);
      }
    }
  }
  for (double p1 : p1s) {
    for (double p2 : p2s) push(p1, p2);
  }
  if (raw.empty()) {
    // feasibility rescue is impossible without any admissible p1 sample; probe the bound
    return raw;
  }

  // loosest constraint reachable from the best sample
  const auto loosest = std::max_element(raw.begin(), raw.end(), [](const Option& a, const Option& b) {
    return a.offset < b.offset;
  });
  auto neg_offset = [&](double p1, double p2) {
    auto o = ctx.make(p1, p2);
    return o ? -o->offset : kInf;
  };
  const auto pm = compass_search(neg_offset, {loosest->p1, loosest->p2},
                                 0.05 * std::max(1.0, loosest->p1), cfg.refine_tol);
  push(pm[0], pm[1]);

  // Pareto front: ascending cost, strictly increasing offset
  std::sort(raw.begin(), raw.end(), [](const Option& a, const Option& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.offset != b.offset) return a.offset > b.offset;
    return std::tie(a.p1, a.p2) < std::tie(b.p1, b.p2);
  });
  std::vector<Option> front;
  double best_offset = -kInf;
  for (const auto& o : raw) {
    if (o.offset > best_offset) {
      front.push_back(o);
      best_offset = o.offset;
    }
  }
  return front;
}

struct Search {
  const std::vector<std::vector<Option>>* options = nullptr;
  const std::vector<LiftedBarrier>* barriers = nullptr;
  QpProblem qp;
  double c1 = 1.0;
  double c2 = 1.0;
  std::vector<double> min_remaining;
  double best_total = kInf;
  std::vector<int> best_choice;
  int solves = 0;

  QpResult solve() {
    ++solves;
    return solve_convex_subproblem(qp);
  }

  void dfs(size_t level, double gain_cost, const QpResult& parent, std::vector<int>& choice) {
    const size_t m = options->size();
    if (level == m) {
      const double total = c1 * parent.cost + c2 * gain_cost;
      if (total < best_total) {
        best_total = total;
        best_choice = choice;
      }
      return;
    }
    const auto& opts = (*options)[level];
    const auto& lb = (*barriers)[level];
    for (size_t i = 0; i < opts.size(); ++i) {
      const double gc = gain_cost + opts[i].cost;
      if (c1 * parent.cost + c2 * (gc + min_remaining[level + 1]) >= best_total) break;
      const HalfPlane hp{lb.normal, opts[i].offset};
      const bool parent_ok = hp.residual(parent.u) >= -kResidualTol;
      qp.constraints.push_back(hp);
      const QpResult r = parent_ok ? parent : solve();
      if (r.feasible && c1 * r.cost + c2 * (gc + min_remaining[level + 1]) < best_total) {
        choice[level] = static_cast<int>(i);
        dfs(level + 1, gc, r, choice);
      }
      qp.constraints.pop_back();
      // looser options cost more and cannot move u any further
      if (parent_ok) break;
    }
  }
};

}  // namespace

ControllerDecision solve_safe_control(const VehicleInput& u_desired,
                                      std::span<const LiftedBarrier> barriers_in,
                                      const VehicleParams& bounds, const ControllerConfig& cfg) {
  cfg.validate();
  bounds.validate();
  if (!std::isfinite(u_desired.a) || !std::isfinite(u_desired.beta)) {
    throw std::invalid_argument("desired input is not finite");
  }

  std::vector<LiftedBarrier> barriers(barriers_in.begin(), barriers_in.end());
  double eta = cfg.eta;
  if (!cfg.probabilistic) {
    eta = 0.5;
    for (auto& b : barriers) b.noise = ScalarNoise{0.0, 0.0};
  }

  QpProblem base;
  base.target = u_desired.as_array();
  base.weights = cfg.input_weights;
  base.lower = {bounds.a_min, bounds.beta_min};
  base.upper = {bounds.a_max, bounds.beta_max};

  ControllerDecision out;
  const size_t m = barriers.size();
  out.barriers.resize(m);
  const EcbfGains desired =
      EcbfGains{cfg.desired_poles[0], cfg.desired_poles[1],
                cfg.desired_poles[0] * cfg.desired_poles[1],
                cfg.desired_poles[0] + cfg.desired_poles[1]};
  for (auto& bd : out.barriers) bd.gains = desired;

  std::vector<BarrierContext> ctx(m);
  std::vector<std::vector<Option>> options(m);
  for (size_t i = 0; i < m; ++i) {
    out.hard_infeasible = out.hard_infeasible || barriers[i].hard_infeasible;
    ctx[i] = BarrierContext{&barriers[i], eta, max_over_box(barriers[i].normal, bounds), &cfg};
    options[i] = build_options(ctx[i]);
  }
  const bool any_empty =
      std::any_of(options.begin(), options.end(), [](const auto& o) { return o.empty(); });

  Search search;
  search.options = &options;
  search.barriers = &barriers;
  search.qp = base;
  search.c1 = cfg.c1;
  search.c2 = cfg.c2;
  search.min_remaining.assign(m + 1, 0.0);
  for (size_t i = m; i-- > 0;) {
    search.min_remaining[i] =
        search.min_remaining[i + 1] + (options[i].empty() ? 0.0 : options[i].front().cost);
  }

  const QpResult root = search.solve();
  if (!any_empty) {
    std::vector<int> choice(m, 0);
    search.dfs(0, 0.0, root, choice);
  }
  out.qp_solves = search.solves;
  if (search.best_choice.empty() && m > 0) {
    out.feasible = false;
    out.u = VehicleInput{bounds.a_min, 0.0};
    out.objective = kInf;
    return out;
  }

  std::vector<std::array<double, 2>> poles(m);
  for (size_t i = 0; i < m; ++i) {
    const Option& o = options[i][static_cast<size_t>(search.best_choice[i])];
    poles[i] = {o.p1, o.p2};
  }

  auto assemble = [&](size_t skip, double sp1, double sp2, double& gain_cost) -> QpProblem {
    QpProblem qp = base;
    gain_cost = 0.0;
    for (size_t i = 0; i < m; ++i) {
      const double p1 = i == skip ? sp1 : poles[i][0];
      const double p2 = i == skip ? sp2 : poles[i][1];
      const auto off = barriers[i].ecbf_offset(EcbfGains{p1, p2, p1 * p2, p1 + p2}, eta);
      qp.constraints.push_back({barriers[i].normal, off.value});
      gain_cost += pole_cost(p1, p2, cfg);
    }
    return qp;
  };

  if (cfg.kalpha_opt && m > 0) {
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (size_t i = 0; i < m; ++i) {
        double gc0 = 0.0;
        const QpResult cur = solve_convex_subproblem(assemble(m, 0, 0, gc0));
        const bool active =
            HalfPlane{barriers[i].normal, barriers[i]
                                              .ecbf_offset(EcbfGains{poles[i][0], poles[i][1],
                                                                     poles[i][0] * poles[i][1],
                                                                     poles[i][0] + poles[i][1]},
                                                           eta)
                                              .value}
                .residual(cur.u) < 1e-6;
        if (!active && pole_cost(poles[i][0], poles[i][1], cfg) == 0.0) continue;
        auto f = [&](double p1, double p2) {
          if (!ctx[i].in_box(p1, p2) || barriers[i].p1_residual(p1, eta) < 0.0) return kInf;
          double gc = 0.0;
          const QpResult r = solve_convex_subproblem(assemble(i, p1, p2, gc));
          ++out.qp_solves;
          return r.feasible ? cfg.c1 * r.cost + cfg.c2 * gc : kInf;
        };
        const double step = 0.05 * std::max(0.2, std::max(poles[i][0], poles[i][1]));
        poles[i] = compass_search(f, poles[i], step, cfg.refine_tol);
      }
    }
  }

  double gain_cost = 0.0;
  const QpResult fin = solve_convex_subproblem(assemble(m, 0, 0, gain_cost));
  ++out.qp_solves;
  if (!fin.feasible) {
    // refinement never accepts an infeasible point, so this indicates a solver fault
    throw SolverError("safety filter: final subproblem infeasible after search");
  }
  out.feasible = true;
  out.u = VehicleInput::from(fin.u);
  out.objective = cfg.c1 * fin.cost + cfg.c2 * gain_cost;
  std::int64_t radix = 1;
  for (size_t i = 0; i < m; ++i) {
    auto& bd = out.barriers[i];
    bd.gains = EcbfGains{poles[i][0], poles[i][1], poles[i][0] * poles[i][1],
                         poles[i][0] + poles[i][1]};
    const auto off = barriers[i].ecbf_offset(bd.gains, eta);
    bd.branch = off.branch;
    bd.ecbf_residual = dot(barriers[i].normal, fin.u) + off.value;
    bd.p1_residual = barriers[i].p1_residual(poles[i][0], eta);
    out.branch_id += radix * off.branch;
    radix *= 3;
  }
  return out;
}

}  // namespace pecbf
