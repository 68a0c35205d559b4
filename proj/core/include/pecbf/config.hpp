#pragma once

#include <string>

#include "pecbf/scenario.hpp"

namespace pecbf {

/// Canonical JSON text of a spec. Every default is written out, so the text fully determines
/// a trial together with the trial index.
std::string spec_to_json(const ScenarioSpec& spec, int indent = -1);

/// Applies the keys present in a JSON config on top of base. Unknown keys, wrong types and
/// invalid values raise ConfigError. Layout:
///   scenario { kind, variant, dt, t_max, seed, plant }
///   noise { mean, sigma, noisy_others }       mean/sigma: number or [x, y]
///   controller { eta, desired_poles, input_weights, pole_min, pole_max, pole_grid_size,
///                pole_multipliers, refine_tol }
///   vehicle { l_r, b_x, b_y, a_min, a_max, beta_min, beta_max }
///   lane_change { ..., c1, c2 }   intersection { ..., c1, c2 }   tracker { ... }
/// If scenario.kind changes the kind, kind-specific defaults are re-seeded first.
ScenarioSpec spec_from_json(const std::string& text, const ScenarioSpec& base);

ScenarioSpec load_spec_file(const std::string& path, const ScenarioSpec& base);

/// FNV-1a of the canonical spec text.
std::uint64_t spec_hash(const ScenarioSpec& spec);

}  // namespace pecbf
