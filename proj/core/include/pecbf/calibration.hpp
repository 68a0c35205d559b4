#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pecbf {

/// Monte Carlo calibration of the tightened chance constraints. Each instance is a random
/// vehicle pair whose tightened constraint is put exactly on its boundary (through the input
/// for the eCBF families, through the pole for the gain families); the raw constraint is then
/// sampled under the noise model.
struct CalibrationOptions {
  int instances = 500;
  std::int64_t samples = 100000;
  std::vector<double> etas{0.99, 0.9999};
  std::uint64_t seed = 7;
  int jobs = 1;
  double slack = 0.01;
};

struct CalibrationResult {
  std::string family;
  double eta = 0.0;
  int instances = 0;
  double min_probability = 1.0;
  double mean_probability = 0.0;
  /// Instances whose estimate fell below eta - slack.
  int failures = 0;

  bool passed() const { return failures == 0; }
};

/// Families: lane_ecbf (quadratic, 1-D noise), intersection_ecbf (affine, 2-D noise),
/// lane_p1, lane_p2, intersection_p1, intersection_p2.
std::vector<std::string> calibration_families();

std::vector<CalibrationResult> run_calibration(const CalibrationOptions& opts);

/// Single family at a single confidence level.
CalibrationResult calibrate_family(const std::string& family, double eta,
                                   const CalibrationOptions& opts);

}  // namespace pecbf
