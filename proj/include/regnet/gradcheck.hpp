#pragma once

// Central finite-difference checks of the backward passes.
//
// Every graph here is piecewise quadratic in its leaves (piecewise linear
// layers under a Euclidean loss), so a central difference is exact up to
// rounding unless a ReLU or max-pool switch lies within the step. Entries
// whose h/2, h and 2h differences disagree, or whose one-sided slopes
// disagree (a max-pool tie exactly at the point), are treated as sitting on
// such a kink and skipped.

#include <cstdint>
#include <string>
#include <vector>

#include "regnet/model.hpp"

namespace regnet {

struct GradCheckResult {
  std::string name;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  int checked = 0;
  int skipped = 0;  // entries on a kink

  bool passed() const { return checked > 0 && max_relative_error <= tolerance; }
};

struct GradCheckSettings {
  double step = 1e-5;
  double floor = 1e-6;  // denominator floor of the relative error
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Every layer on `shapes_per_layer` random shapes, in double precision.
/// One result per (layer, shape).
std::vector<GradCheckResult> layer_gradient_suite(std::uint64_t seed, int shapes_per_layer = 5,
                                                  const GradCheckSettings& settings = {});

/// Gradient of the Euclidean loss of a RegNet with respect to sampled input
/// pixels (both streams) and first-layer weights.
GradCheckResult end_to_end_gradient_check(const RegNetConfig& config, std::uint64_t seed, int input_entries = 24,
                                          int weight_entries = 12, double tolerance = 1e-3,
                                          const GradCheckSettings& settings = {});

}  // namespace regnet
