#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "cascade/types.hpp"

namespace cascade {

/// Named scale presets. "conservative" uses a 10^3 reduction for binary
/// networks; "aggressive" chains the fx32 factor with a 2000x fx32->bin factor.
PrecisionScale precision_scale_preset(std::string_view name);

double scale_cost(double macs_fp32, Precision precision, const PrecisionScale& scale = {});

/// Upper bound on the pass-on probability of a stage for it to save cost:
/// c_current + rho * c_next <= c_next.
double pass_on_bound(double c_current, double c_next);

/// Best cost reduction among points reaching accuracy_fraction * reference_accuracy.
/// Point costs are read from cost_norm, so reference_cost is in the same units
/// (1.0 for a normalized front). Empty when no point qualifies.
std::optional<double> cost_reduction(std::span<const OperatingPoint> front,
                                     double reference_accuracy, double reference_cost,
                                     double accuracy_fraction);

}  // namespace cascade
