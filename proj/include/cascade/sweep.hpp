#pragma once

#include <cstddef>
#include <vector>

#include "cascade/engine.hpp"
#include "cascade/types.hpp"

namespace cascade {

struct SweepResult {
    std::vector<OperatingPoint> points;  // lexicographic over grid indices, first stage major
    ThresholdGrid grid;
    Metric metric = Metric::bvsb;
    Normalization normalization = Normalization::softmax;
};

struct SweepOptions {
    int jobs = 0;                      // 0 = OpenMP default
    std::size_t max_points = 10'000'000;
};

/// Threshold settings per stage: grid values, then kPassAll if enabled.
std::vector<double> threshold_settings(const ThresholdGrid& grid);

/// Number of grid combinations; throws ResourceLimitError above max_points.
std::size_t sweep_size(const ThresholdGrid& grid, std::size_t n_stages, std::size_t max_points);

/// Threshold vector for the flat combination index (first stage most significant).
ThresholdVector combination(const std::vector<double>& settings, std::size_t n_thresholds,
                            std::size_t flat_index);

/// Single-threaded reference sweep.
SweepResult sweep_serial(const PreparedCascade& prepared, const ThresholdGrid& grid,
                         const SweepOptions& options = {});

/// OpenMP sweep over grid combinations; identical output to sweep_serial.
SweepResult sweep(const PreparedCascade& prepared, const ThresholdGrid& grid,
                  const SweepOptions& options = {});

/// Histogram/prefix-sum sweep for equidistant grids. Throws std::invalid_argument
/// for explicit grids.
SweepResult sweep_accelerated(const PreparedCascade& prepared, const ThresholdGrid& grid,
                              const SweepOptions& options = {});

/// Dominance filter in (error, cost_norm); result sorted by ascending cost_norm
/// with strictly decreasing error. Throws std::invalid_argument on empty input.
std::vector<OperatingPoint> pareto_front(std::vector<OperatingPoint> points);

}  // namespace cascade
