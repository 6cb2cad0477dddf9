#include "cascade/cost.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace cascade {

PrecisionScale precision_scale_preset(std::string_view name) {
    if (name == "conservative") return PrecisionScale{0.7, 1e3};
    if (name == "aggressive") return PrecisionScale{0.7, 2000.0 / 0.7};
    throw DataError("unknown cost preset '" + std::string(name) + "'");
}

double scale_cost(double macs_fp32, Precision precision, const PrecisionScale& scale) {
    if (!(macs_fp32 > 0.0)) throw std::invalid_argument("MAC count must be positive");
    switch (precision) {
        case Precision::fp32: return macs_fp32;
        case Precision::fx32: return scale.fx32_factor * macs_fp32;
        case Precision::bin: return macs_fp32 / scale.bin_divisor;
    }
    throw std::invalid_argument("unknown precision tag");
}

double pass_on_bound(double c_current, double c_next) { return 1.0 - c_current / c_next; }

std::optional<double> cost_reduction(std::span<const OperatingPoint> front,
                                     double reference_accuracy, double reference_cost,
                                     double accuracy_fraction) {
    if (front.empty()) throw std::invalid_argument("cost_reduction: empty front");
    const double bar = accuracy_fraction * reference_accuracy;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : front) {
        if (p.accuracy() >= bar && p.cost_norm < best) best = p.cost_norm;
    }
    if (best == std::numeric_limits<double>::infinity()) return std::nullopt;
    return reference_cost / best;
}

}  // namespace cascade
