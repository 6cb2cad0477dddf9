#include "cascade/types.hpp"

#include <algorithm>
#include <numeric>

namespace cascade {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::pair<std::string_view, Enum> (&table)[N],
                std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    throw DataError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::pair<std::string_view, Precision> kPrecisionNames[] = {
    {"fp32", Precision::fp32}, {"fx32", Precision::fx32}, {"bin", Precision::bin}};

constexpr std::pair<std::string_view, Normalization> kNormalizationNames[] = {
    {"softmax", Normalization::softmax}, {"linear", Normalization::linear}};

constexpr std::pair<std::string_view, Metric> kMetricNames[] = {
    {"abs", Metric::abs}, {"bvsb", Metric::bvsb},     {"var", Metric::var},
    {"ent", Metric::ent}, {"kl_div", Metric::kl_div}, {"kurt", Metric::kurt}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum v, const std::pair<std::string_view, Enum> (&table)[N]) {
    for (const auto& [name, value] : table) {
        if (value == v) return name;
    }
    return "?";
}

}  // namespace

std::string_view to_string(Precision p) { return name_of(p, kPrecisionNames); }
std::string_view to_string(Normalization n) { return name_of(n, kNormalizationNames); }
std::string_view to_string(Metric m) { return name_of(m, kMetricNames); }

Precision parse_precision(std::string_view s) { return parse_enum(s, kPrecisionNames, "precision"); }
Normalization parse_normalization(std::string_view s) {
    return parse_enum(s, kNormalizationNames, "normalization");
}
Metric parse_metric(std::string_view s) { return parse_enum(s, kMetricNames, "metric"); }

std::vector<double> ThresholdGrid::values() const {
    if (!explicit_values.empty()) {
        std::vector<double> v = explicit_values;
        for (double t : v) {
            if (!(t >= 0.0 && t <= 1.0)) {
                throw DataError("explicit threshold outside [0,1]: " + std::to_string(t));
            }
        }
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        // The first-stage endpoint must always be reachable.
        if (v.front() != 0.0) v.insert(v.begin(), 0.0);
        return v;
    }
    if (points_per_stage < 2) {
        throw DataError("threshold grid needs at least 2 points per stage");
    }
    std::vector<double> v(points_per_stage);
    const double steps = static_cast<double>(points_per_stage - 1);
    for (std::size_t k = 0; k < points_per_stage; ++k) {
        v[k] = static_cast<double>(k) / steps;
    }
    return v;
}

std::size_t ThresholdGrid::settings_per_stage() const {
    return values().size() + (include_pass_all ? 1 : 0);
}

std::uint64_t OperatingPoint::n_samples() const {
    std::uint64_t n = 0;
    for (const auto& s : per_stage) n += s.decided;
    return n;
}

std::uint64_t OperatingPoint::n_correct() const {
    std::uint64_t n = 0;
    for (const auto& s : per_stage) n += s.correct;
    return n;
}

double OperatingPoint::accuracy() const {
    const auto n = n_samples();
    return n == 0 ? 0.0 : static_cast<double>(n_correct()) / static_cast<double>(n);
}

}  // namespace cascade
