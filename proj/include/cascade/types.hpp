#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

/// Raised for malformed or inconsistent input data (score files, labels, configs).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a requested computation exceeds a configured size cap.
class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Precision { fp32, fx32, bin };
enum class Normalization { softmax, linear };
enum class Metric { abs, bvsb, var, ent, kl_div, kurt };

inline constexpr Metric kAllMetrics[] = {Metric::abs, Metric::bvsb, Metric::var,
                                         Metric::ent, Metric::kl_div, Metric::kurt};

std::string_view to_string(Precision p);
std::string_view to_string(Normalization n);
std::string_view to_string(Metric m);

// Parsers throw DataError on unknown names.
Precision parse_precision(std::string_view s);
Normalization parse_normalization(std::string_view s);
Metric parse_metric(std::string_view s);

/// Raw classifier outputs, one row of n_labels values per sample, row-major.
struct ScoreMatrix {
    std::size_t n_samples = 0;
    std::size_t n_labels = 0;
    std::vector<double> scores;
    std::string source_id;

    std::span<const double> row(std::size_t i) const {
        return {scores.data() + i * n_labels, n_labels};
    }
    std::span<double> row(std::size_t i) { return {scores.data() + i * n_labels, n_labels}; }

    bool operator==(const ScoreMatrix&) const = default;
};

struct LabelVector {
    std::vector<int> labels;
    std::size_t n_labels = 0;

    std::size_t size() const { return labels.size(); }
    bool operator==(const LabelVector&) const = default;
};

/// Multiplicative factors that convert fp32 MAC counts into comparable costs.
struct PrecisionScale {
    double fx32_factor = 0.7;
    double bin_divisor = 1e3;

    bool operator==(const PrecisionScale&) const = default;
};

struct StageSpec {
    std::string name;
    double cost_ops = 0.0;
    Precision precision = Precision::fp32;
    std::string scores_path;
    // When set, cost_ops is derived from macs through the config's PrecisionScale.
    std::optional<double> macs;

    bool operator==(const StageSpec&) const = default;
};

struct ThresholdGrid {
    std::size_t points_per_stage = 101;
    bool include_pass_all = true;
    std::vector<double> explicit_values;

    bool is_equidistant() const { return explicit_values.empty(); }
    /// Real-valued thresholds in ascending order; always starts at 0.
    std::vector<double> values() const;
    /// Number of settings per stage including the pass-all sentinel.
    std::size_t settings_per_stage() const;

    bool operator==(const ThresholdGrid&) const = default;
};

/// Stages are stored in execution order: cheapest first, reference last.
struct CascadeConfig {
    std::vector<StageSpec> stages;
    std::string labels_path;
    Normalization normalization = Normalization::softmax;
    Metric metric = Metric::bvsb;
    ThresholdGrid grid;
    std::string cost_preset = "conservative";
    PrecisionScale scale;

    std::size_t n_stages() const { return stages.size(); }
    const StageSpec& reference() const { return stages.back(); }

    bool operator==(const CascadeConfig&) const = default;
};

/// Sentinel threshold that forwards every sample to the next stage.
inline constexpr double kPassAll = std::numeric_limits<double>::infinity();

inline bool is_pass_all(double th) { return th == kPassAll; }

using ThresholdVector = std::vector<double>;

struct StageCounts {
    std::uint64_t decided = 0;
    std::uint64_t correct = 0;
    std::uint64_t misclassified = 0;

    bool operator==(const StageCounts&) const = default;
};

struct OperatingPoint {
    ThresholdVector thresholds;        // one per non-final stage
    double error = 0.0;                // 1 - accuracy
    double cost_norm = 0.0;            // per-sample cost / reference cost
    double cost_total_ops = 0.0;       // per-sample cost in ops
    std::vector<double> pass_on_prob;  // passed / reached, per non-final stage
    std::vector<StageCounts> per_stage;

    std::uint64_t n_samples() const;
    std::uint64_t n_correct() const;
    double accuracy() const;

    bool operator==(const OperatingPoint&) const = default;
};

/// Stage index in the reverse convention used for reporting: reference = 0.
inline std::size_t reporting_index(std::size_t exec_index, std::size_t n_stages) {
    return n_stages - 1 - exec_index;
}

}  // namespace cascade
