#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cascade/engine.hpp"
#include "cascade/sweep.hpp"
#include "cascade/types.hpp"

namespace cascade {

namespace fs = std::filesystem;

// Operating-point CSV. Columns, with k the reporting index (reference = 0) of
// each stage in execution order:
//   th_k per non-final stage, error, accuracy, cost_norm, cost_total_ops,
//   rho_k per non-final stage, decided_k/correct_k/misclassified_k per stage.
std::string operating_points_csv(const std::vector<OperatingPoint>& points);
void write_front(const std::vector<OperatingPoint>& front, const fs::path& path);
void write_sweep(const SweepResult& sweep, const fs::path& path);
std::vector<OperatingPoint> read_operating_points(const fs::path& path);

struct ProfitabilityBound {
    std::string stage;
    std::string next_stage;
    double bound = 0.0;
};

struct Summary {
    std::vector<std::string> stage_names;
    std::vector<double> stage_costs;
    std::vector<double> stage_accuracies;
    double reference_accuracy = 0.0;
    double reference_cost_ops = 0.0;
    std::optional<double> reduction_at_ref;
    std::optional<double> reduction_at_99;
    double best_accuracy = 0.0;
    double best_accuracy_cost_norm = 0.0;
    bool exceeds_reference = false;
    std::vector<ProfitabilityBound> bounds;
    std::size_t front_size = 0;

    std::string metric;
    std::string normalization;
    std::size_t grid_points = 0;
    bool pass_all = true;
    std::string cost_preset;
    // Command-line overrides applied on top of the config file.
    std::vector<std::pair<std::string, std::string>> overrides;
};

inline constexpr double kRelaxedAccuracyFraction = 0.99;

Summary summarize(const std::vector<OperatingPoint>& front, const CascadeConfig& config,
                  const std::vector<double>& stage_accuracies);

std::string summary_to_json(const Summary& summary);
void write_summary(const Summary& summary, const fs::path& path);
/// Human-readable table with the reference and both cost reductions.
std::string format_summary_table(const Summary& summary);

using LabeledFront = std::pair<std::string, std::vector<OperatingPoint>>;

/// Error over log-scaled normalized cost, one series per front.
std::string render_pareto_svg(const std::vector<LabeledFront>& fronts);
void plot_pareto(const std::vector<LabeledFront>& fronts, const fs::path& path);

/// Decade range [lo, hi] (powers of ten) covering the given positive values.
std::pair<int, int> log_decades(double min_value, double max_value);

struct BreakdownRow {
    double threshold = 0.0;
    double first_correct = 0.0;  // fractions of all samples
    double first_misclassified = 0.0;
    double reference_correct = 0.0;
    double reference_misclassified = 0.0;
    double cost_norm = 0.0;
};

/// Per-threshold stage fractions of a 2-stage sweep; throws std::invalid_argument otherwise.
std::vector<BreakdownRow> stage_breakdown(const SweepResult& sweep);
std::string render_stage_breakdown_svg(const SweepResult& sweep,
                                       const std::vector<std::string>& stage_names);
void plot_stage_breakdown(const SweepResult& sweep, const std::vector<std::string>& stage_names,
                          const fs::path& path);

}  // namespace cascade
