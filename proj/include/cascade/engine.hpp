#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascade/types.hpp"

namespace cascade {

/// Per-stage confidences and correctness flags, computed once per cascade.
struct PreparedStage {
    std::string name;
    double cost_ops = 0.0;
    std::vector<double> confidence;
    std::vector<std::uint8_t> correct;
};

struct PreparedCascade {
    std::vector<PreparedStage> stages;  // execution order, reference last
    std::size_t n_samples = 0;
    Metric metric = Metric::bvsb;
    Normalization normalization = Normalization::softmax;

    std::size_t n_stages() const { return stages.size(); }
    std::size_t reference_index() const { return stages.size() - 1; }
    const PreparedStage& reference() const { return stages.back(); }
};

/// Loads every stage's scores and computes confidences and correctness.
PreparedCascade prepare(const CascadeConfig& config, const LabelVector& labels);

/// Same, from in-memory score matrices (one per stage, execution order).
PreparedCascade prepare(const CascadeConfig& config, const LabelVector& labels,
                        const std::vector<ScoreMatrix>& stage_scores);

/// Routes every sample to the first stage whose confidence clears its threshold.
OperatingPoint evaluate(const PreparedCascade& prepared, const ThresholdVector& th);

/// Naive per-sample replay of the routing rule. Reference for tests.
OperatingPoint evaluate_replay_oracle(const PreparedCascade& prepared, const ThresholdVector& th);

/// Builds an OperatingPoint from per-stage reach/decide counts.
/// reached[i] is the number of samples entering stage i.
OperatingPoint make_operating_point(const PreparedCascade& prepared, ThresholdVector th,
                                    const std::vector<std::uint64_t>& reached,
                                    std::vector<StageCounts> per_stage);

/// Standalone accuracy of one stage (fraction of samples it labels correctly).
double stage_accuracy(const PreparedStage& stage);

struct StageDiagnostic {
    std::size_t stage = 0;  // execution index
    double pass_on_prob = 0.0;
    double bound = 0.0;
    bool profitable = false;
};

/// Compares measured pass-on probabilities against pass_on_bound per stage pair.
std::vector<StageDiagnostic> check_profitability(const OperatingPoint& point,
                                                 const CascadeConfig& config);

struct SynthStageParams {
    double accuracy_target = 0.9;
    double confidence_sharpness = 4.0;
    double cost_ops = 1.0;
};

struct SynthFixture {
    CascadeConfig config;
    LabelVector labels;
    std::vector<ScoreMatrix> scores;  // one per stage, execution order
};

/// Deterministic synthetic cascade data. Each stage labels exactly
/// round(accuracy_target * n) samples correctly; correct rows get a larger
/// argmax margin as confidence_sharpness grows (0 makes confidence uninformative).
SynthFixture synth_fixture(std::uint64_t seed, std::size_t n_samples, std::size_t n_labels,
                           const std::vector<SynthStageParams>& stage_params);

}  // namespace cascade
