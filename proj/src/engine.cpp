#include "cascade/engine.hpp"

#include <cmath>
#include <stdexcept>

#include "cascade/cost.hpp"
#include "cascade/io.hpp"
#include "cascade/metrics.hpp"

namespace cascade {

namespace {

void check_thresholds(const PreparedCascade& prepared, const ThresholdVector& th) {
    if (th.size() + 1 != prepared.n_stages()) {
        throw std::invalid_argument("expected " + std::to_string(prepared.n_stages() - 1) +
                                    " thresholds, got " + std::to_string(th.size()));
    }
    for (double t : th) {
        if (!is_pass_all(t) && !(t >= 0.0 && t <= 1.0)) {
            throw std::invalid_argument("threshold outside [0,1]: " + format_real(t));
        }
    }
}

PreparedStage prepare_stage(const StageSpec& spec, const ScoreMatrix& scores,
                            const LabelVector& labels, const CascadeConfig& config) {
    if (scores.n_samples != labels.size()) {
        throw DataError("stage '" + spec.name + "' has " + std::to_string(scores.n_samples) +
                        " samples but there are " + std::to_string(labels.size()) + " labels");
    }
    if (scores.n_labels != labels.n_labels) {
        throw DataError("stage '" + spec.name + "' has " + std::to_string(scores.n_labels) +
                        " outputs but the label space has " + std::to_string(labels.n_labels));
    }
    PreparedStage st;
    st.name = spec.name;
    st.cost_ops = spec.cost_ops;
    st.confidence = confidences(scores, config.normalization, config.metric);
    const LabelVector predicted = predicted_labels(scores);
    st.correct.resize(scores.n_samples);
    for (std::size_t i = 0; i < scores.n_samples; ++i) {
        st.correct[i] = predicted.labels[i] == labels.labels[i] ? 1 : 0;
    }
    return st;
}

}  // namespace

PreparedCascade prepare(const CascadeConfig& config, const LabelVector& labels,
                        const std::vector<ScoreMatrix>& stage_scores) {
    if (config.n_stages() < 2) throw DataError("cascade needs at least 2 stages");
    if (stage_scores.size() != config.n_stages()) {
        throw std::invalid_argument("one score matrix per stage required");
    }
    PreparedCascade pc;
    pc.n_samples = labels.size();
    pc.metric = config.metric;
    pc.normalization = config.normalization;
    for (std::size_t i = 0; i < config.n_stages(); ++i) {
        pc.stages.push_back(prepare_stage(config.stages[i], stage_scores[i], labels, config));
    }
    return pc;
}

PreparedCascade prepare(const CascadeConfig& config, const LabelVector& labels) {
    std::vector<ScoreMatrix> scores;
    scores.reserve(config.n_stages());
    for (const auto& st : config.stages) scores.push_back(load_scores(st.scores_path));
    return prepare(config, labels, scores);
}

OperatingPoint make_operating_point(const PreparedCascade& prepared, ThresholdVector th,
                                    const std::vector<std::uint64_t>& reached,
                                    std::vector<StageCounts> per_stage) {
    OperatingPoint op;
    op.thresholds = std::move(th);
    op.per_stage = std::move(per_stage);
    const double n = static_cast<double>(prepared.n_samples);

    op.error = 1.0 - op.accuracy();
    double cost = 0.0;
    for (std::size_t i = 0; i < prepared.n_stages(); ++i) {
        cost += (static_cast<double>(reached[i]) / n) * prepared.stages[i].cost_ops;
    }
    op.cost_total_ops = cost;
    op.cost_norm = cost / prepared.reference().cost_ops;

    op.pass_on_prob.resize(prepared.n_stages() - 1);
    for (std::size_t i = 0; i + 1 < prepared.n_stages(); ++i) {
        op.pass_on_prob[i] = reached[i] == 0 ? 0.0
                                             : static_cast<double>(reached[i + 1]) /
                                                   static_cast<double>(reached[i]);
    }
    return op;
}

OperatingPoint evaluate(const PreparedCascade& prepared, const ThresholdVector& th) {
    check_thresholds(prepared, th);
    const std::size_t n_stages = prepared.n_stages();
    std::vector<std::uint64_t> reached(n_stages, 0);
    std::vector<StageCounts> counts(n_stages);

    std::vector<std::uint32_t> active(prepared.n_samples);
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = static_cast<std::uint32_t>(i);
    std::vector<std::uint32_t> passed;
    passed.reserve(active.size());

    for (std::size_t s = 0; s < n_stages; ++s) {
        const auto& stage = prepared.stages[s];
        reached[s] = active.size();
        auto& c = counts[s];
        if (s + 1 == n_stages) {
            for (auto idx : active) c.correct += stage.correct[idx];
            c.decided = active.size();
        } else {
            const double t = th[s];
            passed.clear();
            for (auto idx : active) {
                if (stage.confidence[idx] >= t) {
                    c.correct += stage.correct[idx];
                    ++c.decided;
                } else {
                    passed.push_back(idx);
                }
            }
            active.swap(passed);
        }
        c.misclassified = c.decided - c.correct;
        if (active.empty()) break;
    }
    return make_operating_point(prepared, th, reached, std::move(counts));
}

OperatingPoint evaluate_replay_oracle(const PreparedCascade& prepared, const ThresholdVector& th) {
    check_thresholds(prepared, th);
    const std::size_t n_stages = prepared.n_stages();
    const std::size_t last = n_stages - 1;

    OperatingPoint op;
    op.thresholds = th;
    op.per_stage.assign(n_stages, StageCounts{});
    std::vector<std::uint64_t> reached(n_stages, 0);

    for (std::size_t sample = 0; sample < prepared.n_samples; ++sample) {
        for (std::size_t s = 0; s < n_stages; ++s) {
            ++reached[s];
            const auto& stage = prepared.stages[s];
            const bool decide = s == last || (!is_pass_all(th[s]) && stage.confidence[sample] >= th[s]);
            if (!decide) continue;
            ++op.per_stage[s].decided;
            if (stage.correct[sample]) {
                ++op.per_stage[s].correct;
            } else {
                ++op.per_stage[s].misclassified;
            }
            break;
        }
    }

    std::uint64_t correct = 0;
    for (const auto& c : op.per_stage) correct += c.correct;
    const double n = static_cast<double>(prepared.n_samples);
    op.error = 1.0 - static_cast<double>(correct) / n;
    op.cost_total_ops = 0.0;
    for (std::size_t s = 0; s < n_stages; ++s) {
        op.cost_total_ops += (static_cast<double>(reached[s]) / n) * prepared.stages[s].cost_ops;
    }
    op.cost_norm = op.cost_total_ops / prepared.stages[last].cost_ops;
    for (std::size_t s = 0; s < last; ++s) {
        op.pass_on_prob.push_back(reached[s] == 0 ? 0.0
                                                  : static_cast<double>(reached[s] - op.per_stage[s].decided) /
                                                        static_cast<double>(reached[s]));
    }
    return op;
}

double stage_accuracy(const PreparedStage& stage) {
    std::uint64_t correct = 0;
    for (auto c : stage.correct) correct += c;
    return static_cast<double>(correct) / static_cast<double>(stage.correct.size());
}

std::vector<StageDiagnostic> check_profitability(const OperatingPoint& point,
                                                 const CascadeConfig& config) {
    std::vector<StageDiagnostic> out;
    for (std::size_t s = 0; s + 1 < config.n_stages(); ++s) {
        StageDiagnostic d;
        d.stage = s;
        d.pass_on_prob = point.pass_on_prob.at(s);
        d.bound = pass_on_bound(config.stages[s].cost_ops, config.stages[s + 1].cost_ops);
        d.profitable = d.pass_on_prob <= d.bound;
        out.push_back(d);
    }
    return out;
}

}  // namespace cascade
