#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "cascade/engine.hpp"

namespace cascade {

namespace {

// Distribution transforms are written out so fixtures are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform_open() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }
    std::size_t index(std::size_t n) {
        return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
    }
    double exponential() { return -std::log(uniform_open()); }
    double normal() {
        const double r = std::sqrt(-2.0 * std::log(uniform_open()));
        return r * std::cos(2.0 * std::numbers::pi * uniform());
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace

SynthFixture synth_fixture(std::uint64_t seed, std::size_t n_samples, std::size_t n_labels,
                           const std::vector<SynthStageParams>& stage_params) {
    if (n_samples < 1) throw std::invalid_argument("synth: n_samples must be >= 1");
    if (n_labels < 2) throw std::invalid_argument("synth: n_labels must be >= 2");
    if (stage_params.size() < 2) throw std::invalid_argument("synth: need at least 2 stages");
    const double chance = 1.0 / static_cast<double>(n_labels);
    for (const auto& p : stage_params) {
        if (!(p.accuracy_target > chance && p.accuracy_target <= 1.0)) {
            throw std::invalid_argument("synth: accuracy target must lie in (1/L, 1]");
        }
        if (!(p.confidence_sharpness >= 0.0)) {
            throw std::invalid_argument("synth: confidence sharpness must be >= 0");
        }
        if (!(p.cost_ops > 0.0)) throw std::invalid_argument("synth: cost must be > 0");
    }

    Rng rng(seed);
    SynthFixture fx;
    fx.labels.n_labels = n_labels;
    fx.labels.labels.resize(n_samples);
    for (auto& l : fx.labels.labels) l = static_cast<int>(rng.index(n_labels));

    std::vector<std::size_t> order(n_samples);
    for (std::size_t s = 0; s < stage_params.size(); ++s) {
        const auto& params = stage_params[s];

        for (std::size_t i = 0; i < n_samples; ++i) order[i] = i;
        for (std::size_t i = n_samples; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        const auto n_correct = static_cast<std::size_t>(
            std::llround(params.accuracy_target * static_cast<double>(n_samples)));
        std::vector<std::uint8_t> correct(n_samples, 0);
        for (std::size_t i = 0; i < n_correct; ++i) correct[order[i]] = 1;

        ScoreMatrix m;
        m.n_samples = n_samples;
        m.n_labels = n_labels;
        m.source_id = "synth_" + std::to_string(s);
        m.scores.resize(n_samples * n_labels);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const auto truth = static_cast<std::size_t>(fx.labels.labels[i]);
            const std::size_t predicted =
                correct[i] ? truth : (truth + 1 + rng.index(n_labels - 1)) % n_labels;
            auto row = m.row(i);
            double top_other = -1e300;
            for (std::size_t j = 0; j < n_labels; ++j) {
                row[j] = static_cast<float>(rng.normal());
                if (j != predicted) top_other = std::max(top_other, row[j]);
            }
            double margin = 0.05 + 0.5 * rng.exponential();
            if (correct[i]) margin += params.confidence_sharpness * rng.exponential();
            // Values are kept float-representable so the binary format round-trips.
            row[predicted] = static_cast<float>(top_other + margin);
        }
        fx.scores.push_back(std::move(m));

        StageSpec spec;
        spec.name = "synth_" + std::to_string(s);
        spec.cost_ops = params.cost_ops;
        spec.precision = Precision::fp32;
        spec.scores_path = spec.name + ".f32le";
        fx.config.stages.push_back(std::move(spec));
    }
    fx.config.labels_path = "labels.csv";
    return fx;
}

}  // namespace cascade
