#include "doctest.h"

#include <cmath>
#include <random>

#include "cascade/cost.hpp"
#include "cascade/engine.hpp"
#include "cascade/io.hpp"
#include "cascade/metrics.hpp"
#include "cascade/sweep.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cascade;
using cascade::testing::TempDir;

namespace {

PreparedCascade four_sample_cascade() {
    PreparedCascade pc;
    pc.n_samples = 4;
    PreparedStage a{"small", 10.0, {0.9, 0.8, 0.6, 0.55}, {1, 1, 1, 0}};
    PreparedStage b{"big", 100.0, {0.5, 0.5, 0.5, 0.5}, {1, 1, 1, 1}};
    pc.stages = {a, b};
    return pc;
}

void check_same(const OperatingPoint& a, const OperatingPoint& b) {
    CHECK(a.thresholds == b.thresholds);
    CHECK(a.per_stage == b.per_stage);
    CHECK(a.pass_on_prob == b.pass_on_prob);
    CHECK(std::abs(a.error - b.error) <= 1e-12);
    CHECK(std::abs(a.cost_norm - b.cost_norm) <= 1e-12 * std::max(1.0, b.cost_norm));
    CHECK(std::abs(a.cost_total_ops - b.cost_total_ops) <= 1e-12 * std::max(1.0, b.cost_total_ops));
}

ThresholdVector random_thresholds(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> pick(0, 12);
    ThresholdVector th;
    for (std::size_t i = 0; i < n; ++i) {
        const int k = pick(rng);
        th.push_back(k == 11 ? kPassAll : k == 12 ? 1.0 : static_cast<double>(k) / 10.0);
    }
    return th;
}

}  // namespace

TEST_CASE("two-stage example") {
    const auto pc = four_sample_cascade();

    const auto mid = evaluate(pc, {0.7});
    CHECK(mid.error == 0.0);
    CHECK(mid.cost_total_ops == doctest::Approx(60.0).epsilon(1e-15));
    CHECK(mid.cost_norm == doctest::Approx(0.6).epsilon(1e-15));
    REQUIRE(mid.pass_on_prob.size() == 1);
    CHECK(mid.pass_on_prob[0] == 0.5);
    CHECK(mid.per_stage[0] == StageCounts{2, 2, 0});
    CHECK(mid.per_stage[1] == StageCounts{2, 2, 0});

    const auto all_small = evaluate(pc, {0.0});
    CHECK(all_small.error == 0.25);
    CHECK(all_small.cost_norm == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(all_small.pass_on_prob[0] == 0.0);

    const auto all_big = evaluate(pc, {kPassAll});
    CHECK(all_big.error == 0.0);
    CHECK(all_big.cost_norm == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(all_big.pass_on_prob[0] == 1.0);
    CHECK(all_big.per_stage[0] == StageCounts{0, 0, 0});

    // conf >= th decides, including equality
    const auto edge = evaluate(pc, {0.6});
    CHECK(edge.per_stage[0].decided == 3);

    CHECK_THROWS_AS(evaluate(pc, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("evaluate matches the per-sample replay") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 2 + trial % 3;
        const std::size_t n = 1 + rng() % 200;
        const auto pc = oracle::random_cascade(rng, m, n);
        const auto th = random_thresholds(rng, m - 1);
        check_same(evaluate(pc, th), evaluate_replay_oracle(pc, th));
    }
}

TEST_CASE("routing invariants") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t m = 2 + trial % 3;
        const std::size_t n = 1 + rng() % 150;
        const auto pc = oracle::random_cascade(rng, m, n);
        const auto th = random_thresholds(rng, m - 1);
        const auto op = evaluate(pc, th);

        std::uint64_t decided = 0;
        for (const auto& c : op.per_stage) {
            CHECK(c.correct + c.misclassified == c.decided);
            decided += c.decided;
        }
        CHECK(decided == n);
        CHECK(op.accuracy() == doctest::Approx(1.0 - op.error));

        const double c_ref = pc.reference().cost_ops;
        double c_sum = 0.0;
        for (const auto& s : pc.stages) c_sum += s.cost_ops;
        CHECK(op.cost_norm >= pc.stages[0].cost_ops / c_ref * (1 - 1e-12));
        CHECK(op.cost_norm <= c_sum / c_ref * (1 + 1e-12));

        // Raising one threshold never decreases how many samples reach later stages.
        for (std::size_t s = 0; s + 1 < m; ++s) {
            auto higher = th;
            if (is_pass_all(higher[s])) continue;
            higher[s] = std::min(1.0, higher[s] + 0.25);
            const auto op2 = evaluate(pc, higher);
            for (std::size_t k = s + 1; k < m; ++k) {
                std::uint64_t r1 = 0, r2 = 0;
                for (std::size_t j = k; j < m; ++j) {
                    r1 += op.per_stage[j].decided;
                    r2 += op2.per_stage[j].decided;
                }
                CHECK(r2 >= r1);
            }
            CHECK(op2.cost_norm >= op.cost_norm);
        }
    }
}

TEST_CASE("the reference stage always decides") {
    std::mt19937_64 rng(5);
    const auto pc = oracle::random_cascade(rng, 3, 100);
    const auto op = evaluate(pc, {kPassAll, kPassAll});
    CHECK(op.per_stage[2].decided == 100);
    CHECK(op.cost_norm == doctest::Approx((pc.stages[0].cost_ops + pc.stages[1].cost_ops + pc.stages[2].cost_ops) /
                                          pc.stages[2].cost_ops));
    std::uint64_t ref_correct = 0;
    for (auto c : pc.stages[2].correct) ref_correct += c;
    CHECK(op.n_correct() == ref_correct);
}

TEST_CASE("prepare from files equals prepare from memory") {
    TempDir dir;
    const auto fx = synth_fixture(77, 300, 10, {{0.85, 4.0, 1.0}, {0.95, 4.0, 50.0}, {0.99, 4.0, 1000.0}});
    for (std::size_t i = 0; i < fx.scores.size(); ++i) save_scores(fx.scores[i], dir / fx.config.stages[i].scores_path);
    save_labels(fx.labels, dir / fx.config.labels_path);
    save_config(fx.config, dir / "cascade.json");

    const auto cfg = load_config(dir / "cascade.json");
    const auto labels = load_labels(cfg.labels_path, fx.scores[0].n_labels);
    const auto from_disk = prepare(cfg, labels);
    const auto in_memory = prepare(fx.config, fx.labels, fx.scores);
    REQUIRE(from_disk.n_stages() == 3);
    for (std::size_t s = 0; s < 3; ++s) {
        CHECK(from_disk.stages[s].confidence == in_memory.stages[s].confidence);
        CHECK(from_disk.stages[s].correct == in_memory.stages[s].correct);
        CHECK(from_disk.stages[s].cost_ops == in_memory.stages[s].cost_ops);
    }

    // correctness is argmax == label
    const auto pred = predicted_labels(fx.scores[1]);
    for (std::size_t i = 0; i < 300; ++i) {
        CHECK(in_memory.stages[1].correct[i] == (pred.labels[i] == fx.labels.labels[i] ? 1 : 0));
    }
}

TEST_CASE("prepare rejects inconsistent inputs") {
    const auto fx = synth_fixture(1, 50, 4, {{0.8, 4, 1}, {0.9, 4, 10}});
    auto short_labels = fx.labels;
    short_labels.labels.pop_back();
    CHECK_THROWS_AS(prepare(fx.config, short_labels, fx.scores), DataError);

    auto scores = fx.scores;
    scores.pop_back();
    CHECK_THROWS_AS(prepare(fx.config, fx.labels, scores), std::invalid_argument);
}

TEST_CASE("pass-on bound") {
    CHECK(pass_on_bound(410e3, 31e6) == doctest::Approx(0.98677419354838710).epsilon(1e-15));
    CHECK(pass_on_bound(10, 100) == doctest::Approx(0.9));
    CHECK(pass_on_bound(100, 100) == 0.0);
    CHECK(pass_on_bound(200, 100) < 0.0);

    CascadeConfig cfg;
    cfg.stages = {{"a", 10.0, Precision::fp32, "", {}}, {"b", 100.0, Precision::fp32, "", {}}};
    const auto pc = four_sample_cascade();
    auto diag = check_profitability(evaluate(pc, {0.7}), cfg);
    REQUIRE(diag.size() == 1);
    CHECK(diag[0].pass_on_prob == 0.5);
    CHECK(diag[0].bound == doctest::Approx(0.9));
    CHECK(diag[0].profitable);

    diag = check_profitability(evaluate(pc, {kPassAll}), cfg);
    CHECK_FALSE(diag[0].profitable);
}

TEST_CASE("synthetic fixtures are deterministic and hit their accuracy") {
    const std::vector<SynthStageParams> params{{0.5, 4.0, 1.0}, {0.9, 4.0, 10.0}, {0.99, 4.0, 100.0}};
    const auto a = synth_fixture(123, 2000, 10, params);
    const auto b = synth_fixture(123, 2000, 10, params);
    const auto c = synth_fixture(124, 2000, 10, params);
    CHECK(a.scores == b.scores);
    CHECK(a.labels == b.labels);
    CHECK(a.scores != c.scores);

    const auto pc = prepare(a.config, a.labels, a.scores);
    for (std::size_t s = 0; s < params.size(); ++s) {
        CHECK(std::abs(stage_accuracy(pc.stages[s]) - params[s].accuracy_target) <= 0.01);
        CHECK(pc.stages[s].cost_ops == params[s].cost_ops);
    }
    CHECK(a.config.reference().cost_ops == 100.0);

    CHECK_THROWS_AS(synth_fixture(1, 100, 10, {{0.9, 4, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(synth_fixture(1, 100, 10, {{0.05, 4, 1}, {0.9, 4, 2}}), std::invalid_argument);
}

TEST_CASE("uninformative confidence removes the cascade advantage") {
    const auto sharp = synth_fixture(9, 2000, 10, {{0.9, 6.0, 1.0}, {0.99, 6.0, 100.0}});
    const auto flat = synth_fixture(9, 2000, 10, {{0.9, 0.0, 1.0}, {0.99, 0.0, 100.0}});
    const ThresholdGrid grid;
    auto reduction = [&](const SynthFixture& fx) {
        const auto pc = prepare(fx.config, fx.labels, fx.scores);
        const auto front = pareto_front(sweep(pc, grid).points);
        return cost_reduction(front, stage_accuracy(pc.reference()), 1.0, 1.0).value_or(0.0);
    };
    const double r_sharp = reduction(sharp);
    const double r_flat = reduction(flat);
    CHECK(r_sharp > 2.0);
    CHECK(r_flat < 1.2);
}
