#include "cascade/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cascade {

namespace {

SweepResult empty_result(const PreparedCascade& prepared, const ThresholdGrid& grid) {
    SweepResult r;
    r.grid = grid;
    r.metric = prepared.metric;
    r.normalization = prepared.normalization;
    return r;
}

int thread_count(const SweepOptions& options) {
#ifdef _OPENMP
    return options.jobs > 0 ? options.jobs : omp_get_max_threads();
#else
    (void)options;
    return 1;
#endif
}

// Largest grid index k with conf >= values[k], plus one; 0 when conf < values[0].
std::size_t grid_bin(double conf, const std::vector<double>& values) {
    const std::size_t p = values.size();
    const double steps = static_cast<double>(p - 1);
    double guess = std::floor(conf * steps);
    std::ptrdiff_t k = guess < 0.0 ? -1 : static_cast<std::ptrdiff_t>(std::min(guess, steps));
    while (k + 1 < static_cast<std::ptrdiff_t>(p) && conf >= values[static_cast<std::size_t>(k + 1)]) ++k;
    while (k >= 0 && conf < values[static_cast<std::size_t>(k)]) --k;
    return static_cast<std::size_t>(k + 1);
}

// Cumulative weight tables over the bins of the first m non-final stages:
// table[k_0..k_{m-1}] sums the weight of samples with bin_d <= k_d for all d,
// i.e. samples passed on by every one of those stages.
struct PrefixTable {
    std::vector<std::uint64_t> count;
    std::vector<std::uint64_t> correct_prev;  // weighted by correctness of stage m-1
    std::vector<std::uint64_t> correct_cur;   // weighted by correctness of stage m
};

void prefix_sum_all_dims(std::vector<std::uint64_t>& a, std::size_t dim_size, std::size_t dims) {
    std::size_t stride = 1;
    for (std::size_t d = 0; d < dims; ++d) {
        for (std::size_t cell = 0; cell < a.size(); ++cell) {
            if ((cell / stride) % dim_size != 0) a[cell] += a[cell - stride];
        }
        stride *= dim_size;
    }
}

}  // namespace

std::vector<double> threshold_settings(const ThresholdGrid& grid) {
    std::vector<double> s = grid.values();
    if (grid.include_pass_all) s.push_back(kPassAll);
    return s;
}

std::size_t sweep_size(const ThresholdGrid& grid, std::size_t n_stages, std::size_t max_points) {
    const std::size_t k = grid.settings_per_stage();
    std::size_t total = 1;
    for (std::size_t i = 0; i + 1 < n_stages; ++i) {
        if (total > max_points / k) {
            throw ResourceLimitError("sweep over " + std::to_string(n_stages - 1) + " thresholds with " +
                                     std::to_string(k) + " settings each exceeds the cap of " +
                                     std::to_string(max_points) + " points");
        }
        total *= k;
    }
    if (total > max_points) {
        throw ResourceLimitError("sweep size " + std::to_string(total) + " exceeds the cap of " +
                                 std::to_string(max_points) + " points");
    }
    return total;
}

ThresholdVector combination(const std::vector<double>& settings, std::size_t n_thresholds,
                            std::size_t flat_index) {
    ThresholdVector th(n_thresholds);
    for (std::size_t d = n_thresholds; d-- > 0;) {
        th[d] = settings[flat_index % settings.size()];
        flat_index /= settings.size();
    }
    return th;
}

SweepResult sweep_serial(const PreparedCascade& prepared, const ThresholdGrid& grid,
                         const SweepOptions& options) {
    const std::size_t total = sweep_size(grid, prepared.n_stages(), options.max_points);
    const auto settings = threshold_settings(grid);
    SweepResult r = empty_result(prepared, grid);
    r.points.reserve(total);
    for (std::size_t f = 0; f < total; ++f) {
        r.points.push_back(evaluate(prepared, combination(settings, prepared.n_stages() - 1, f)));
    }
    return r;
}

SweepResult sweep(const PreparedCascade& prepared, const ThresholdGrid& grid,
                  const SweepOptions& options) {
    const std::size_t total = sweep_size(grid, prepared.n_stages(), options.max_points);
    const auto settings = threshold_settings(grid);
    const std::size_t n_th = prepared.n_stages() - 1;
    SweepResult r = empty_result(prepared, grid);
    r.points.resize(total);

    const auto n = static_cast<std::int64_t>(total);
#pragma omp parallel for schedule(dynamic, 16) num_threads(thread_count(options))
    for (std::int64_t f = 0; f < n; ++f) {
        r.points[static_cast<std::size_t>(f)] =
            evaluate(prepared, combination(settings, n_th, static_cast<std::size_t>(f)));
    }
    return r;
}

SweepResult sweep_accelerated(const PreparedCascade& prepared, const ThresholdGrid& grid,
                              const SweepOptions& options) {
    if (!grid.is_equidistant()) {
        throw std::invalid_argument("accelerated sweep requires an equidistant grid");
    }
    const std::size_t total = sweep_size(grid, prepared.n_stages(), options.max_points);
    const auto values = grid.values();
    const auto settings = threshold_settings(grid);
    const std::size_t n_stages = prepared.n_stages();
    const std::size_t n_th = n_stages - 1;
    const std::size_t n = prepared.n_samples;
    const std::size_t dim = values.size() + 1;

    std::size_t cells = 1;
    for (std::size_t m = 0; m < n_th; ++m) {
        if (cells > options.max_points / dim) {
            throw ResourceLimitError("accelerated sweep tables exceed the point cap");
        }
        cells *= dim;
    }

    std::vector<std::vector<std::size_t>> bins(n_th, std::vector<std::size_t>(n));
    for (std::size_t s = 0; s < n_th; ++s) {
        const auto& conf = prepared.stages[s].confidence;
        for (std::size_t i = 0; i < n; ++i) bins[s][i] = grid_bin(conf[i], values);
    }

    // tables[m] covers the first m non-final stages, m = 1..n_th.
    std::vector<PrefixTable> tables(n_th + 1);
    std::vector<std::size_t> flat(n, 0);
    std::size_t size = 1;
    for (std::size_t m = 1; m <= n_th; ++m) {
        size *= dim;
        auto& t = tables[m];
        t.count.assign(size, 0);
        t.correct_prev.assign(size, 0);
        t.correct_cur.assign(size, 0);
        const auto& prev_correct = prepared.stages[m - 1].correct;
        const auto& cur_correct = prepared.stages[m].correct;
        for (std::size_t i = 0; i < n; ++i) {
            flat[i] = flat[i] * dim + bins[m - 1][i];
            ++t.count[flat[i]];
            t.correct_prev[flat[i]] += prev_correct[i];
            t.correct_cur[flat[i]] += cur_correct[i];
        }
        prefix_sum_all_dims(t.count, dim, m);
        prefix_sum_all_dims(t.correct_prev, dim, m);
        prefix_sum_all_dims(t.correct_cur, dim, m);
    }
    std::uint64_t first_correct = 0;
    for (auto c : prepared.stages[0].correct) first_correct += c;

    SweepResult r = empty_result(prepared, grid);
    r.points.resize(total);
    const auto k = settings.size();

#pragma omp parallel for schedule(static) num_threads(thread_count(options))
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(total); ++f) {
        // Setting index k_d doubles as the table coordinate: pass iff bin <= k_d.
        std::vector<std::size_t> digits(n_th);
        std::size_t rest = static_cast<std::size_t>(f);
        for (std::size_t d = n_th; d-- > 0;) {
            digits[d] = rest % k;
            rest /= k;
        }
        std::vector<std::size_t> idx(n_th + 1, 0);
        for (std::size_t m = 1; m <= n_th; ++m) idx[m] = idx[m - 1] * dim + digits[m - 1];

        std::vector<std::uint64_t> reached(n_stages);
        reached[0] = n;
        for (std::size_t m = 1; m <= n_th; ++m) reached[m] = tables[m].count[idx[m]];

        std::vector<StageCounts> counts(n_stages);
        for (std::size_t j = 0; j < n_stages; ++j) {
            auto& c = counts[j];
            const std::uint64_t entered_correct = j == 0 ? first_correct : tables[j].correct_cur[idx[j]];
            if (j + 1 < n_stages) {
                c.decided = reached[j] - reached[j + 1];
                c.correct = entered_correct - tables[j + 1].correct_prev[idx[j + 1]];
            } else {
                c.decided = reached[j];
                c.correct = entered_correct;
            }
            c.misclassified = c.decided - c.correct;
        }
        ThresholdVector th(n_th);
        for (std::size_t d = 0; d < n_th; ++d) th[d] = settings[digits[d]];
        r.points[static_cast<std::size_t>(f)] =
            make_operating_point(prepared, std::move(th), reached, std::move(counts));
    }
    return r;
}

std::vector<OperatingPoint> pareto_front(std::vector<OperatingPoint> points) {
    if (points.empty()) throw std::invalid_argument("pareto_front: empty input");
    std::sort(points.begin(), points.end(), [](const OperatingPoint& a, const OperatingPoint& b) {
        if (a.cost_norm != b.cost_norm) return a.cost_norm < b.cost_norm;
        if (a.error != b.error) return a.error < b.error;
        return a.thresholds < b.thresholds;
    });
    std::vector<OperatingPoint> front;
    for (auto& p : points) {
        if (front.empty() || p.error < front.back().error) front.push_back(std::move(p));
    }
    return front;
}

}  // namespace cascade
