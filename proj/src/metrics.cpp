#include "cascade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cascade {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// KL divergence D(p || q) where q is the epsilon-smoothed delta at `peak`.
double kl_to_smoothed_delta(std::span<const double> p, std::size_t peak) {
    const std::size_t n = p.size();
    const double q_peak = 1.0 - kKlSmoothing;
    const double q_rest = kKlSmoothing / static_cast<double>(n - 1);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] <= 0.0) continue;
        const double q = (i == peak) ? q_peak : q_rest;
        d += p[i] * std::log(p[i] / q);
    }
    return d;
}

}  // namespace

void normalize_softmax(std::span<const double> x, std::span<double> out) {
    const double shift = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - shift);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
}

void normalize_linear(std::span<const double> x, std::span<double> out) {
    const double lo = *std::min_element(x.begin(), x.end());
    double den = 0.0;
    for (double v : x) den += v - lo;
    if (den < kLinearDenominatorEps) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(x.size()));
        return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - lo) / den;
}

std::vector<double> normalize_softmax(std::span<const double> x) {
    std::vector<double> out(x.size());
    normalize_softmax(x, out);
    return out;
}

std::vector<double> normalize_linear(std::span<const double> x) {
    std::vector<double> out(x.size());
    normalize_linear(x, out);
    return out;
}

double conf_abs(std::span<const double> p) { return *std::max_element(p.begin(), p.end()); }

double conf_bvsb(std::span<const double> p) {
    double best = -1.0, second = -1.0;
    for (double v : p) {
        if (v > best) {
            second = best;
            best = v;
        } else if (v > second) {
            second = v;
        }
    }
    return clamp01(best - second);
}

double conf_var(std::span<const double> p) {
    const double n = static_cast<double>(p.size());
    double mean = 0.0;
    for (double v : p) mean += v;
    mean /= n;
    double m2 = 0.0;
    for (double v : p) m2 += (v - mean) * (v - mean);
    m2 /= n;
    const double delta_var = (n - 1.0) / (n * n);
    return clamp01(m2 / delta_var);
}

double conf_ent(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return clamp01(1.0 - h / std::log(static_cast<double>(p.size())));
}

double conf_kl_div(std::span<const double> p) {
    const std::size_t n = p.size();
    const double d = kl_to_smoothed_delta(p, argmax(p));
    const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    const double d_max = kl_to_smoothed_delta(uniform, 0);
    return clamp01(1.0 - d / d_max);
}

double delta_kurtosis(std::size_t n_labels) {
    const double l = static_cast<double>(n_labels);
    const double a = l - 1.0;
    return (a * a * a + 1.0) / (l * a);
}

double conf_kurt(std::span<const double> p) {
    const double n = static_cast<double>(p.size());
    const double mean = 1.0 / n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : p) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if (m2 < kKurtosisMinVariance) return 0.0;
    const double span = delta_kurtosis(p.size()) - 1.0;
    // Two labels: every non-uniform vector has kurtosis exactly 1.
    if (span <= 0.0) return 1.0;
    const double kurt = m4 / (m2 * m2);
    return clamp01((kurt - 1.0) / span);
}

double confidence(std::span<const double> p, Metric metric) {
    switch (metric) {
        case Metric::abs: return conf_abs(p);
        case Metric::bvsb: return conf_bvsb(p);
        case Metric::var: return conf_var(p);
        case Metric::ent: return conf_ent(p);
        case Metric::kl_div: return conf_kl_div(p);
        case Metric::kurt: return conf_kurt(p);
    }
    throw std::invalid_argument("unknown metric");
}

std::vector<double> confidences(const ScoreMatrix& scores, Normalization normalization,
                                Metric metric) {
    if (normalization != Normalization::softmax && normalization != Normalization::linear) {
        throw std::invalid_argument("unknown normalization");
    }
    std::vector<double> conf(scores.n_samples);
    std::vector<double> buf(scores.n_labels);
    for (std::size_t i = 0; i < scores.n_samples; ++i) {
        if (normalization == Normalization::softmax) {
            normalize_softmax(scores.row(i), buf);
        } else {
            normalize_linear(scores.row(i), buf);
        }
        conf[i] = confidence(buf, metric);
    }
    return conf;
}

std::size_t argmax(std::span<const double> x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] > x[best]) best = i;
    }
    return best;
}

LabelVector predicted_labels(const ScoreMatrix& scores) {
    LabelVector lv;
    lv.n_labels = scores.n_labels;
    lv.labels.resize(scores.n_samples);
    for (std::size_t i = 0; i < scores.n_samples; ++i) {
        lv.labels[i] = static_cast<int>(argmax(scores.row(i)));
    }
    return lv;
}

}  // namespace cascade
