#pragma once

#include <span>
#include <vector>

#include "cascade/types.hpp"

namespace cascade {

// Normalizations map a finite raw output vector onto the probability simplex.
std::vector<double> normalize_softmax(std::span<const double> x);
std::vector<double> normalize_linear(std::span<const double> x);
void normalize_softmax(std::span<const double> x, std::span<double> out);
void normalize_linear(std::span<const double> x, std::span<double> out);

inline constexpr double kLinearDenominatorEps = 1e-12;
inline constexpr double kKlSmoothing = 1e-6;
inline constexpr double kKurtosisMinVariance = 1e-12;

// Confidence metrics over a normalized vector. All return values in [0, 1]:
// 0 for the uniform vector, 1 for a delta vector.
double conf_abs(std::span<const double> p);
double conf_bvsb(std::span<const double> p);
double conf_var(std::span<const double> p);
double conf_ent(std::span<const double> p);
double conf_kl_div(std::span<const double> p);
double conf_kurt(std::span<const double> p);

double confidence(std::span<const double> p, Metric metric);

/// Kurtosis m4/m2^2 of a delta vector over n_labels entries.
double delta_kurtosis(std::size_t n_labels);

/// Row-wise normalization followed by the chosen metric.
std::vector<double> confidences(const ScoreMatrix& scores, Normalization normalization,
                                Metric metric);

/// Argmax per row, lowest index on ties.
std::size_t argmax(std::span<const double> x);
LabelVector predicted_labels(const ScoreMatrix& scores);

}  // namespace cascade
