#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oam/dataset.hpp"

namespace oam {

/// Uniform view of a trained detector: a class decision plus the numeric
/// label it implies (continuous for regression-style detectors).
struct Detector {
    std::string name;
    std::function<int(std::span<const double>)> classify;
    /// Optional continuous output; when empty the numeric label of the
    /// predicted class is used.
    std::function<double(std::span<const double>)> regress;
    std::size_t feature_dim = 0;
};

struct Histogram {
    std::vector<double> edges;  ///< size = counts.size() + 1
    std::vector<long> counts;   ///< out-of-range errors land in the outer bins
};

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct Prediction {
    int true_class = 0;
    int predicted_class = 0;
    double true_label = 0.0;
    double predicted_value = 0.0;
};

struct EvalReport {
    std::string detector;
    double accuracy = 0.0;
    std::vector<std::vector<long>> confusion;  ///< rows true, columns predicted
    std::vector<double> recall;
    Histogram error_histogram;                 ///< predicted_value - true_label
    Regression regression;                     ///< predicted_value on true_label
    double test_time = 0.0;                    ///< seconds, wall clock
    std::vector<Prediction> predictions;

    /// Deterministic JSON; excludes test_time and the per-sample log.
    std::string to_json() const;
    std::string confusion_csv(const LabelScheme& scheme) const;
    std::string predictions_csv() const;
};

/// Least-squares line of y on x with its coefficient of determination.
Regression fit_line(std::span<const double> x, std::span<const double> y);

/// `bins` equal-width bins over [-span, span]; an odd bin count centers a bin on zero.
Histogram make_histogram(std::span<const double> values, double span, std::size_t bins);

EvalReport evaluate(const Detector& detector, const SampleSet& test);

}  // namespace oam
