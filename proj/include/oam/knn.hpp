#pragma once

#include <span>
#include <string>
#include <vector>

#include "oam/dataset.hpp"

namespace oam {

enum class KnnMetric {
    euclidean,     ///< plain L2 on the feature vector
    wrapped_phase  ///< L2 of per-coordinate angular distances
};

std::string to_string(KnnMetric m);
KnnMetric parse_knn_metric(const std::string& s);

/// Brute-force nearest-neighbour classifier. Immutable after construction.
class KnnModel {
public:
    KnnModel(const SampleSet& train, int k, KnnMetric metric);

    int k() const { return k_; }
    KnnMetric metric() const { return metric_; }
    std::size_t size() const { return classes_.size(); }
    std::size_t feature_dim() const { return dim_; }

    double distance(std::span<const double> a, std::span<const double> b) const;

    /// Majority class among the k nearest samples. Ties go to the class with
    /// the smallest summed neighbour distance, then to the lowest class index.
    int classify(std::span<const double> query) const;

    std::string to_json() const;
    static KnnModel from_json(const std::string& text);

private:
    KnnModel() = default;

    int k_ = 1;
    KnnMetric metric_ = KnnMetric::euclidean;
    std::size_t dim_ = 0;
    std::vector<double> features_;  // row-major, size() x dim_
    std::vector<int> classes_;
    SampleSet train_meta_;          // scheme, embedding and norm, no samples
};

KnnModel knn_fit(const SampleSet& train, int k, KnnMetric metric = KnnMetric::euclidean);

}  // namespace oam
