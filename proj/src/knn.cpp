#include "oam/knn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "json_util.hpp"
#include "oam/errors.hpp"

namespace oam {

std::string to_string(KnnMetric m) { return m == KnnMetric::euclidean ? "euclidean" : "wrapped-phase"; }

KnnMetric parse_knn_metric(const std::string& s) {
    if (s == "euclidean") return KnnMetric::euclidean;
    if (s == "wrapped-phase" || s == "wrapped") return KnnMetric::wrapped_phase;
    throw DomainError("unknown KNN metric '" + s + "'");
}

KnnModel::KnnModel(const SampleSet& train, int k, KnnMetric metric) : k_(k), metric_(metric) {
    if (train.samples.empty()) throw DomainError("KNN needs a nonempty training set");
    if (k < 1 || static_cast<std::size_t>(k) > train.samples.size())
        throw DomainError("k=" + std::to_string(k) + " outside 1.." + std::to_string(train.samples.size()));
    dim_ = train.feature_dim();
    features_.reserve(dim_ * train.samples.size());
    for (const auto& s : train.samples) {
        if (s.features.size() != dim_) throw DomainError("inconsistent feature dimension in training set");
        features_.insert(features_.end(), s.features.begin(), s.features.end());
        classes_.push_back(s.class_index);
    }
    train_meta_.scheme = train.scheme;
    train_meta_.embedding = train.embedding;
    train_meta_.norm = train.norm;
}

double KnnModel::distance(std::span<const double> a, std::span<const double> b) const {
    double sum = 0.0;
    if (metric_ == KnnMetric::euclidean) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            sum += d * d;
        }
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = std::abs(a[i] - b[i]);
            d = std::fmod(d, kTwoPi);
            if (d > std::numbers::pi) d = kTwoPi - d;
            sum += d * d;
        }
    }
    return std::sqrt(sum);
}

int KnnModel::classify(std::span<const double> query) const {
    if (query.size() != dim_)
        throw DomainError("query has " + std::to_string(query.size()) + " features, model expects " +
                          std::to_string(dim_));
    struct Neighbor {
        double dist;
        int cls;
        bool operator<(const Neighbor& o) const { return dist != o.dist ? dist < o.dist : cls < o.cls; }
    };
    const std::size_t n = classes_.size();
    const std::size_t k = static_cast<std::size_t>(k_);
    std::vector<Neighbor> best;
    best.reserve(k + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Neighbor nb{distance(query, std::span<const double>(features_.data() + i * dim_, dim_)), classes_[i]};
        if (best.size() < k) {
            best.insert(std::upper_bound(best.begin(), best.end(), nb), nb);
        } else if (nb < best.back()) {
            best.pop_back();
            best.insert(std::upper_bound(best.begin(), best.end(), nb), nb);
        }
    }

    std::map<int, std::pair<int, double>> votes;  // class -> (count, distance sum)
    for (const auto& nb : best) {
        auto& v = votes[nb.cls];
        ++v.first;
        v.second += nb.dist;
    }
    int winner = votes.begin()->first;
    auto [wc, wd] = votes.begin()->second;
    for (const auto& [cls, v] : votes) {
        if (v.first > wc || (v.first == wc && v.second < wd)) {
            winner = cls;
            wc = v.first;
            wd = v.second;
        }
    }
    return winner;
}

std::string KnnModel::to_json() const {
    using detail::json;
    json j;
    j["type"] = "knn";
    j["k"] = k_;
    j["metric"] = to_string(metric_);
    j["feature_dim"] = dim_;
    j["scheme"] = detail::scheme_to_json(train_meta_.scheme);
    j["embedding"] = oam::to_string(train_meta_.embedding);
    if (train_meta_.norm) j["norm_params"] = detail::norm_to_json(*train_meta_.norm);
    j["features"] = features_;
    j["classes"] = classes_;
    return j.dump() + "\n";
}

KnnModel KnnModel::from_json(const std::string& text) {
    const auto j = detail::parse_json(text);
    try {
        if (j.at("type").get<std::string>() != "knn") throw ParseError("not a KNN model", 0);
        KnnModel m;
        m.k_ = j.at("k").get<int>();
        m.metric_ = parse_knn_metric(j.at("metric").get<std::string>());
        m.dim_ = j.at("feature_dim").get<std::size_t>();
        m.train_meta_.scheme = detail::scheme_from_json(j.at("scheme"));
        m.train_meta_.embedding = parse_embedding(j.value("embedding", std::string("phase")));
        if (j.contains("norm_params")) m.train_meta_.norm = detail::norm_from_json(j["norm_params"]);
        m.features_ = j.at("features").get<std::vector<double>>();
        m.classes_ = j.at("classes").get<std::vector<int>>();
        if (m.dim_ == 0 || m.features_.size() != m.dim_ * m.classes_.size())
            throw ParseError("KNN feature table size mismatch", 0);
        if (m.k_ < 1 || static_cast<std::size_t>(m.k_) > m.classes_.size()) throw ParseError("KNN k out of range", 0);
        return m;
    } catch (const detail::json::exception& e) {
        throw ParseError(std::string("invalid KNN model: ") + e.what(), 0);
    }
}

KnnModel knn_fit(const SampleSet& train, int k, KnnMetric metric) { return KnnModel(train, k, metric); }

}  // namespace oam
