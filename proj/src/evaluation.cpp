#include "oam/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json_util.hpp"
#include "oam/errors.hpp"

namespace oam {

Regression fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("regression needs two or more paired values");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DegenerateError("regression abscissa has zero variance");
    Regression r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (r.slope * x[i] + r.intercept);
        ss_res += e * e;
    }
    r.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return r;
}

Histogram make_histogram(std::span<const double> values, double span, std::size_t bins) {
    if (bins == 0 || !(span > 0.0)) throw DomainError("histogram needs bins and a positive span");
    Histogram h;
    h.counts.assign(bins, 0);
    const double width = 2.0 * span / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(-span + width * static_cast<double>(i));
    for (double v : values) {
        auto b = static_cast<long>(std::floor((v + span) / width));
        b = std::clamp<long>(b, 0, static_cast<long>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

EvalReport evaluate(const Detector& detector, const SampleSet& test) {
    if (test.samples.empty()) throw DomainError("cannot evaluate on an empty test set");
    if (detector.feature_dim != 0 && test.feature_dim() != detector.feature_dim)
        throw DomainError("detector expects " + std::to_string(detector.feature_dim) + " features, test set has " +
                          std::to_string(test.feature_dim()));
    const std::size_t c = test.scheme.size();
    const auto& labels = test.scheme.numeric_labels();

    EvalReport r;
    r.detector = detector.name;
    r.confusion.assign(c, std::vector<long>(c, 0));
    r.predictions.reserve(test.samples.size());

    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& s : test.samples) {
        Prediction p;
        p.true_class = s.class_index;
        p.true_label = s.label;
        if (detector.regress) {
            p.predicted_value = detector.regress(s.features);
            p.predicted_class = test.scheme.nearest_class(p.predicted_value);
        } else {
            p.predicted_class = detector.classify(s.features);
            p.predicted_value = labels.at(static_cast<std::size_t>(p.predicted_class));
        }
        r.predictions.push_back(p);
    }
    r.test_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    long correct = 0;
    std::vector<double> truth, predicted, errors;
    for (const auto& p : r.predictions) {
        r.confusion.at(static_cast<std::size_t>(p.true_class)).at(static_cast<std::size_t>(p.predicted_class))++;
        if (p.true_class == p.predicted_class) ++correct;
        truth.push_back(p.true_label);
        predicted.push_back(p.predicted_value);
        errors.push_back(p.predicted_value - p.true_label);
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.predictions.size());
    for (std::size_t i = 0; i < c; ++i) {
        long row = 0;
        for (long v : r.confusion[i]) row += v;
        r.recall.push_back(row > 0 ? static_cast<double>(r.confusion[i][i]) / static_cast<double>(row) : 0.0);
    }
    const double span = c > 1 ? labels.back() - labels.front() : 1.0;
    r.error_histogram = make_histogram(errors, span, 21);
    bool varied = false;
    for (double t : truth) varied |= t != truth.front();
    if (varied) r.regression = fit_line(truth, predicted);
    return r;
}

std::string EvalReport::to_json() const {
    detail::json j;
    j["detector"] = detector;
    j["accuracy"] = accuracy;
    j["confusion"] = confusion;
    j["recall"] = recall;
    j["error_histogram"] = {{"edges", error_histogram.edges}, {"counts", error_histogram.counts}};
    j["regression"] = {{"slope", regression.slope},
                       {"intercept", regression.intercept},
                       {"r_squared", regression.r_squared}};
    j["test_count"] = predictions.size();
    return j.dump(1) + "\n";
}

std::string EvalReport::confusion_csv(const LabelScheme& scheme) const {
    std::ostringstream os;
    os << "true\\predicted";
    for (const auto& cls : scheme.classes()) os << ',' << '"' << cls.to_string() << '"';
    os << '\n';
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        os << '"' << scheme.classes()[i].to_string() << '"';
        for (long v : confusion[i]) os << ',' << v;
        os << '\n';
    }
    return os.str();
}

std::string EvalReport::predictions_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "true_class,predicted_class,true_label,predicted_value\n";
    for (const auto& p : predictions)
        os << p.true_class << ',' << p.predicted_class << ',' << p.true_label << ',' << p.predicted_value << '\n';
    return os.str();
}

}  // namespace oam
