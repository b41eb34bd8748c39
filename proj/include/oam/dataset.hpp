#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oam/oam_signal.hpp"
#include "oam/physics.hpp"

namespace oam {

enum class SchemeKind { single_mode, multi_mode };

/// How the N_r received phases become a feature vector. `phase` feeds the
/// wrapped phases directly; `sincos` stores [cos(phase)..., sin(phase)...].
enum class FeatureEmbedding { phase, sincos };

std::string to_string(SchemeKind kind);
std::string to_string(FeatureEmbedding e);
SchemeKind parse_scheme_kind(const std::string& s);
FeatureEmbedding parse_embedding(const std::string& s);

/// Ordered classes and their scalar regression targets.
class LabelScheme {
public:
    /// One class per mode; the numeric label is the mode number itself.
    static LabelScheme single_mode(std::vector<int> modes);
    /// Numeric labels are 1..C in the given class order.
    static LabelScheme multi_mode(std::vector<ModeSet> classes);

    SchemeKind kind() const { return kind_; }
    const std::vector<ModeSet>& classes() const { return classes_; }
    const std::vector<double>& numeric_labels() const { return labels_; }
    std::size_t size() const { return classes_.size(); }

    /// Class whose numeric label is nearest to `value`; ties go to the lower label.
    int nearest_class(double value) const;

    bool operator==(const LabelScheme&) const = default;

private:
    LabelScheme(SchemeKind kind, std::vector<ModeSet> classes, std::vector<double> labels);

    SchemeKind kind_ = SchemeKind::single_mode;
    std::vector<ModeSet> classes_;
    std::vector<double> labels_;
};

struct PhaseSample {
    std::vector<double> features;
    double label = 0.0;
    int class_index = 0;
    double distance = 0.0;
    double alpha = 0.0;

    bool operator==(const PhaseSample&) const = default;
};

/// Link geometry with the position (D, alpha) left open.
struct GeometryTemplate {
    UcaConfig tx{8, 9.0, 0.0};
    UcaConfig rx{10, 9.0, 0.0};
    double wavelength = 1.0;
    double gain = 1.0;

    LinkGeometry at(double distance, double alpha) const;
};

struct TrainingGrid {
    std::vector<double> distances;
    std::vector<double> angles;  // radians

    /// `count` points evenly spaced over [lo, hi], endpoints included.
    static std::vector<double> linspace(double lo, double hi, std::size_t count);
    /// lo, lo + step, ... up to hi (inclusive within a small tolerance).
    static std::vector<double> stepped(double lo, double hi, double step);

    bool operator==(const TrainingGrid&) const = default;
};

struct TestRegion {
    double d_min = 360.0;
    double d_max = 560.0;
    double alpha_min = deg2rad(20.0);
    double alpha_max = deg2rad(30.0);

    bool operator==(const TestRegion&) const = default;
};

/// Per-dimension min-max map onto [-1, 1] for features and label.
struct NormParams {
    std::vector<double> feature_min;
    std::vector<double> feature_max;
    double label_min = -1.0;
    double label_max = 1.0;

    std::vector<double> apply(std::span<const double> features) const;
    std::vector<double> invert(std::span<const double> normalized) const;
    double apply_label(double label) const;
    double invert_label(double normalized) const;

    bool operator==(const NormParams&) const = default;
};

struct SampleSet {
    std::vector<PhaseSample> samples;
    LabelScheme scheme = LabelScheme::single_mode({0});
    FeatureEmbedding embedding = FeatureEmbedding::phase;
    std::optional<TrainingGrid> grid;
    std::optional<TestRegion> region;
    std::optional<NormParams> norm;

    std::size_t feature_dim() const { return samples.empty() ? 0 : samples.front().features.size(); }
    bool operator==(const SampleSet&) const = default;
};

/// Embeds raw wrapped phases according to `e`.
std::vector<double> embed_features(const std::vector<double>& phases, FeatureEmbedding e);

/// One noiseless sample per (class, D, alpha), ordered class-major, then D,
/// then alpha.
SampleSet build_training_grid(const LabelScheme& scheme, const GeometryTemplate& tmpl, const TrainingGrid& grid,
                              FeatureEmbedding embedding = FeatureEmbedding::phase);

/// `per_class` samples per class with (D, alpha) uniform over `region`.
SampleSet draw_test_set(const LabelScheme& scheme, const GeometryTemplate& tmpl, const TestRegion& region,
                        std::size_t per_class, std::uint64_t seed, std::optional<double> snr_db = std::nullopt,
                        FeatureEmbedding embedding = FeatureEmbedding::phase);

NormParams fit_normalizer(const SampleSet& train);

void write_csv(std::ostream& os, const SampleSet& set);
/// Reads rows written by write_csv. Only the samples are restored.
std::vector<PhaseSample> read_csv(std::istream& is);

std::string to_json(const SampleSet& set);
SampleSet sample_set_from_json(const std::string& text);

/// Dispatches on the extension: ".csv" or ".json".
void save_sample_set(const std::string& path, const SampleSet& set);
SampleSet load_sample_set(const std::string& path);

/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace oam
