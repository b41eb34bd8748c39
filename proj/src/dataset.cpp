#include "oam/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "oam/errors.hpp"

namespace oam {

std::string to_string(SchemeKind kind) { return kind == SchemeKind::single_mode ? "single-mode" : "multi-mode"; }

std::string to_string(FeatureEmbedding e) { return e == FeatureEmbedding::phase ? "phase" : "sincos"; }

SchemeKind parse_scheme_kind(const std::string& s) {
    if (s == "single-mode" || s == "single") return SchemeKind::single_mode;
    if (s == "multi-mode" || s == "multi") return SchemeKind::multi_mode;
    throw DomainError("unknown scenario '" + s + "'");
}

FeatureEmbedding parse_embedding(const std::string& s) {
    if (s == "phase") return FeatureEmbedding::phase;
    if (s == "sincos") return FeatureEmbedding::sincos;
    throw DomainError("unknown feature embedding '" + s + "'");
}

// ---------------------------------------------------------------------------
// LabelScheme

LabelScheme::LabelScheme(SchemeKind kind, std::vector<ModeSet> classes, std::vector<double> labels)
    : kind_(kind), classes_(std::move(classes)), labels_(std::move(labels)) {
    if (classes_.empty()) throw DomainError("label scheme needs at least one class");
    for (std::size_t i = 0; i < classes_.size(); ++i)
        for (std::size_t j = i + 1; j < classes_.size(); ++j)
            if (classes_[i] == classes_[j]) throw DomainError("duplicate class " + classes_[i].to_string());
    for (std::size_t i = 1; i < labels_.size(); ++i)
        if (!(labels_[i] > labels_[i - 1])) throw DomainError("numeric labels must be strictly increasing");
}

LabelScheme LabelScheme::single_mode(std::vector<int> modes) {
    std::sort(modes.begin(), modes.end());
    std::vector<ModeSet> classes;
    std::vector<double> labels;
    for (int m : modes) {
        classes.emplace_back(std::vector<int>{m});
        labels.push_back(m);
    }
    return LabelScheme(SchemeKind::single_mode, std::move(classes), std::move(labels));
}

LabelScheme LabelScheme::multi_mode(std::vector<ModeSet> classes) {
    std::vector<double> labels;
    for (std::size_t i = 0; i < classes.size(); ++i) labels.push_back(static_cast<double>(i + 1));
    return LabelScheme(SchemeKind::multi_mode, std::move(classes), std::move(labels));
}

int LabelScheme::nearest_class(double value) const {
    int best = 0;
    double best_dist = std::abs(value - labels_[0]);
    for (std::size_t i = 1; i < labels_.size(); ++i) {
        const double d = std::abs(value - labels_[i]);
        if (d < best_dist) {
            best = static_cast<int>(i);
            best_dist = d;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Geometry and grids

LinkGeometry GeometryTemplate::at(double distance, double alpha) const {
    LinkGeometry g{tx, rx, distance, alpha, wavelength, gain};
    g.validate();
    return g;
}

std::vector<double> TrainingGrid::linspace(double lo, double hi, std::size_t count) {
    if (count == 0) throw DomainError("linspace needs at least one point");
    if (count == 1) return {lo};
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    v.back() = hi;
    return v;
}

std::vector<double> TrainingGrid::stepped(double lo, double hi, double step) {
    if (!(step > 0.0)) throw DomainError("grid step must be positive");
    std::vector<double> v;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) v.push_back(lo + step * static_cast<double>(i));
    return v;
}

std::vector<double> embed_features(const std::vector<double>& phases, FeatureEmbedding e) {
    if (e == FeatureEmbedding::phase) return phases;
    std::vector<double> out(2 * phases.size());
    for (std::size_t i = 0; i < phases.size(); ++i) {
        out[i] = std::cos(phases[i]);
        out[phases.size() + i] = std::sin(phases[i]);
    }
    return out;
}

namespace {

void require_increasing(const std::vector<double>& v, const char* what) {
    if (v.empty()) throw DomainError(std::string(what) + " list is empty");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) throw DomainError(std::string(what) + " list must be strictly increasing");
}

PhaseSample make_sample(const LabelScheme& scheme, int cls, const GeometryTemplate& tmpl, double d, double a,
                        std::optional<NoiseSpec> noise, FeatureEmbedding e) {
    try {
        const LinkGeometry g = tmpl.at(d, a);
        const ReceivedVector x = receive_exact(g, scheme.classes()[static_cast<std::size_t>(cls)], noise);
        return {embed_features(phase_features(x), e), scheme.numeric_labels()[static_cast<std::size_t>(cls)], cls,
                d, a};
    } catch (const std::exception& ex) {
        std::ostringstream os;
        os.precision(17);
        os << "grid point (class " << cls << ", D=" << d << ", alpha=" << a << "): " << ex.what();
        throw DegenerateError(os.str());
    }
}

}  // namespace

SampleSet build_training_grid(const LabelScheme& scheme, const GeometryTemplate& tmpl, const TrainingGrid& grid,
                              FeatureEmbedding embedding) {
    require_increasing(grid.distances, "distance");
    require_increasing(grid.angles, "angle");
    SampleSet set;
    set.scheme = scheme;
    set.embedding = embedding;
    set.grid = grid;
    set.samples.reserve(scheme.size() * grid.distances.size() * grid.angles.size());
    for (std::size_t c = 0; c < scheme.size(); ++c)
        for (double d : grid.distances)
            for (double a : grid.angles)
                set.samples.push_back(
                    make_sample(scheme, static_cast<int>(c), tmpl, d, a, std::nullopt, embedding));
    return set;
}

SampleSet draw_test_set(const LabelScheme& scheme, const GeometryTemplate& tmpl, const TestRegion& region,
                        std::size_t per_class, std::uint64_t seed, std::optional<double> snr_db,
                        FeatureEmbedding embedding) {
    if (per_class == 0) throw DomainError("test set needs at least one draw per class");
    if (region.d_max < region.d_min || region.alpha_max < region.alpha_min)
        throw DomainError("test region is empty");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(region.d_min, region.d_max);
    std::uniform_real_distribution<double> ua(region.alpha_min, region.alpha_max);

    SampleSet set;
    set.scheme = scheme;
    set.embedding = embedding;
    set.region = region;
    set.samples.reserve(per_class * scheme.size());
    for (std::size_t c = 0; c < scheme.size(); ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const double d = region.d_max > region.d_min ? ud(rng) : region.d_min;
            const double a = region.alpha_max > region.alpha_min ? ua(rng) : region.alpha_min;
            std::optional<NoiseSpec> noise;
            if (snr_db) noise = NoiseSpec{*snr_db, rng()};
            set.samples.push_back(make_sample(scheme, static_cast<int>(c), tmpl, d, a, noise, embedding));
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Normalization

NormParams fit_normalizer(const SampleSet& train) {
    if (train.samples.empty()) throw DegenerateError("cannot normalize an empty sample set");
    const std::size_t dim = train.feature_dim();
    NormParams n;
    n.feature_min.assign(dim, std::numeric_limits<double>::infinity());
    n.feature_max.assign(dim, -std::numeric_limits<double>::infinity());
    n.label_min = std::numeric_limits<double>::infinity();
    n.label_max = -std::numeric_limits<double>::infinity();
    for (const auto& s : train.samples) {
        if (s.features.size() != dim) throw DomainError("inconsistent feature dimension");
        for (std::size_t i = 0; i < dim; ++i) {
            n.feature_min[i] = std::min(n.feature_min[i], s.features[i]);
            n.feature_max[i] = std::max(n.feature_max[i], s.features[i]);
        }
        n.label_min = std::min(n.label_min, s.label);
        n.label_max = std::max(n.label_max, s.label);
    }
    for (std::size_t i = 0; i < dim; ++i)
        if (!(n.feature_max[i] > n.feature_min[i]))
            throw DegenerateError("feature " + std::to_string(i + 1) + " has zero span");
    if (!(n.label_max > n.label_min)) throw DegenerateError("label has zero span");
    return n;
}

std::vector<double> NormParams::apply(std::span<const double> features) const {
    if (features.size() != feature_min.size()) throw DomainError("feature dimension mismatch in normalizer");
    std::vector<double> out(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        out[i] = 2.0 * (features[i] - feature_min[i]) / (feature_max[i] - feature_min[i]) - 1.0;
    return out;
}

std::vector<double> NormParams::invert(std::span<const double> normalized) const {
    if (normalized.size() != feature_min.size()) throw DomainError("feature dimension mismatch in normalizer");
    std::vector<double> out(normalized.size());
    for (std::size_t i = 0; i < normalized.size(); ++i)
        out[i] = (normalized[i] + 1.0) * 0.5 * (feature_max[i] - feature_min[i]) + feature_min[i];
    return out;
}

double NormParams::apply_label(double label) const {
    return 2.0 * (label - label_min) / (label_max - label_min) - 1.0;
}

double NormParams::invert_label(double normalized) const {
    return (normalized + 1.0) * 0.5 * (label_max - label_min) + label_min;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_double(std::string& out, double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
}

double parse_double(std::string_view field, std::size_t line, std::size_t offset) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || end != field.data() + field.size())
        throw ParseError("malformed number '" + std::string(field) + "'", line, offset);
    return v;
}

}  // namespace

void write_csv(std::ostream& os, const SampleSet& set) {
    std::string out = "D,alpha,class_index,label";
    const std::size_t dim = set.feature_dim();
    if (set.embedding == FeatureEmbedding::phase) {
        for (std::size_t i = 1; i <= dim; ++i) out += ",phase_" + std::to_string(i);
    } else {
        for (std::size_t i = 1; i <= dim / 2; ++i) out += ",cos_" + std::to_string(i);
        for (std::size_t i = 1; i <= dim / 2; ++i) out += ",sin_" + std::to_string(i);
    }
    out += '\n';
    for (const auto& s : set.samples) {
        put_double(out, s.distance);
        out += ',';
        put_double(out, s.alpha);
        out += ',';
        out += std::to_string(s.class_index);
        out += ',';
        put_double(out, s.label);
        for (double f : s.features) {
            out += ',';
            put_double(out, f);
        }
        out += '\n';
    }
    os << out;
}

std::vector<PhaseSample> read_csv(std::istream& is) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(is, line)) throw ParseError("missing CSV header", 1);
    if (line.rfind("D,alpha,class_index,label", 0) != 0) throw ParseError("unexpected CSV header", 1);
    const auto header_cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;

    std::vector<PhaseSample> samples;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::vector<std::size_t> offsets;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.emplace_back(line.data() + start, (comma == std::string::npos ? line.size() : comma) - start);
            offsets.push_back(start + 1);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != header_cols)
            throw ParseError("expected " + std::to_string(header_cols) + " columns, got " +
                                 std::to_string(fields.size()),
                             line_no);
        PhaseSample s;
        s.distance = parse_double(fields[0], line_no, offsets[0]);
        s.alpha = parse_double(fields[1], line_no, offsets[1]);
        int cls = 0;
        auto [end, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), cls);
        if (ec != std::errc() || end != fields[2].data() + fields[2].size())
            throw ParseError("malformed class index", line_no, offsets[2]);
        s.class_index = cls;
        s.label = parse_double(fields[3], line_no, offsets[3]);
        for (std::size_t i = 4; i < fields.size(); ++i)
            s.features.push_back(parse_double(fields[i], line_no, offsets[i]));
        samples.push_back(std::move(s));
    }
    return samples;
}

namespace detail {

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("malformed JSON", line, col);
    }
}

}  // namespace detail

std::string to_json(const SampleSet& set) {
    using detail::json;
    json j;
    j["scheme"] = detail::scheme_to_json(set.scheme);
    j["embedding"] = to_string(set.embedding);
    if (set.grid) j["grid"] = {{"distances", set.grid->distances}, {"angles", set.grid->angles}};
    if (set.region)
        j["region"] = {{"d_min", set.region->d_min},
                       {"d_max", set.region->d_max},
                       {"alpha_min", set.region->alpha_min},
                       {"alpha_max", set.region->alpha_max}};
    if (set.norm) j["norm_params"] = detail::norm_to_json(*set.norm);
    json rows = json::array();
    for (const auto& s : set.samples)
        rows.push_back({{"D", s.distance},
                        {"alpha", s.alpha},
                        {"class_index", s.class_index},
                        {"label", s.label},
                        {"features", s.features}});
    j["samples"] = std::move(rows);
    return j.dump(1) + "\n";
}

SampleSet sample_set_from_json(const std::string& text) {
    const auto j = detail::parse_json(text);
    try {
        SampleSet set;
        set.scheme = detail::scheme_from_json(j.at("scheme"));
        set.embedding = parse_embedding(j.value("embedding", std::string("phase")));
        if (j.contains("grid"))
            set.grid = TrainingGrid{j["grid"].at("distances").get<std::vector<double>>(),
                                    j["grid"].at("angles").get<std::vector<double>>()};
        if (j.contains("region")) {
            const auto& r = j["region"];
            set.region = TestRegion{r.at("d_min").get<double>(), r.at("d_max").get<double>(),
                                    r.at("alpha_min").get<double>(), r.at("alpha_max").get<double>()};
        }
        if (j.contains("norm_params")) set.norm = detail::norm_from_json(j["norm_params"]);
        for (const auto& r : j.at("samples"))
            set.samples.push_back({r.at("features").get<std::vector<double>>(), r.at("label").get<double>(),
                                   r.at("class_index").get<int>(), r.at("D").get<double>(),
                                   r.at("alpha").get<double>()});
        return set;
    } catch (const detail::json::exception& e) {
        throw ParseError(std::string("invalid sample set: ") + e.what(), 0);
    }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << contents;
        if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void save_sample_set(const std::string& path, const SampleSet& set) {
    if (path.ends_with(".csv")) {
        std::ostringstream os;
        write_csv(os, set);
        write_file_atomic(path, os.str());
    } else {
        write_file_atomic(path, to_json(set));
    }
}

SampleSet load_sample_set(const std::string& path) {
    if (path.ends_with(".csv")) {
        std::istringstream is(read_file(path));
        SampleSet set;
        set.samples = read_csv(is);
        return set;
    }
    return sample_set_from_json(read_file(path));
}

}  // namespace oam
