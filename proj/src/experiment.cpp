#include "oam/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <future>
#include <sstream>

#include "json_util.hpp"
#include "oam/errors.hpp"

namespace oam {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double d = 0.0;
    const char* b = v.data();
    if (!v.empty() && v.front() == '+') ++b;
    auto [end, ec] = std::from_chars(b, v.data() + v.size(), d);
    if (ec != std::errc() || end != v.data() + v.size()) throw DomainError("key '" + key + "': bad number '" + v + "'");
    return d;
}

long to_long(const std::string& key, const std::string& v) {
    long d = 0;
    const char* b = v.data();
    if (!v.empty() && v.front() == '+') ++b;
    auto [end, ec] = std::from_chars(b, v.data() + v.size(), d);
    if (ec != std::errc() || end != v.data() + v.size())
        throw DomainError("key '" + key + "': bad integer '" + v + "'");
    return d;
}

std::size_t to_count(const std::string& key, const std::string& v) {
    const long n = to_long(key, v);
    if (n < 0) throw DomainError("key '" + key + "' must be nonnegative");
    return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw DomainError("key '" + key + "': bad boolean '" + v + "'");
}

std::string fmt(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string classes_text(const std::vector<std::vector<int>>& classes) {
    std::string out;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (i) out += "; ";
        for (std::size_t j = 0; j < classes[i].size(); ++j) {
            if (j) out += ',';
            out += std::to_string(classes[i][j]);
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(SchemeKind scenario) {
    ExperimentConfig c;
    c.scenario = scenario;
    return c;
}

const std::vector<std::string>& ExperimentConfig::keys() {
    static const std::vector<std::string> k{
        "scenario",          "n_tx",
        "n_rx",              "tx_radius",
        "rx_radius",         "tx_initial_angle_deg",
        "rx_initial_angle_deg", "wavelength",
        "gain",              "frequency_hz",
        "classes",           "train_d_min",
        "train_d_max",       "train_d_count",
        "train_alpha_min_deg", "train_alpha_max_deg",
        "train_alpha_count", "test_d_min",
        "test_d_max",        "test_alpha_min_deg",
        "test_alpha_max_deg", "test_per_class",
        "snr_db",            "features",
        "detectors",         "knn_k",
        "knn_metric",        "svm_kernel",
        "svm_c",             "svm_gamma",
        "svm_tol",           "svm_max_iterations",
        "bpnn_hidden",       "bpnn_max_epochs",
        "bpnn_mse_goal",     "bpnn_mu_init",
        "bpnn_mu_inc",       "bpnn_mu_dec",
        "bpnn_mu_max",       "bpnn_bayesian",
        "bpnn_mu_w_init",    "seed",
        "out_dir"};
    return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (key == "scenario") scenario = parse_scheme_kind(v);
    else if (key == "n_tx") n_tx = static_cast<int>(to_long(key, v));
    else if (key == "n_rx") n_rx = static_cast<int>(to_long(key, v));
    else if (key == "tx_radius") tx_radius = to_double(key, v);
    else if (key == "rx_radius") rx_radius = to_double(key, v);
    else if (key == "tx_initial_angle_deg") tx_initial_angle_deg = to_double(key, v);
    else if (key == "rx_initial_angle_deg") rx_initial_angle_deg = to_double(key, v);
    else if (key == "wavelength") wavelength = to_double(key, v);
    else if (key == "gain") gain = to_double(key, v);
    else if (key == "frequency_hz") frequency_hz = to_double(key, v);
    else if (key == "classes") {
        classes.clear();
        for (const auto& set_text : split(v, ';')) {
            std::vector<int> modes;
            for (const auto& m : split(set_text, ',')) modes.push_back(static_cast<int>(to_long(key, m)));
            classes.push_back(modes);
        }
    } else if (key == "train_d_min") train_d_min = to_double(key, v);
    else if (key == "train_d_max") train_d_max = to_double(key, v);
    else if (key == "train_d_count") train_d_count = to_count(key, v);
    else if (key == "train_alpha_min_deg") train_alpha_min_deg = to_double(key, v);
    else if (key == "train_alpha_max_deg") train_alpha_max_deg = to_double(key, v);
    else if (key == "train_alpha_count") train_alpha_count = to_count(key, v);
    else if (key == "test_d_min") test_d_min = to_double(key, v);
    else if (key == "test_d_max") test_d_max = to_double(key, v);
    else if (key == "test_alpha_min_deg") test_alpha_min_deg = to_double(key, v);
    else if (key == "test_alpha_max_deg") test_alpha_max_deg = to_double(key, v);
    else if (key == "test_per_class") test_per_class = to_count(key, v);
    else if (key == "snr_db") snr_db = (v == "none" || v.empty()) ? std::nullopt : std::optional(to_double(key, v));
    else if (key == "features") features = parse_embedding(v);
    else if (key == "detectors") {
        detectors = split(v, ',');
        for (const auto& d : detectors)
            if (d != "knn" && d != "svm" && d != "bpnn") throw DomainError("unknown detector '" + d + "'");
    } else if (key == "knn_k") knn_k = static_cast<int>(to_long(key, v));
    else if (key == "knn_metric") knn_metric = parse_knn_metric(v);
    else if (key == "svm_kernel") svm.kernel = parse_kernel(v);
    else if (key == "svm_c") svm.c = to_double(key, v);
    else if (key == "svm_gamma") svm.gamma = v == "auto" ? 0.0 : to_double(key, v);
    else if (key == "svm_tol") svm.tol = to_double(key, v);
    else if (key == "svm_max_iterations") svm.max_iterations = to_long(key, v);
    else if (key == "bpnn_hidden") bpnn_hidden = to_count(key, v);
    else if (key == "bpnn_max_epochs") bpnn.max_epochs = static_cast<int>(to_long(key, v));
    else if (key == "bpnn_mse_goal") bpnn.mse_goal = to_double(key, v);
    else if (key == "bpnn_mu_init") bpnn.mu_init = to_double(key, v);
    else if (key == "bpnn_mu_inc") bpnn.mu_inc = to_double(key, v);
    else if (key == "bpnn_mu_dec") bpnn.mu_dec = to_double(key, v);
    else if (key == "bpnn_mu_max") bpnn.mu_max = to_double(key, v);
    else if (key == "bpnn_bayesian") bpnn.bayesian = to_bool(key, v);
    else if (key == "bpnn_mu_w_init") bpnn.mu_w_init = to_double(key, v);
    else if (key == "seed") seed = static_cast<std::uint64_t>(to_long(key, v));
    else if (key == "out_dir") out_dir = v;
    else throw DomainError("unknown configuration key '" + key + "'");
}

void ExperimentConfig::load_text(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        try {
            set(trim(std::string_view(line).substr(0, eq)), line.substr(eq + 1));
        } catch (const std::exception& e) {
            throw ParseError(e.what(), line_no, eq + 2);
        }
    }
}

void ExperimentConfig::load_file(const std::string& path) { load_text(read_file(path)); }

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os << "scenario = " << to_string(scenario) << '\n'
       << "n_tx = " << n_tx << '\n'
       << "n_rx = " << n_rx << '\n'
       << "tx_radius = " << fmt(tx_radius) << '\n'
       << "rx_radius = " << fmt(rx_radius) << '\n'
       << "tx_initial_angle_deg = " << fmt(tx_initial_angle_deg) << '\n'
       << "rx_initial_angle_deg = " << fmt(rx_initial_angle_deg) << '\n'
       << "wavelength = " << fmt(wavelength) << '\n'
       << "gain = " << fmt(gain) << '\n'
       << "frequency_hz = " << fmt(frequency_hz) << '\n'
       << "classes = " << classes_text(classes) << '\n'
       << "train_d_min = " << fmt(train_d_min) << '\n'
       << "train_d_max = " << fmt(train_d_max) << '\n'
       << "train_d_count = " << train_d_count << '\n'
       << "train_alpha_min_deg = " << fmt(train_alpha_min_deg) << '\n'
       << "train_alpha_max_deg = " << fmt(train_alpha_max_deg) << '\n'
       << "train_alpha_count = " << train_alpha_count << '\n'
       << "test_d_min = " << fmt(test_d_min) << '\n'
       << "test_d_max = " << fmt(test_d_max) << '\n'
       << "test_alpha_min_deg = " << fmt(test_alpha_min_deg) << '\n'
       << "test_alpha_max_deg = " << fmt(test_alpha_max_deg) << '\n'
       << "test_per_class = " << test_per_class << '\n'
       << "snr_db = " << (snr_db ? fmt(*snr_db) : std::string("none")) << '\n'
       << "features = " << to_string(features) << '\n'
       << "detectors = " << join(detectors, ",") << '\n'
       << "knn_k = " << knn_k << '\n'
       << "knn_metric = " << to_string(knn_metric) << '\n'
       << "svm_kernel = " << to_string(svm.kernel) << '\n'
       << "svm_c = " << fmt(svm.c) << '\n'
       << "svm_gamma = " << (svm.gamma > 0.0 ? fmt(svm.gamma) : std::string("auto")) << '\n'
       << "svm_tol = " << fmt(svm.tol) << '\n'
       << "svm_max_iterations = " << svm.max_iterations << '\n'
       << "bpnn_hidden = " << bpnn_hidden << '\n'
       << "bpnn_max_epochs = " << bpnn.max_epochs << '\n'
       << "bpnn_mse_goal = " << fmt(bpnn.mse_goal) << '\n'
       << "bpnn_mu_init = " << fmt(bpnn.mu_init) << '\n'
       << "bpnn_mu_inc = " << fmt(bpnn.mu_inc) << '\n'
       << "bpnn_mu_dec = " << fmt(bpnn.mu_dec) << '\n'
       << "bpnn_mu_max = " << fmt(bpnn.mu_max) << '\n'
       << "bpnn_bayesian = " << (bpnn.bayesian ? "true" : "false") << '\n'
       << "bpnn_mu_w_init = " << fmt(bpnn.mu_w_init) << '\n'
       << "seed = " << seed << '\n'
       << "out_dir = " << out_dir << '\n';
    return os.str();
}

LabelScheme ExperimentConfig::scheme() const {
    if (scenario == SchemeKind::single_mode) {
        std::vector<int> modes;
        if (classes.empty()) {
            modes = {-3, -2, -1, 0, 1, 2, 3};
        } else {
            for (const auto& c : classes) {
                if (c.size() != 1) throw DomainError("single-mode classes must hold exactly one mode");
                modes.push_back(c.front());
            }
        }
        return LabelScheme::single_mode(modes);
    }
    std::vector<ModeSet> sets;
    if (classes.empty()) {
        sets = {ModeSet({0, 1}), ModeSet({1, 2}), ModeSet({0, 2}), ModeSet({-1, 1})};
    } else {
        for (const auto& c : classes) sets.emplace_back(c);
    }
    return LabelScheme::multi_mode(sets);
}

GeometryTemplate ExperimentConfig::geometry() const {
    const int ntx = n_tx > 0 ? n_tx : (scenario == SchemeKind::single_mode ? 8 : 6);
    return {UcaConfig{ntx, tx_radius, deg2rad(tx_initial_angle_deg)},
            UcaConfig{n_rx, rx_radius, deg2rad(rx_initial_angle_deg)}, wavelength, gain};
}

TrainingGrid ExperimentConfig::grid() const {
    return {TrainingGrid::linspace(train_d_min, train_d_max, train_d_count),
            TrainingGrid::linspace(deg2rad(train_alpha_min_deg), deg2rad(train_alpha_max_deg), train_alpha_count)};
}

TestRegion ExperimentConfig::region() const {
    return {test_d_min, test_d_max, deg2rad(test_alpha_min_deg), deg2rad(test_alpha_max_deg)};
}

void ExperimentConfig::validate() const {
    const GeometryTemplate g = geometry();
    g.tx.validate();
    g.rx.validate();
    const LabelScheme s = scheme();
    for (const auto& c : s.classes()) c.check_resolvable(g.tx.n_elements);
    if (train_d_count == 0 || train_alpha_count == 0) throw DomainError("training grid is empty");
    if (test_per_class == 0) throw DomainError("test_per_class must be positive");
    if (detectors.empty()) throw DomainError("no detectors selected");
    if (knn_k < 1) throw DomainError("knn_k must be positive");
    if (bpnn_hidden < 1) throw DomainError("bpnn_hidden must be positive");
    svm.validate();
    bpnn.validate();
}

// ---------------------------------------------------------------------------

std::vector<Detector> TrainedDetectors::detectors() const {
    std::vector<Detector> out;
    if (knn)
        out.push_back({"KNN", [m = &*knn](std::span<const double> x) { return m->classify(x); }, {},
                       knn->feature_dim()});
    if (svm)
        out.push_back({"SVM", [m = &*svm](std::span<const double> x) { return m->classify(x); }, {},
                       svm->feature_dim()});
    if (bpnn) {
        const BpnnModel* m = &bpnn->model;
        const LabelScheme* s = &scheme;
        out.push_back({"BPNN", [m, s](std::span<const double> x) { return bpnn_predict_class(*m, x, *s); },
                       [m](std::span<const double> x) { return bpnn_forward(*m, x); }, m->input_dim()});
    }
    return out;
}

SampleSet build_training_set(const ExperimentConfig& cfg) {
    SampleSet train = build_training_grid(cfg.scheme(), cfg.geometry(), cfg.grid(), cfg.features);
    train.norm = fit_normalizer(train);
    return train;
}

SampleSet build_test_set(const ExperimentConfig& cfg, std::uint64_t seed) {
    return draw_test_set(cfg.scheme(), cfg.geometry(), cfg.region(), cfg.test_per_class, seed, cfg.snr_db,
                         cfg.features);
}

TrainedDetectors train_detectors(const ExperimentConfig& cfg, const SampleSet& train) {
    TrainedDetectors t;
    t.scheme = train.scheme;
    const auto wants = [&](const char* name) {
        return std::find(cfg.detectors.begin(), cfg.detectors.end(), name) != cfg.detectors.end();
    };
    std::future<TrainResult> bpnn_job;
    if (wants("bpnn")) {
        TrainConfig bc = cfg.bpnn;
        bc.seed = cfg.seed;
        bpnn_job = std::async(std::launch::async, [&train, bc, h = cfg.bpnn_hidden] {
            try {
                return bpnn_train(train, h, bc);
            } catch (const std::exception& e) {
                throw StageError("train:bpnn", e.what());
            }
        });
    }
    try {
        if (wants("knn")) t.knn = knn_fit(train, cfg.knn_k, cfg.knn_metric);
    } catch (const std::exception& e) {
        throw StageError("train:knn", e.what());
    }
    try {
        if (wants("svm")) {
            SvmConfig sc = cfg.svm;
            sc.seed = cfg.seed;
            t.svm = svm_train(train, sc);
        }
    } catch (const std::exception& e) {
        if (bpnn_job.valid()) bpnn_job.wait();
        throw StageError("train:svm", e.what());
    }
    if (bpnn_job.valid()) t.bpnn = bpnn_job.get();
    return t;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw StageError("config", e.what());
    }
    ExperimentResult r;
    try {
        r.train = build_training_set(cfg);
    } catch (const std::exception& e) {
        throw StageError("dataset:train", e.what());
    }
    try {
        r.test = build_test_set(cfg, cfg.seed);
        r.test.norm = r.train.norm;
    } catch (const std::exception& e) {
        throw StageError("dataset:test", e.what());
    }
    r.trained = train_detectors(cfg, r.train);
    try {
        for (const auto& d : r.trained.detectors()) {
            r.reports.push_back(evaluate(d, r.test));
            if (d.name == "BPNN") {
                r.bpnn_train_report = evaluate(d, r.train);
                r.bpnn_train_report->detector = "BPNN (training set)";
            }
        }
    } catch (const std::exception& e) {
        throw StageError("evaluate", e.what());
    }

    if (!cfg.out_dir.empty()) {
        try {
            namespace fs = std::filesystem;
            const fs::path dir(cfg.out_dir);
            fs::create_directories(dir);
            write_file_atomic((dir / "config.txt").string(), cfg.to_text());
            detail::json summary;
            summary["scenario"] = to_string(cfg.scenario);
            summary["seed"] = cfg.seed;
            summary["train_samples"] = r.train.samples.size();
            summary["test_samples"] = r.test.samples.size();
            for (const auto& rep : r.reports) {
                std::string tag = rep.detector;
                std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
                write_file_atomic((dir / ("report_" + tag + ".json")).string(), rep.to_json());
                write_file_atomic((dir / ("confusion_" + tag + ".csv")).string(), rep.confusion_csv(r.test.scheme));
                write_file_atomic((dir / ("predictions_" + tag + ".csv")).string(), rep.predictions_csv());
                summary["accuracy"][rep.detector] = rep.accuracy;
            }
            write_file_atomic((dir / "summary.json").string(), summary.dump(1) + "\n");
            write_file_atomic((dir / "summary.txt").string(), summary_table(r.reports));
            if (r.trained.bpnn) {
                write_file_atomic((dir / "mse_curve_bpnn.csv").string(), r.trained.bpnn->report.to_csv());
                write_file_atomic((dir / "model_bpnn.json").string(),
                                  to_json(r.trained.bpnn->model, r.train.scheme, cfg.bpnn));
                write_file_atomic((dir / "train_report_bpnn.json").string(), r.bpnn_train_report->to_json());
                write_file_atomic((dir / "train_predictions_bpnn.csv").string(),
                                  r.bpnn_train_report->predictions_csv());
            }
            if (r.trained.svm) write_file_atomic((dir / "model_svm.json").string(), r.trained.svm->to_json());
        } catch (const std::exception& e) {
            throw StageError("write", e.what());
        }
    }
    return r;
}

std::string summary_table(const std::vector<EvalReport>& reports) {
    std::ostringstream os;
    os << "method,accuracy,testing_time_s\n";
    os.setf(std::ios::fixed);
    for (const auto& r : reports) {
        os.precision(4);
        os << r.detector << ',' << r.accuracy << ',';
        os.precision(6);
        os << r.test_time << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------

SweepAxis parse_sweep_axis(const std::string& s) {
    if (s == "alpha") return SweepAxis::alpha;
    if (s == "distance" || s == "d") return SweepAxis::distance;
    if (s == "snr") return SweepAxis::snr;
    throw DomainError("unknown sweep axis '" + s + "'");
}

std::string sweep(const ExperimentConfig& cfg, const SweepSpec& spec) {
    cfg.validate();
    const SampleSet train = build_training_set(cfg);
    return sweep(cfg, train_detectors(cfg, train), spec);
}

std::string sweep(const ExperimentConfig& cfg, const TrainedDetectors& trained, const SweepSpec& spec) {
    if (spec.steps == 0) throw DomainError("sweep range is empty");
    if (spec.to < spec.from) throw DomainError("sweep range must be ascending");
    const std::vector<double> values = spec.steps == 1 ? std::vector<double>{spec.from}
                                                       : TrainingGrid::linspace(spec.from, spec.to, spec.steps);
    const auto detectors = trained.detectors();
    const char* axis_name = spec.axis == SweepAxis::alpha ? "alpha_deg"
                            : spec.axis == SweepAxis::distance ? "distance"
                                                               : "snr_db";
    std::ostringstream os;
    os << axis_name;
    for (const auto& d : detectors) os << ',' << d.name;
    os << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        TestRegion region = cfg.region();
        std::optional<double> snr = cfg.snr_db;
        switch (spec.axis) {
            case SweepAxis::alpha: region.alpha_min = region.alpha_max = deg2rad(v); break;
            case SweepAxis::distance: region.d_min = region.d_max = v; break;
            case SweepAxis::snr: snr = v; break;
        }
        const SampleSet test =
            draw_test_set(cfg.scheme(), cfg.geometry(), region, spec.per_class, cfg.seed + i, snr, cfg.features);
        os << fmt(v);
        for (const auto& d : detectors) os << ',' << fmt(evaluate(d, test).accuracy);
        os << '\n';
    }
    return os.str();
}

std::map<std::string, std::string> phase_field(const ExperimentConfig& cfg, const PhaseFieldSpec& spec) {
    if (spec.points < 2) throw DomainError("phase field needs at least two points per axis");
    const GeometryTemplate tmpl = cfg.geometry();
    const double extent = spec.extent > 0.0 ? spec.extent : 1.5 * tmpl.rx.radius;
    std::map<std::string, std::string> files;
    for (const auto& modes : spec.mode_sets) {
        const ModeSet ms(modes);
        const Eigen::VectorXcd weights = transmit_vector(ms, tmpl.tx.n_elements);
        for (double alpha_deg : spec.alphas_deg) {
            const LinkGeometry g = tmpl.at(spec.distance, deg2rad(alpha_deg));
            const double ca = std::cos(g.oblique_angle), sa = std::sin(g.oblique_angle);
            std::ostringstream os;
            os.precision(17);
            os << "u,v,x,y,z,magnitude,phase\n";
            for (std::size_t iv = 0; iv < spec.points; ++iv) {
                const double vv = -extent + 2.0 * extent * static_cast<double>(iv) / static_cast<double>(spec.points - 1);
                for (std::size_t iu = 0; iu < spec.points; ++iu) {
                    const double u =
                        -extent + 2.0 * extent * static_cast<double>(iu) / static_cast<double>(spec.points - 1);
                    const Vec3 p{u, vv * ca, g.center_distance + vv * sa};
                    const cplx f = field_at(g, p, weights);
                    os << u << ',' << vv << ',' << p[0] << ',' << p[1] << ',' << p[2] << ',' << std::abs(f) << ','
                       << std::arg(f) << '\n';
                }
            }
            std::string tag;
            for (int m : modes) tag += (m >= 0 ? "p" : "m") + std::to_string(std::abs(m));
            files["phasefield_l" + tag + "_a" + fmt(alpha_deg) + ".csv"] = os.str();
        }
    }
    return files;
}

}  // namespace oam
