#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oam/bpnn.hpp"
#include "oam/dataset.hpp"
#include "oam/evaluation.hpp"
#include "oam/knn.hpp"
#include "oam/svm.hpp"

namespace oam {

/// Everything needed to reproduce one detection experiment. Values are set
/// from "key = value" text; see `keys()` for the accepted names.
struct ExperimentConfig {
    SchemeKind scenario = SchemeKind::single_mode;
    int n_tx = 0;  ///< 0: 8 for single-mode, 6 for multi-mode
    int n_rx = 10;
    double tx_radius = 9.0;
    double rx_radius = 9.0;
    double tx_initial_angle_deg = 0.0;
    double rx_initial_angle_deg = 0.0;
    double wavelength = 1.0;
    double gain = 1.0;
    double frequency_hz = 2.36e9;  ///< reference only; lengths are in wavelengths
    /// Classes as mode lists. Empty selects the scenario default.
    std::vector<std::vector<int>> classes;

    double train_d_min = 150.0;
    double train_d_max = 350.0;
    std::size_t train_d_count = 25;
    double train_alpha_min_deg = 0.0;
    double train_alpha_max_deg = 20.0;
    std::size_t train_alpha_count = 100;

    double test_d_min = 360.0;
    double test_d_max = 560.0;
    double test_alpha_min_deg = 20.0;
    double test_alpha_max_deg = 30.0;
    std::size_t test_per_class = 1000;
    std::optional<double> snr_db;

    FeatureEmbedding features = FeatureEmbedding::phase;
    std::vector<std::string> detectors{"knn", "svm", "bpnn"};

    int knn_k = 1;
    KnnMetric knn_metric = KnnMetric::euclidean;
    SvmConfig svm;
    std::size_t bpnn_hidden = 10;
    TrainConfig bpnn;

    std::uint64_t seed = 1;
    std::string out_dir;

    static ExperimentConfig defaults(SchemeKind scenario);

    void set(const std::string& key, const std::string& value);
    /// Applies every "key = value" line; '#' starts a comment.
    void load_text(const std::string& text);
    void load_file(const std::string& path);
    std::string to_text() const;
    static const std::vector<std::string>& keys();

    LabelScheme scheme() const;
    GeometryTemplate geometry() const;
    TrainingGrid grid() const;
    TestRegion region() const;
    void validate() const;
};

struct TrainedDetectors {
    std::optional<KnnModel> knn;
    std::optional<SvmModel> svm;
    std::optional<TrainResult> bpnn;
    LabelScheme scheme = LabelScheme::single_mode({0});

    std::vector<Detector> detectors() const;
};

struct ExperimentResult {
    SampleSet train;
    SampleSet test;
    TrainedDetectors trained;
    std::vector<EvalReport> reports;              ///< test-region evaluation, one per detector
    std::optional<EvalReport> bpnn_train_report;  ///< BPNN on its own training set
};

SampleSet build_training_set(const ExperimentConfig& cfg);
SampleSet build_test_set(const ExperimentConfig& cfg, std::uint64_t seed);
TrainedDetectors train_detectors(const ExperimentConfig& cfg, const SampleSet& train);

/// Builds the grid, trains the selected detectors, evaluates on the test
/// region and, when cfg.out_dir is set, writes all artifacts there.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Table 1 style text table: method, accuracy, testing time.
std::string summary_table(const std::vector<EvalReport>& reports);

enum class SweepAxis { alpha, distance, snr };
SweepAxis parse_sweep_axis(const std::string& s);

struct SweepSpec {
    SweepAxis axis = SweepAxis::alpha;
    double from = 0.0;  ///< degrees for alpha, wavelengths for distance, dB for snr
    double to = 0.0;
    std::size_t steps = 1;
    std::size_t per_class = 200;
};

/// Accuracy of each detector at every axis point, as CSV with the axis value
/// in the first column. Detectors are trained once on the configured grid.
std::string sweep(const ExperimentConfig& cfg, const SweepSpec& spec);

/// Same, reusing already trained detectors.
std::string sweep(const ExperimentConfig& cfg, const TrainedDetectors& trained, const SweepSpec& spec);

struct PhaseFieldSpec {
    std::vector<std::vector<int>> mode_sets{{2}, {1, 2}};
    std::vector<double> alphas_deg{0.0, 5.0};
    double distance = 300.0;
    double extent = 0.0;  ///< half-width of the sampled square; 0 means 1.5 x rx radius
    std::size_t points = 101;
};

/// One CSV per (mode set, alpha): receive-plane coordinates u, v, the world
/// point, and the field magnitude and phase there. Keys are file names.
std::map<std::string, std::string> phase_field(const ExperimentConfig& cfg, const PhaseFieldSpec& spec);

}  // namespace oam
