#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oam/dataset.hpp"

namespace oam {

/// (e^x - e^-x) / (e^x + e^-x), saturating to exactly +-1 for |x| > 20.
double tanh_act(double x);

/// Two-layer perceptron: tanh hidden layer, linear output, with the
/// dataset's min-max normalization applied on input and inverted on output.
struct BpnnModel {
    Eigen::MatrixXd w1;      ///< hidden x input
    Eigen::VectorXd b1;      ///< hidden
    Eigen::RowVectorXd w2;   ///< 1 x hidden
    double b2 = 0.0;
    NormParams norm;

    std::size_t hidden_count() const { return static_cast<std::size_t>(w1.rows()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
    std::size_t parameter_count() const { return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + 1); }

    /// Flattened parameters: w1 row-major, b1, w2, b2.
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& p);

    /// Network output on already-normalized input, normalized label scale.
    double forward_normalized(std::span<const double> x) const;

    /// Random fan-in-scaled initialization, uniform in +-1/sqrt(fan_in).
    static BpnnModel initialize(std::size_t input_dim, std::size_t hidden, const NormParams& norm,
                                std::uint64_t seed);
};

/// normalize -> W1 x + b1 -> tanh -> W2 h + b2 -> inverse-normalize.
double bpnn_forward(const BpnnModel& model, std::span<const double> features);

/// Nearest numeric label of `scheme` to the forward output, ties to the lower label.
int bpnn_predict_class(const BpnnModel& model, std::span<const double> features, const LabelScheme& scheme);

/// Normalized inputs (one row per sample) and normalized targets.
struct Batch {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd targets;
};

Batch make_batch(const SampleSet& set, const NormParams& norm);

struct GradientResult {
    Eigen::VectorXd residuals;  ///< e = output - target
    Eigen::MatrixXd jacobian;   ///< de_i / dw_j, samples x parameters
    Eigen::VectorXd gradient;   ///< d(SSE)/dw by backpropagation, equal to 2 J^T e
};

GradientResult bpnn_gradient(const BpnnModel& model, const Batch& batch);

struct TrainConfig {
    int max_epochs = 1000;
    double mse_goal = 1e-7;  ///< on the original label scale
    double mu_init = 5e-3;
    double mu_inc = 10.0;
    double mu_dec = 0.1;
    double mu_max = 1e10;
    bool bayesian = true;     ///< re-estimate mu_D, mu_W after each accepted step
    double mu_d_init = 1.0;   ///< data-term weight
    double mu_w_init = 0.0;   ///< weight-decay term weight
    std::uint64_t seed = 1;

    void validate() const;
};

enum class StopReason { mse_goal, max_epochs, mu_max };
std::string to_string(StopReason r);

struct EpochRecord {
    int epoch = 0;
    double mse = 0.0;             ///< original label scale
    double objective_before = 0.0;
    double objective_after = 0.0; ///< same mu_D, mu_W as objective_before
    double mu = 0.0;
    double gamma_eff = 0.0;
    double mu_d = 0.0;
    double mu_w = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;  ///< one record per accepted step
    double initial_mse = 0.0;
    double final_mse = 0.0;
    double gamma_eff = 0.0;
    StopReason stop = StopReason::max_epochs;
    int epoch_count = 0;

    std::string to_csv() const;
};

struct TrainResult {
    BpnnModel model;
    TrainReport report;
};

/// Levenberg-Marquardt on F = mu_D * SSE + mu_W * |w|^2 over the normalized
/// training set. A step is kept only if F decreases at fixed mu_D, mu_W.
TrainResult bpnn_train(const SampleSet& train, std::size_t hidden_count, const TrainConfig& cfg);

std::string to_json(const BpnnModel& model, const LabelScheme& scheme, const TrainConfig& cfg);
struct LoadedBpnn {
    BpnnModel model;
    LabelScheme scheme;
    TrainConfig config;
};
LoadedBpnn bpnn_from_json(const std::string& text);

}  // namespace oam
