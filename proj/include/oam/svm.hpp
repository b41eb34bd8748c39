#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oam/dataset.hpp"

namespace oam {

enum class KernelType { rbf, linear };

std::string to_string(KernelType k);
KernelType parse_kernel(const std::string& s);

struct SvmConfig {
    KernelType kernel = KernelType::rbf;
    double gamma = 0.0;  ///< rbf width; <= 0 selects 1 / (dim * feature variance)
    double c = 10.0;
    double tol = 1e-3;
    long max_iterations = 2'000'000;  ///< SMO pair updates per binary problem
    bool shuffle = false;             ///< permute sample order with `seed` before solving
    std::uint64_t seed = 0;
    std::size_t cache_mb = 256;

    void validate() const;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Kernel {
    KernelType type = KernelType::rbf;
    double gamma = 1.0;

    double operator()(std::span<const double> a, std::span<const double> b) const;
};

/// Solution of one two-class dual problem.
struct SvmBinary {
    int positive_class = 0;  ///< y = +1
    int negative_class = 1;  ///< y = -1
    RowMatrix support_vectors;        ///< one row per support vector
    Eigen::VectorXd dual_coef;        ///< alpha_i * y_i
    double bias = 0.0;                ///< f(x) = sum coef_i K(sv_i, x) + bias
    long iterations = 0;
    bool converged = false;
    double dual_objective = 0.0;  ///< 1/2 a^T Q a - sum(a) at termination

    double decision(const Kernel& k, std::span<const double> x) const;
};

/// Solves min 1/2 a^T Q a - 1^T a, 0 <= a <= c, y^T a = 0 by SMO with the
/// maximal-violating-pair working set. `x` holds one sample per row; `y` is +-1.
/// The returned binary keeps every sample with a > 0 as a support vector.
SvmBinary solve_binary(const Eigen::MatrixXd& x, const std::vector<int>& y, const Kernel& kernel,
                       const SvmConfig& cfg, std::vector<double>* alphas_out = nullptr);

/// One-vs-one multi-class SVM.
class SvmModel {
public:
    const std::vector<SvmBinary>& binaries() const { return binaries_; }
    const Kernel& kernel() const { return kernel_; }
    const std::vector<int>& classes() const { return classes_; }
    std::size_t feature_dim() const { return dim_; }
    const SvmConfig& config() const { return cfg_; }

    /// Majority vote over binaries. Ties go to the class with the largest
    /// summed |decision value| over the binaries it won, then the lowest index.
    int classify(std::span<const double> query) const;

    std::string to_json() const;
    static SvmModel from_json(const std::string& text);

private:
    friend SvmModel svm_train(const SampleSet&, const SvmConfig&);

    std::vector<SvmBinary> binaries_;
    std::vector<int> classes_;
    Kernel kernel_;
    SvmConfig cfg_;
    std::size_t dim_ = 0;
    LabelScheme scheme_ = LabelScheme::single_mode({0});
    FeatureEmbedding embedding_ = FeatureEmbedding::phase;
};

SvmModel svm_train(const SampleSet& train, const SvmConfig& cfg);

}  // namespace oam
