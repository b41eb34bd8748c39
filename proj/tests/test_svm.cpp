#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oam/errors.hpp"
#include "oam/svm.hpp"
#include "oracles.hpp"

using namespace oam;
using oracle::brute_force_dual;
using oracle::dual;
using oracle::gram;

namespace {

SampleSet blobs(std::size_t per_class, int classes, double spread, std::uint64_t seed) {
    std::vector<int> modes;
    for (int c = 0; c < classes; ++c) modes.push_back(c);
    SampleSet s;
    s.scheme = LabelScheme::single_mode(modes);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    for (int c = 0; c < classes; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            const double ang = 2.0 * 3.14159265358979 * c / classes;
            s.samples.push_back({{2 * std::cos(ang) + g(rng), 2 * std::sin(ang) + g(rng)}, double(c), c, 0, 0});
        }
    return s;
}

}  // namespace

TEST_CASE("config validation") {
    SvmConfig c;
    CHECK_NOTHROW(c.validate());
    c.c = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = SvmConfig{};
    c.tol = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("symmetric two-point problem") {
    Eigen::MatrixXd x(2, 1);
    x << -1, 1;
    const std::vector<int> y{-1, 1};
    SvmConfig cfg;
    cfg.kernel = KernelType::linear;
    cfg.c = 1e6;
    cfg.tol = 1e-10;
    std::vector<double> alphas;
    const SvmBinary b = solve_binary(x, y, {KernelType::linear, 1.0}, cfg, &alphas);
    CHECK(b.converged);
    CHECK(b.support_vectors.rows() == 2);
    CHECK(std::abs(b.bias) < 1e-9);
    const Kernel k{KernelType::linear, 1.0};
    const double zero = 0.0, one = 1.0;
    CHECK(std::abs(b.decision(k, std::span<const double>(&zero, 1))) < 1e-9);
    // unit functional margin at |x| = 1 means w = 1, geometric margin 2
    CHECK(b.decision(k, std::span<const double>(&one, 1)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(alphas[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(alphas[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("dual objective matches a brute-force QP on six points") {
    Eigen::MatrixXd x(6, 2);
    x << 0.0, 0.1, 0.9, 1.1, 0.2, 0.8, 1.0, 0.1, 0.6, 0.4, -0.3, 0.5;
    const std::vector<int> y{1, 1, -1, -1, 1, -1};
    for (double c : {0.5, 3.0, 100.0}) {
        for (const Kernel k : {Kernel{KernelType::rbf, 1.5}, Kernel{KernelType::linear, 1.0}}) {
            SvmConfig cfg;
            cfg.c = c;
            cfg.kernel = k.type;
            cfg.tol = 1e-10;
            std::vector<double> alphas;
            const SvmBinary b = solve_binary(x, y, k, cfg, &alphas);
            const Eigen::MatrixXd q = gram(x, y, k);
            const double oracle = brute_force_dual(q, y, c);
            CHECK(std::abs(b.dual_objective - oracle) < 1e-6);
            CHECK(std::abs(dual(q, Eigen::Map<const Eigen::VectorXd>(alphas.data(), 6)) - oracle) < 1e-6);
        }
    }
}

TEST_CASE("solution satisfies the KKT conditions") {
    const SampleSet s = blobs(40, 2, 1.2, 7);
    Eigen::MatrixXd x(80, 2);
    std::vector<int> y;
    for (int i = 0; i < 80; ++i) {
        x(i, 0) = s.samples[static_cast<std::size_t>(i)].features[0];
        x(i, 1) = s.samples[static_cast<std::size_t>(i)].features[1];
        y.push_back(s.samples[static_cast<std::size_t>(i)].class_index == 0 ? 1 : -1);
    }
    SvmConfig cfg;
    cfg.c = 2.0;
    cfg.tol = 1e-6;
    const Kernel k{KernelType::rbf, 0.7};
    std::vector<double> a;
    const SvmBinary b = solve_binary(x, y, k, cfg, &a);
    REQUIRE(b.converged);
    double balance = 0.0;
    for (int i = 0; i < 80; ++i) {
        const double ai = a[static_cast<std::size_t>(i)];
        CHECK(ai >= 0.0);
        CHECK(ai <= cfg.c);
        balance += ai * y[static_cast<std::size_t>(i)];
        const Eigen::VectorXd xi = x.row(i);
        const double margin = y[static_cast<std::size_t>(i)] * b.decision(k, std::span<const double>(xi.data(), 2));
        if (ai < 1e-9) CHECK(margin >= 1 - 1e-3);
        else if (ai > cfg.c - 1e-9) CHECK(margin <= 1 + 1e-3);
        else CHECK(margin == doctest::Approx(1.0).epsilon(1e-3));
    }
    CHECK(std::abs(balance) < 1e-9);
}

TEST_CASE("rbf separates XOR") {
    SampleSet s;
    s.scheme = LabelScheme::single_mode({0, 1});
    s.samples = {{{0, 0}, 0, 0, 0, 0}, {{1, 1}, 0, 0, 0, 0}, {{0, 1}, 1, 1, 0, 0}, {{1, 0}, 1, 1, 0, 0}};
    SvmConfig cfg;
    cfg.gamma = 1.0;
    cfg.c = 10.0;
    const SvmModel m = svm_train(s, cfg);
    for (const auto& p : s.samples) CHECK(m.classify(p.features) == p.class_index);
    // interior point of class 0 in a separable layout
    const SampleSet sep = blobs(30, 2, 0.2, 3);
    const SvmModel ms = svm_train(sep, cfg);
    CHECK(ms.classify(std::vector<double>{2.0, 0.0}) == 0);
}

TEST_CASE("one-vs-one structure and retraining on support vectors") {
    const SampleSet s = blobs(50, 4, 0.9, 5);
    SvmConfig cfg;
    cfg.c = 5.0;
    cfg.tol = 1e-6;
    const SvmModel m = svm_train(s, cfg);
    CHECK(m.binaries().size() == 6);
    CHECK(m.classes().size() == 4);

    // A binary retrained on its own support vectors has the same decision function.
    const SvmBinary& b = m.binaries().front();
    Eigen::MatrixXd x(100, 2);
    std::vector<int> y;
    int row = 0;
    for (const auto& p : s.samples) {
        if (p.class_index != b.positive_class && p.class_index != b.negative_class) continue;
        x(row, 0) = p.features[0];
        x(row, 1) = p.features[1];
        y.push_back(p.class_index == b.positive_class ? 1 : -1);
        ++row;
    }
    const SvmBinary full = solve_binary(x, y, m.kernel(), cfg);
    std::vector<int> ysv;
    for (Eigen::Index i = 0; i < full.dual_coef.size(); ++i) ysv.push_back(full.dual_coef(i) > 0 ? 1 : -1);
    const SvmBinary again = solve_binary(Eigen::MatrixXd(full.support_vectors), ysv, m.kernel(), cfg);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 50; ++i) {
        const double q[2] = {u(rng), u(rng)};
        CHECK(again.decision(m.kernel(), q) == doctest::Approx(full.decision(m.kernel(), q)).epsilon(1e-3));
    }
}

TEST_CASE("degenerate input and JSON round trip") {
    SampleSet one;
    one.scheme = LabelScheme::single_mode({0, 1});
    one.samples = {{{0, 0}, 0, 0, 0, 0}, {{1, 1}, 0, 0, 0, 0}};
    CHECK_THROWS_AS(svm_train(one, SvmConfig{}), DegenerateError);

    const SampleSet s = blobs(20, 3, 0.8, 9);
    const SvmModel m = svm_train(s, SvmConfig{});
    CHECK(m.kernel().gamma > 0.0);
    const SvmModel r = SvmModel::from_json(m.to_json());
    CHECK(r.to_json() == m.to_json());
    const SampleSet q = blobs(20, 3, 1.5, 10);
    for (const auto& p : q.samples) CHECK(r.classify(p.features) == m.classify(p.features));
    CHECK_THROWS_AS(m.classify(std::vector<double>{1.0}), DomainError);
    CHECK_THROWS_AS(SvmModel::from_json("{\"type\": \"knn\"}"), ParseError);
}
