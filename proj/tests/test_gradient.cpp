#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oam/errors.hpp"
#include "oam/gradient_detector.hpp"

using namespace oam;
using std::numbers::pi;

namespace {

LinkGeometry aligned(double alpha_deg, double theta0) {
    LinkGeometry g;
    g.tx = {8, 9.0, 0.0};
    g.rx = {10, 9.0, theta0};
    g.center_distance = 300.0;
    g.oblique_angle = deg2rad(alpha_deg);
    return g;
}

}  // namespace

TEST_CASE("aligned link recovers every mode") {
    for (int l = -3; l <= 3; ++l) {
        const GradientEstimate e = gradient_detect(receive_exact(aligned(0, 0), ModeSet({l})));
        CHECK(e.mode_estimate == l);
        CHECK(e.residual < 0.05);
        CHECK(std::abs(e.raw_winding - e.mode_estimate) <= 0.5);
    }
}

TEST_CASE("ideal spiral") {
    ReceivedVector x{Eigen::VectorXcd(10), std::nullopt};
    for (int n = 0; n < 10; ++n) x.samples(n) = std::polar(1.0, 2 * pi * 2 * n / 10);
    const GradientEstimate e = gradient_detect(x);
    CHECK(e.mode_estimate == 2);
    CHECK(e.raw_winding == doctest::Approx(2.0));
    CHECK(e.residual < 1e-12);
}

TEST_CASE("tilt breaks the estimate for some receiver rotation") {
    bool broken = false;
    for (int step = 0; step < 40; ++step) {
        const GradientEstimate e = gradient_detect(receive_exact(aligned(5, deg2rad(9.0 * step)), ModeSet({2})));
        broken |= e.mode_estimate != 2 || e.residual >= 0.05;
    }
    CHECK(broken);
}

TEST_CASE("winding ignores a global phase rotation") {
    const ReceivedVector x = receive_exact(aligned(12, 0.5), ModeSet({-2}));
    for (double rot : {0.3, 1.7, -2.9}) {
        ReceivedVector y = x;
        y.samples *= std::polar(1.0, rot);
        CHECK(gradient_detect(y).raw_winding == doctest::Approx(gradient_detect(x).raw_winding).epsilon(1e-12));
    }
}

TEST_CASE("degenerate inputs") {
    ReceivedVector one{Eigen::VectorXcd::Ones(1), std::nullopt};
    CHECK_THROWS_AS(gradient_detect(one), DomainError);
    ReceivedVector zero{Eigen::VectorXcd::Ones(4), std::nullopt};
    zero.samples(2) = 0.0;
    CHECK_THROWS_AS(gradient_detect(zero), DegenerateError);
}
