#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oam/errors.hpp"
#include "oam/physics.hpp"

using namespace oam;
using std::numbers::pi;

namespace {

LinkGeometry make_link(int nt, double rt, int nr, double rr, double d, double alpha_deg) {
    LinkGeometry g;
    g.tx = {nt, rt, 0.0};
    g.rx = {nr, rr, 0.0};
    g.center_distance = d;
    g.oblique_angle = deg2rad(alpha_deg);
    return g;
}

// Both arrays built as explicit point sets: the receive ring is drawn in its
// own plane, rotated about the x axis, then pushed out along z.
double oracle_distance(const LinkGeometry& g, int nt, int nr) {
    const double phi = 2 * pi * (nt - 1) / g.tx.n_elements + g.tx.initial_angle;
    const double theta = 2 * pi * (nr - 1) / g.rx.n_elements + g.rx.initial_angle;
    const double tx[3] = {g.tx.radius * std::cos(phi), g.tx.radius * std::sin(phi), 0.0};
    const double local[3] = {g.rx.radius * std::cos(theta), g.rx.radius * std::sin(theta), 0.0};
    const double c = std::cos(g.oblique_angle), s = std::sin(g.oblique_angle);
    const double rx[3] = {local[0], c * local[1] - s * local[2], s * local[1] + c * local[2] + g.center_distance};
    return std::hypot(rx[0] - tx[0], rx[1] - tx[1], rx[2] - tx[2]);
}

}  // namespace

TEST_CASE("wrap_phase lands in (-pi, pi]") {
    CHECK(wrap_phase(pi) == doctest::Approx(pi));
    CHECK(wrap_phase(-pi) == doctest::Approx(pi));
    CHECK(wrap_phase(3 * pi / 2) == doctest::Approx(-pi / 2));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng);
        const double w = wrap_phase(a);
        CHECK(w > -pi);
        CHECK(w <= pi);
        CHECK(std::abs(std::remainder(a - w, 2 * pi)) < 1e-9);
    }
}

TEST_CASE("element azimuths") {
    CHECK(element_azimuth({8, 1.0, 0.0}, 1) == 0.0);
    CHECK(element_azimuth({8, 1.0, 0.0}, 3) == doctest::Approx(pi / 2).epsilon(1e-15));
    CHECK(element_azimuth({10, 1.0, 0.1}, 6) == doctest::Approx(pi + 0.1).epsilon(1e-15));
    CHECK_THROWS_AS(element_azimuth({8, 1.0, 0.0}, 0), DomainError);
    CHECK_THROWS_AS(element_azimuth({8, 1.0, 0.0}, 9), DomainError);
}

TEST_CASE("geometry validation") {
    CHECK_THROWS_AS(make_link(8, 9, 10, 9, 18.0, 0).validate(), DomainError);
    CHECK_THROWS_AS(make_link(8, 9, 10, 9, 300, 90).validate(), DomainError);
    CHECK_THROWS_AS(make_link(0, 9, 10, 9, 300, 0).validate(), DomainError);
    CHECK_THROWS_AS(make_link(8, -1, 10, 9, 300, 0).validate(), DomainError);
    LinkGeometry g = make_link(8, 9, 10, 9, 300, 0);
    g.wavelength = 0;
    CHECK_THROWS_AS(g.validate(), DomainError);
    g = make_link(8, 9, 10, 9, 300, 0);
    g.rx.initial_angle = 2 * pi;
    CHECK_THROWS_AS(g.validate(), DomainError);
    CHECK_NOTHROW(make_link(8, 9, 10, 9, 300, 20).validate());
}

TEST_CASE("element distance closed cases") {
    const LinkGeometry g = make_link(8, 9, 8, 9, 300, 0);
    CHECK(element_distance(g, 1, 1) == doctest::Approx(300.0).epsilon(1e-15));
    const LinkGeometry h = make_link(8, 9, 8, 5, 300, 0);
    CHECK(element_distance(h, 1, 5) == doctest::Approx(std::sqrt(25.0 + 81 + 90000 + 2 * 45)).epsilon(1e-15));
}

TEST_CASE("element distance matches the 3-D point oracle") {
    for (double alpha : {0.0, 5.0, 20.0, 45.0}) {
        LinkGeometry g = make_link(8, 9, 10, 5, 300, alpha);
        g.tx.initial_angle = 0.3;
        g.rx.initial_angle = 1.1;
        for (int nt = 1; nt <= 8; ++nt)
            for (int nr = 1; nr <= 10; ++nr) {
                CHECK(element_distance(g, nt, nr) == doctest::Approx(oracle_distance(g, nt, nr)).epsilon(1e-13));
                const Vec3 a = tx_element_position(g, nt), b = rx_element_position(g, nr);
                CHECK(std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]) ==
                      doctest::Approx(element_distance(g, nt, nr)).epsilon(1e-13));
            }
    }
}

TEST_CASE("coaxial link is invariant under a common rotation") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        LinkGeometry g = make_link(6, 4 + 5 * u(rng), 7, 3 + 6 * u(rng), 200, 0);
        LinkGeometry r = g;
        const double delta = u(rng);
        r.tx.initial_angle = delta;
        r.rx.initial_angle = delta;
        for (int nt = 1; nt <= 6; ++nt)
            for (int nr = 1; nr <= 7; ++nr)
                CHECK(element_distance(g, nt, nr) == doctest::Approx(element_distance(r, nt, nr)).epsilon(1e-13));
    }
}

TEST_CASE("channel coefficient") {
    LinkGeometry g;
    const cplx one = channel_coeff(g, 1.0);
    CHECK(one.real() == doctest::Approx(1 / (4 * pi)).epsilon(1e-14));
    CHECK(std::abs(one.imag()) < 1e-15);
    const cplx half = channel_coeff(g, 0.5);
    CHECK(half.real() == doctest::Approx(-1 / (2 * pi)).epsilon(1e-14));
    CHECK(std::abs(half.imag()) < 1e-15);
    g.gain = 2.0;
    const cplx v = channel_coeff(g, 3.7);
    const double amp = 2.0 / (4 * pi * 3.7);
    CHECK(v.real() == doctest::Approx(amp * std::cos(2 * pi * 3.7)).epsilon(1e-13));
    CHECK(v.imag() == doctest::Approx(-amp * std::sin(2 * pi * 3.7)).epsilon(1e-13));
    CHECK_THROWS_AS(channel_coeff(g, 0.0), DomainError);
    CHECK_THROWS_AS(channel_coeff(g, -1.0), DomainError);
}

TEST_CASE("channel matrix entries and magnitudes") {
    const LinkGeometry g = make_link(8, 9, 10, 9, 300, 12);
    const ChannelMatrix h = channel_matrix(g);
    REQUIRE(h.rows() == 10);
    REQUIRE(h.cols() == 8);
    for (int nr = 1; nr <= 10; ++nr)
        for (int nt = 1; nt <= 8; ++nt) {
            const double d = oracle_distance(g, nt, nr);
            CHECK(std::abs(h(nr - 1, nt - 1)) == doctest::Approx(1.0 / (4 * pi * d)).epsilon(1e-13));
            CHECK(std::abs(h(nr - 1, nt - 1) - channel_coeff(g, element_distance(g, nt, nr))) == 0.0);
        }

    const LinkGeometry one = make_link(1, 2, 1, 3, 50, 0);
    const ChannelMatrix h1 = channel_matrix(one);
    REQUIRE(h1.rows() == 1);
    CHECK(h1(0, 0) == channel_coeff(one, element_distance(one, 1, 1)));
}

TEST_CASE("field_at reproduces the channel product at element positions") {
    const LinkGeometry g = make_link(8, 9, 10, 7, 250, 17);
    Eigen::VectorXcd w(8);
    for (int i = 0; i < 8; ++i) w(i) = std::polar(1.0 + 0.1 * i, 0.7 * i);
    const Eigen::VectorXcd x = channel_matrix(g).entries * w;
    for (int nr = 1; nr <= 10; ++nr)
        CHECK(std::abs(field_at(g, rx_element_position(g, nr), w) - x(nr - 1)) < 1e-15);
}

TEST_CASE("aligned square link is circulant and DFT-diagonal") {
    const LinkGeometry g = make_link(8, 9, 8, 9, 300, 0);
    const Eigen::MatrixXcd h = channel_matrix(g).entries;
    for (int r = 1; r < 8; ++r)
        for (int c = 0; c < 8; ++c) CHECK(std::abs(h(r, c) - h(r - 1, (c + 7) % 8)) < 1e-15);
    CHECK(offdiagonal_energy_ratio(h) < 1e-10);

    const Eigen::MatrixXcd f = dft_matrix(8);
    CHECK((f * f.adjoint() - Eigen::MatrixXcd::Identity(8, 8)).norm() < 1e-13);

    const LinkGeometry tilted = make_link(8, 9, 8, 9, 300, 5);
    CHECK(offdiagonal_energy_ratio(channel_matrix(tilted).entries) > 1e-6);
}
