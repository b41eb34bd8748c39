#include "oam/physics.hpp"

#include <cmath>
#include <string>

#include "oam/errors.hpp"

namespace oam {

double wrap_phase(double angle) {
    double w = std::remainder(angle, kTwoPi);
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

void UcaConfig::validate() const {
    if (n_elements < 1) throw DomainError("UCA needs at least one element");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("UCA radius must be positive");
    if (!(initial_angle >= 0.0 && initial_angle < kTwoPi))
        throw DomainError("UCA initial angle must lie in [0, 2pi)");
}

void LinkGeometry::validate() const {
    tx.validate();
    rx.validate();
    if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
    if (!(gain > 0.0)) throw DomainError("gain must be positive");
    if (!(oblique_angle >= 0.0 && oblique_angle < std::numbers::pi / 2))
        throw DomainError("oblique angle must lie in [0, pi/2)");
    if (!(center_distance > tx.radius + rx.radius))
        throw DomainError("center distance " + std::to_string(center_distance) +
                          " does not clear the array radii");
}

double element_azimuth(const UcaConfig& cfg, int n) {
    if (n < 1 || n > cfg.n_elements)
        throw DomainError("element index " + std::to_string(n) + " outside 1.." +
                          std::to_string(cfg.n_elements));
    double a = kTwoPi * (n - 1) / cfg.n_elements + cfg.initial_angle;
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a;
}

Vec3 tx_element_position(const LinkGeometry& geom, int n_t) {
    const double phi = element_azimuth(geom.tx, n_t);
    return {geom.tx.radius * std::cos(phi), geom.tx.radius * std::sin(phi), 0.0};
}

Vec3 rx_element_position(const LinkGeometry& geom, int n_r) {
    const double theta = element_azimuth(geom.rx, n_r);
    const double r = geom.rx.radius;
    const double a = geom.oblique_angle;
    return {r * std::cos(theta), r * std::sin(theta) * std::cos(a),
            geom.center_distance + r * std::sin(theta) * std::sin(a)};
}

double element_distance(const LinkGeometry& geom, int n_t, int n_r) {
    const double phi = element_azimuth(geom.tx, n_t);
    const double theta = element_azimuth(geom.rx, n_r);
    const double rt = geom.tx.radius;
    const double rr = geom.rx.radius;
    const double d = geom.center_distance;
    const double a = geom.oblique_angle;
    const double radicand =
        rr * rr + rt * rt + d * d + 2.0 * d * rr * std::sin(theta) * std::sin(a) -
        2.0 * rr * rt * (std::cos(phi) * std::cos(theta) + std::sin(phi) * std::sin(theta) * std::cos(a));
    if (!(radicand > 0.0))
        throw std::logic_error("negative squared distance for elements " + std::to_string(n_t) + ", " +
                               std::to_string(n_r));
    return std::sqrt(radicand);
}

cplx channel_coeff(const LinkGeometry& geom, double d) {
    if (!(d > 0.0)) throw DomainError("propagation distance must be positive");
    const double amplitude = geom.gain * geom.wavelength / (2.0 * kTwoPi * d);
    return std::polar(amplitude, -kTwoPi * d / geom.wavelength);
}

ChannelMatrix channel_matrix(const LinkGeometry& geom) {
    geom.validate();
    ChannelMatrix h{Eigen::MatrixXcd(geom.rx.n_elements, geom.tx.n_elements), geom};
    for (int nr = 1; nr <= geom.rx.n_elements; ++nr)
        for (int nt = 1; nt <= geom.tx.n_elements; ++nt)
            h.entries(nr - 1, nt - 1) = channel_coeff(geom, element_distance(geom, nt, nr));
    return h;
}

cplx field_at(const LinkGeometry& geom, const Vec3& point, const Eigen::VectorXcd& weights) {
    if (weights.size() != geom.tx.n_elements) throw DomainError("weight vector length differs from N_t");
    cplx sum = 0.0;
    for (int nt = 1; nt <= geom.tx.n_elements; ++nt) {
        const Vec3 p = tx_element_position(geom, nt);
        const double dx = point[0] - p[0], dy = point[1] - p[1], dz = point[2] - p[2];
        sum += channel_coeff(geom, std::sqrt(dx * dx + dy * dy + dz * dz)) * weights[nt - 1];
    }
    return sum;
}

Eigen::MatrixXcd dft_matrix(int n) {
    Eigen::MatrixXcd f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            f(r, c) = std::polar(scale, -kTwoPi * ((static_cast<long>(r) * c) % n) / n);
    return f;
}

double offdiagonal_energy_ratio(const Eigen::MatrixXcd& h) {
    if (h.rows() != h.cols()) throw DomainError("circulant check needs a square matrix");
    const Eigen::MatrixXcd f = dft_matrix(static_cast<int>(h.rows()));
    const Eigen::MatrixXcd lambda = f * h * f.adjoint();
    const double total = lambda.squaredNorm();
    const double diag = lambda.diagonal().squaredNorm();
    return (total - diag) / total;
}

}  // namespace oam
