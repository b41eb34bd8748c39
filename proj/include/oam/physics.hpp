#pragma once

#include <array>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace oam {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle onto (-pi, pi].
double wrap_phase(double angle);

/// One uniform circular array. Radius is in the same length unit as the
/// link wavelength.
struct UcaConfig {
    int n_elements = 1;
    double radius = 1.0;
    double initial_angle = 0.0;

    void validate() const;
};

/// Transmit and receive UCAs facing each other at center distance D, the
/// receive array tilted by the oblique angle about its local x axis.
struct LinkGeometry {
    UcaConfig tx;
    UcaConfig rx;
    double center_distance = 300.0;
    double oblique_angle = 0.0;
    double wavelength = 1.0;
    double gain = 1.0;

    double wavenumber() const { return kTwoPi / wavelength; }
    void validate() const;
};

/// Complex N_r x N_t matrix of line-of-sight coefficients.
struct ChannelMatrix {
    Eigen::MatrixXcd entries;
    LinkGeometry geometry;

    Eigen::Index rows() const { return entries.rows(); }
    Eigen::Index cols() const { return entries.cols(); }
    cplx operator()(Eigen::Index nr, Eigen::Index nt) const { return entries(nr, nt); }
};

/// Azimuth of element n (1-based) reduced to [0, 2pi).
double element_azimuth(const UcaConfig& cfg, int n);

/// Transmit element n_t position; the transmit UCA lies in the z = 0 plane.
Vec3 tx_element_position(const LinkGeometry& geom, int n_t);

/// Receive element n_r position; the receive UCA is centered at (0, 0, D)
/// and rotated by the oblique angle about the x axis.
Vec3 rx_element_position(const LinkGeometry& geom, int n_r);

/// Distance between transmit element n_t and receive element n_r, both 1-based.
double element_distance(const LinkGeometry& geom, int n_t, int n_r);

/// Free-space coefficient beta * lambda / (4 pi d) * exp(-j 2 pi d / lambda).
cplx channel_coeff(const LinkGeometry& geom, double d);

ChannelMatrix channel_matrix(const LinkGeometry& geom);

/// Field at an arbitrary point produced by feeding the transmit UCA with
/// `weights` (one complex weight per transmit element).
cplx field_at(const LinkGeometry& geom, const Vec3& point, const Eigen::VectorXcd& weights);

/// Unitary N-point DFT matrix, F(m, n) = exp(-j 2 pi m n / N) / sqrt(N).
Eigen::MatrixXcd dft_matrix(int n);

/// Energy of the off-diagonal part of F H F^H relative to its total energy.
double offdiagonal_energy_ratio(const Eigen::MatrixXcd& h);

}  // namespace oam
