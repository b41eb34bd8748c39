#include "oam/oam_signal.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "oam/errors.hpp"

namespace oam {

namespace {

int positive_mod(int a, int n) { return ((a % n) + n) % n; }

}  // namespace

ModeSet::ModeSet(std::vector<int> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw DomainError("a mode set needs at least one mode");
}

void ModeSet::check_resolvable(int n_tx) const {
    if (modes_.empty()) throw DomainError("a mode set needs at least one mode");
    std::vector<int> bins;
    for (int m : modes_) {
        if (std::abs(m) > n_tx / 2)
            throw DomainError("mode " + std::to_string(m) + " is not resolvable by a " + std::to_string(n_tx) +
                              "-element UCA");
        bins.push_back(positive_mod(m, n_tx));
    }
    std::sort(bins.begin(), bins.end());
    if (std::adjacent_find(bins.begin(), bins.end()) != bins.end())
        throw DomainError("mode set " + to_string() + " contains modes that alias modulo N_t");
}

std::string ModeSet::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (i) os << ',';
        if (modes_[i] > 0) os << '+';
        os << modes_[i];
    }
    os << ')';
    return os.str();
}

Eigen::VectorXcd steering_vector(int mode, int n_tx) {
    if (n_tx < 1) throw DomainError("N_t must be positive");
    if (std::abs(mode) > n_tx / 2)
        throw DomainError("mode " + std::to_string(mode) + " is not resolvable by a " + std::to_string(n_tx) +
                          "-element UCA");
    Eigen::VectorXcd f(n_tx);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
    for (int n = 0; n < n_tx; ++n) {
        // reduce the integer product first so large n never loses phase precision
        const int k = positive_mod(mode * n, n_tx);
        f[n] = std::polar(scale, -kTwoPi * k / n_tx);
    }
    return f;
}

Eigen::VectorXcd transmit_vector(const ModeSet& modes, int n_tx) {
    modes.check_resolvable(n_tx);
    Eigen::VectorXcd t = Eigen::VectorXcd::Zero(n_tx);
    for (int m : modes.modes()) t += steering_vector(m, n_tx).conjugate();
    return t;
}

ReceivedVector receive_exact(const LinkGeometry& geom, const ModeSet& modes, std::optional<NoiseSpec> noise) {
    const ChannelMatrix h = channel_matrix(geom);
    ReceivedVector x{h.entries * transmit_vector(modes, geom.tx.n_elements), std::nullopt};
    if (noise) {
        const double signal_power = x.samples.squaredNorm() / static_cast<double>(x.samples.size());
        const double noise_power = signal_power / std::pow(10.0, noise->snr_db / 10.0);
        std::mt19937_64 rng(noise->seed);
        std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power / 2.0));
        for (auto& s : x.samples) s += cplx(gauss(rng), gauss(rng));
        x.snr_db = noise->snr_db;
    }
    return x;
}

ReceivedVector receive_farfield(const LinkGeometry& geom, const ModeSet& modes) {
    geom.validate();
    const Eigen::VectorXcd t = transmit_vector(modes, geom.tx.n_elements);
    const double d = geom.center_distance;
    const double k = geom.wavenumber();
    const double amplitude = geom.gain * geom.wavelength / (2.0 * kTwoPi * d);

    ReceivedVector x{Eigen::VectorXcd(geom.rx.n_elements), std::nullopt};
    for (int nr = 1; nr <= geom.rx.n_elements; ++nr) {
        const Vec3 p = rx_element_position(geom, nr);
        const double norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        const Vec3 u{p[0] / norm, p[1] / norm, p[2] / norm};
        cplx sum = 0.0;
        for (int nt = 1; nt <= geom.tx.n_elements; ++nt) {
            const Vec3 q = tx_element_position(geom, nt);
            const double path = d + (p[2] - d) - (u[0] * q[0] + u[1] * q[1] + u[2] * q[2]);
            sum += std::polar(amplitude, -k * path) * t[nt - 1];
        }
        x.samples[nr - 1] = sum;
    }
    return x;
}

std::vector<double> phase_features(const ReceivedVector& x) {
    std::vector<double> phases(static_cast<std::size_t>(x.samples.size()));
    for (Eigen::Index i = 0; i < x.samples.size(); ++i) {
        const cplx s = x.samples[i];
        if (s == cplx(0.0, 0.0) || !std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw DegenerateError("sample " + std::to_string(i + 1) + " has no defined phase");
        double a = std::arg(s);
        if (a == -std::numbers::pi) a = std::numbers::pi;
        phases[static_cast<std::size_t>(i)] = a;
    }
    return phases;
}

}  // namespace oam
