#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oam/physics.hpp"

namespace oam {

/// The OAM modes carried simultaneously on one carrier.
class ModeSet {
public:
    ModeSet() = default;
    explicit ModeSet(std::vector<int> modes);

    const std::vector<int>& modes() const { return modes_; }
    std::size_t size() const { return modes_.size(); }

    /// Throws DomainError if some mode is not resolvable by an n_tx element UCA
    /// or two modes alias onto the same DFT bin.
    void check_resolvable(int n_tx) const;

    /// "(0,+1)" style label.
    std::string to_string() const;

    bool operator==(const ModeSet&) const = default;

private:
    std::vector<int> modes_;
};

/// weights[n] = exp(-i 2 pi mode n / N_t) / sqrt(N_t), n = 0..N_t-1.
Eigen::VectorXcd steering_vector(int mode, int n_tx);

/// F_U^H 1_U: the UCA feed carrying every mode of `modes` with unit symbols.
Eigen::VectorXcd transmit_vector(const ModeSet& modes, int n_tx);

struct NoiseSpec {
    double snr_db = 30.0;
    std::uint64_t seed = 0;
};

struct ReceivedVector {
    Eigen::VectorXcd samples;
    std::optional<double> snr_db;
};

/// x = H F_U^H 1_U (+ z). Noise is circular complex Gaussian with per-element
/// variance set from the mean received power and the requested SNR.
ReceivedVector receive_exact(const LinkGeometry& geom, const ModeSet& modes,
                             std::optional<NoiseSpec> noise = std::nullopt);

/// First-order far-field model: amplitude 1/D for every path; phase path
/// length D + (rx element offset along the link axis) - (unit vector towards
/// the rx element) . (tx element position).
ReceivedVector receive_farfield(const LinkGeometry& geom, const ModeSet& modes);

/// Principal argument of every sample, each in (-pi, pi].
std::vector<double> phase_features(const ReceivedVector& x);

}  // namespace oam
