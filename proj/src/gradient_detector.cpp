#include "oam/gradient_detector.hpp"

#include <algorithm>
#include <cmath>

#include "oam/errors.hpp"

namespace oam {

GradientEstimate gradient_detect(const ReceivedVector& x) {
    const std::vector<double> phase = phase_features(x);
    const std::size_t n = phase.size();
    if (n < 2) throw DomainError("phase-gradient detection needs at least two receive elements");

    std::vector<double> steps(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        steps[i] = wrap_phase(phase[(i + 1) % n] - phase[i]);
        total += steps[i];
    }
    GradientEstimate est;
    est.raw_winding = total / kTwoPi;
    est.mode_estimate = static_cast<int>(std::lround(est.raw_winding));
    const double ideal = kTwoPi * est.mode_estimate / static_cast<double>(n);
    for (double s : steps) est.residual = std::max(est.residual, std::abs(s - ideal));
    return est;
}

}  // namespace oam
