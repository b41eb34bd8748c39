#pragma once

#include "oam/oam_signal.hpp"

namespace oam {

/// Classical circular phase-gradient estimate of a single OAM mode.
struct GradientEstimate {
    int mode_estimate = 0;
    double raw_winding = 0.0;  ///< total unwrapped phase around the ring / 2pi
    double residual = 0.0;     ///< max |step - 2 pi mode / N_r| over the N_r steps
};

/// Sums the wrapped phase steps between adjacent receive elements, including
/// the closing step from the last element back to the first.
GradientEstimate gradient_detect(const ReceivedVector& x);

}  // namespace oam
