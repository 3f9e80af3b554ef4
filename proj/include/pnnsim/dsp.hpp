#pragma once

#include <cmath>

#include "pnnsim/types.hpp"

namespace pnnsim {

/// -3 dB angular scale of the delay-normalized 4th-order Bessel polynomial.
inline constexpr double kBessel4Cut = 2.113917674904215;

/// 4th-order Bessel low-pass response at f_hz for the given -3 dB cutoff,
/// with the DC group delay removed (the filter is flat-delay by design, so
/// removing the bulk delay keeps symbol centers on their grid slots).
/// H(-f) = conj(H(f)), so real traces stay real.
inline cplx bessel4_lowpass(double f_hz, double cutoff_hz) {
    const double x = kBessel4Cut * f_hz / cutoff_hz;
    const double x2 = x * x;
    // B4(jx) = (x^4 - 45 x^2 + 105) + j(105 x - 10 x^3)
    const cplx b4(x2 * x2 - 45.0 * x2 + 105.0, x * (105.0 - 10.0 * x2));
    const cplx h = 105.0 / b4;
    // e^{+jx} cancels the unit DC group delay of the normalized prototype.
    return h * cplx(std::cos(x), std::sin(x));
}

}  // namespace pnnsim
