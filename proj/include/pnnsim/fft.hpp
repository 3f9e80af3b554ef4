#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pnnsim/types.hpp"

namespace pnnsim {

/// Out-of-place DFT, engineering sign convention (forward kernel e^{-j2πkn/N}).
/// Forward is unnormalized; inverse carries the 1/N factor. in == out is allowed
/// (an internal copy is made). Thread-safe; plans are cached per size.
void fft(std::span<const cplx> in, std::span<cplx> out, bool inverse);

std::vector<cplx> fft(const std::vector<cplx>& in, bool inverse);

/// Bin frequencies in Hz for an n-point transform at rate_hz, FFT storage order:
/// bin k holds k*rate/n for k < (n+1)/2, (k-n)*rate/n above (even n: bin n/2 is -Nyquist).
std::vector<double> fft_freq_hz(std::size_t n, double rate_hz);

/// Same grid in rad/s.
std::vector<double> fft_omega(std::size_t n, double rate_hz);

}  // namespace pnnsim
