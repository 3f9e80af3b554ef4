#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pnnsim/types.hpp"

namespace pnnsim {

/// Maximal-length LFSR bit stream of period 2^order - 1 (order 3..31),
/// cyclically extended or truncated to n_bits (0 = exactly one period).
/// seed is the nonzero initial register content (masked to `order` bits).
BitSequence generate_prbs(int order, std::uint64_t seed, std::size_t n_bits = 0);

/// Consecutive log2(n_levels)-bit groups to symbol indices, MSB first.
/// Gray keeps adjacent levels one bit apart (00,01,11,10 -> 0,1,2,3).
SymbolSequence map_pam(const BitSequence& bits, int n_levels = 4, BitMap map = BitMap::gray);

/// Inverse of map_pam; used to produce the reference bit stream for error counting.
std::vector<std::uint8_t> symbols_to_bits(const SymbolSequence& sym, BitMap map);

/// Field amplitudes sqrt(intensity) for n equispaced intensity levels 0..p_peak_mw.
std::vector<double> pam_amplitudes(int n_levels, double p_peak_mw);

/// Rectangular symbol train at the given field amplitudes, sps samples per
/// symbol, shaped by a 4th-order Bessel low-pass at tx_bw_hz (periodic,
/// frequency-domain). Homogeneous of degree one in level_amps.
ComplexEnvelope modulate(const SymbolSequence& sym, double baud_hz, int sps, double tx_bw_hz,
                         std::span<const double> level_amps);

/// Band-limited resampling on the periodic grid (spectral truncation or
/// zero-padding). The rate ratio must keep the sample count integer. Throws
/// if more than max_alias_energy of the spectral energy would be discarded.
ComplexEnvelope resample(const ComplexEnvelope& env, double new_rate_hz,
                         double max_alias_energy = 1e-3);

}  // namespace pnnsim
