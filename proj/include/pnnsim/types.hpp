#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace pnnsim {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Complex baseband field envelope on a uniform periodic grid.
/// Samples carry units of sqrt(mW); |s|^2 is optical power in mW.
/// carrier_offset_hz is the laser detuning from the reference carrier the
/// static weights were trained at; it only matters inside the tapped delay line.
struct ComplexEnvelope {
    std::vector<cplx> s;
    double rate_hz = 0.0;
    double carrier_offset_hz = 0.0;

    std::size_t size() const { return s.size(); }
    double duration_s() const { return rate_hz > 0 ? double(s.size()) / rate_hz : 0.0; }
};

/// Real detected trace (mW) with its sampling grid and samples-per-symbol.
struct ElectricalTrace {
    std::vector<double> s;
    double rate_hz = 0.0;
    int sps = 0;

    std::size_t size() const { return s.size(); }
    std::size_t n_symbols() const { return sps > 0 ? s.size() / std::size_t(sps) : 0; }
};

struct BitSequence {
    std::vector<std::uint8_t> bits;  // values 0/1
    std::uint32_t period = 0;        // LFSR period, 2^order - 1
};

struct SymbolSequence {
    std::vector<int> sym;  // values in [0, n_levels)
    int n_levels = 4;
};

enum class BitMap { gray, natural };

}  // namespace pnnsim
