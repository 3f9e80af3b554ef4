#include "pnnsim/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pnnsim/dsp.hpp"
#include "pnnsim/fft.hpp"

namespace pnnsim {

namespace {

// Maximal-length tap stages per order (shift-left Fibonacci, feedback into
// stage 1, output taken from stage `order`). Index 0 <-> order 3.
constexpr int kMaxOrder = 31;
constexpr int kMinOrder = 3;
constexpr std::uint8_t kTaps[kMaxOrder - kMinOrder + 1][4] = {
    {3, 2, 0, 0},    {4, 3, 0, 0},    {5, 3, 0, 0},    {6, 5, 0, 0},
    {7, 6, 0, 0},    {8, 6, 5, 4},    {9, 5, 0, 0},    {10, 7, 0, 0},
    {11, 9, 0, 0},   {12, 6, 4, 1},   {13, 4, 3, 1},   {14, 5, 3, 1},
    {15, 14, 0, 0},  {16, 15, 13, 4}, {17, 14, 0, 0},  {18, 11, 0, 0},
    {19, 6, 2, 1},   {20, 17, 0, 0},  {21, 19, 0, 0},  {22, 21, 0, 0},
    {23, 18, 0, 0},  {24, 23, 22, 17},{25, 22, 0, 0},  {26, 6, 2, 1},
    {27, 5, 2, 1},   {28, 25, 0, 0},  {29, 27, 0, 0},  {30, 6, 4, 1},
    {31, 28, 0, 0},
};

int bits_per_symbol(int n_levels) {
    int b = 0;
    while ((1 << b) < n_levels) ++b;
    if ((1 << b) != n_levels || n_levels < 2)
        throw std::invalid_argument("map_pam: n_levels must be a power of two >= 2");
    return b;
}

}  // namespace

BitSequence generate_prbs(int order, std::uint64_t seed, std::size_t n_bits) {
    if (order < kMinOrder || order > kMaxOrder)
        throw std::invalid_argument("generate_prbs: order must be in [3, 31]");
    const std::uint32_t mask = (order == 32) ? 0xffffffffu : ((1u << order) - 1u);
    std::uint32_t state = std::uint32_t(seed) & mask;
    if (state == 0) throw std::invalid_argument("generate_prbs: seed must be nonzero modulo 2^order");

    const auto& taps = kTaps[order - kMinOrder];
    const std::uint32_t period = mask;  // 2^order - 1
    if (n_bits == 0) n_bits = period;

    BitSequence out;
    out.period = period;
    out.bits.resize(n_bits);
    std::vector<std::uint8_t> one_period(period);
    for (std::uint32_t t = 0; t < period; ++t) {
        one_period[t] = std::uint8_t((state >> (order - 1)) & 1u);
        std::uint32_t fb = 0;
        for (int i = 0; i < 4 && taps[i]; ++i) fb ^= (state >> (taps[i] - 1)) & 1u;
        state = ((state << 1) | fb) & mask;
    }
    for (std::size_t i = 0; i < n_bits; ++i) out.bits[i] = one_period[i % period];
    return out;
}

SymbolSequence map_pam(const BitSequence& bits, int n_levels, BitMap map) {
    const int b = bits_per_symbol(n_levels);
    if (bits.bits.size() % std::size_t(b) != 0)
        throw std::invalid_argument("map_pam: bit count not a multiple of bits per symbol");
    SymbolSequence out;
    out.n_levels = n_levels;
    out.sym.resize(bits.bits.size() / std::size_t(b));
    for (std::size_t n = 0; n < out.sym.size(); ++n) {
        int v = 0;
        if (map == BitMap::natural) {
            for (int i = 0; i < b; ++i) v = (v << 1) | bits.bits[n * b + i];
        } else {
            int prev = 0;  // Gray decode, MSB first
            for (int i = 0; i < b; ++i) {
                prev ^= bits.bits[n * b + i];
                v = (v << 1) | prev;
            }
        }
        out.sym[n] = v;
    }
    return out;
}

std::vector<std::uint8_t> symbols_to_bits(const SymbolSequence& sym, BitMap map) {
    const int b = bits_per_symbol(sym.n_levels);
    std::vector<std::uint8_t> bits(sym.sym.size() * std::size_t(b));
    for (std::size_t n = 0; n < sym.sym.size(); ++n) {
        const int v = sym.sym[n];
        if (v < 0 || v >= sym.n_levels) throw std::invalid_argument("symbols_to_bits: symbol out of range");
        const int code = (map == BitMap::gray) ? (v ^ (v >> 1)) : v;
        for (int i = 0; i < b; ++i) bits[n * b + i] = std::uint8_t((code >> (b - 1 - i)) & 1);
    }
    return bits;
}

std::vector<double> pam_amplitudes(int n_levels, double p_peak_mw) {
    if (n_levels < 2 || p_peak_mw < 0) throw std::invalid_argument("pam_amplitudes: bad arguments");
    std::vector<double> a(n_levels);
    for (int i = 0; i < n_levels; ++i)
        a[i] = std::sqrt(p_peak_mw * double(i) / double(n_levels - 1));
    return a;
}

ComplexEnvelope modulate(const SymbolSequence& sym, double baud_hz, int sps, double tx_bw_hz,
                         std::span<const double> level_amps) {
    if (sym.sym.empty()) throw std::invalid_argument("modulate: empty symbol sequence");
    if (baud_hz <= 0 || sps < 1 || tx_bw_hz <= 0) throw std::invalid_argument("modulate: bad rate arguments");
    if (int(level_amps.size()) != sym.n_levels)
        throw std::invalid_argument("modulate: level_amps size must equal n_levels");
    for (std::size_t i = 1; i < level_amps.size(); ++i)
        if (!(level_amps[i] >= level_amps[i - 1]))
            throw std::invalid_argument("modulate: level amplitudes must be nondecreasing");

    const std::size_t n = sym.sym.size() * std::size_t(sps);
    ComplexEnvelope env;
    env.rate_hz = baud_hz * double(sps);
    env.s.resize(n);
    for (std::size_t k = 0; k < sym.sym.size(); ++k) {
        const int v = sym.sym[k];
        if (v < 0 || v >= sym.n_levels) throw std::invalid_argument("modulate: symbol out of range");
        const cplx a(level_amps[std::size_t(v)], 0.0);
        for (int j = 0; j < sps; ++j) env.s[k * std::size_t(sps) + std::size_t(j)] = a;
    }

    auto spec = fft(env.s, false);
    const auto freq = fft_freq_hz(n, env.rate_hz);
    for (std::size_t k = 0; k < n; ++k) spec[k] *= bessel4_lowpass(freq[k], tx_bw_hz);
    fft(std::span<const cplx>(spec), std::span<cplx>(env.s), true);
    return env;
}

ComplexEnvelope resample(const ComplexEnvelope& env, double new_rate_hz, double max_alias_energy) {
    const std::size_t n = env.size();
    if (n == 0 || env.rate_hz <= 0 || new_rate_hz <= 0)
        throw std::invalid_argument("resample: bad envelope or rate");
    const double m_real = double(n) * new_rate_hz / env.rate_hz;
    const std::size_t m = std::size_t(std::llround(m_real));
    if (m == 0 || std::abs(m_real - double(m)) > 1e-6)
        throw std::invalid_argument("resample: rate ratio must keep an integer sample count on the periodic grid");
    if (m == n) {
        ComplexEnvelope same = env;
        return same;
    }

    const auto spec = fft(env.s, false);
    std::vector<cplx> out_spec(m, cplx(0.0, 0.0));
    const double scale = double(m) / double(n);

    if (m < n) {
        // Spectral truncation; track discarded energy to flag aliasing.
        double total = 0.0, kept = 0.0;
        for (const auto& v : spec) total += std::norm(v);
        const std::size_t half = m / 2;
        for (std::size_t k = 0; k < half; ++k) {
            out_spec[k] = spec[k] * scale;
            kept += std::norm(spec[k]);
        }
        for (std::size_t k = 1; k <= (m - 1) / 2; ++k) {
            out_spec[m - k] = spec[n - k] * scale;
            kept += std::norm(spec[n - k]);
        }
        if (m % 2 == 0) {
            // Fold both old bins that land on the new Nyquist frequency.
            out_spec[half] = (spec[half] + spec[n - half]) * scale;
            kept += std::norm(spec[half]) + std::norm(spec[n - half]);
        }
        if (total > 0 && (total - kept) / total > max_alias_energy)
            throw std::invalid_argument("resample: requested rate aliases " +
                                        std::to_string((total - kept) / total * 100.0) +
                                        "% of the signal energy");
    } else {
        const std::size_t half = n / 2;
        for (std::size_t k = 0; k < half; ++k) out_spec[k] = spec[k] * scale;
        for (std::size_t k = 1; k <= (n - 1) / 2; ++k) out_spec[m - k] = spec[n - k] * scale;
        if (n % 2 == 0) {
            // Split the old Nyquist bin symmetrically so real signals stay real.
            out_spec[half] = spec[half] * (0.5 * scale);
            out_spec[m - half] = spec[half] * (0.5 * scale);
        }
    }

    ComplexEnvelope out;
    out.rate_hz = new_rate_hz;
    out.carrier_offset_hz = env.carrier_offset_hz;
    out.s.resize(m);
    fft(std::span<const cplx>(out_spec), std::span<cplx>(out.s), true);
    return out;
}

}  // namespace pnnsim
