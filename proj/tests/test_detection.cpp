#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pnnsim/detection.hpp"
#include "pnnsim/dsp.hpp"
#include "pnnsim/rng.hpp"
#include "pnnsim/types.hpp"

using namespace pnnsim;

namespace {

ElectricalTrace symbol_trace(const std::vector<double>& per_symbol, int sps, double baud) {
    ElectricalTrace tr;
    tr.sps = sps;
    tr.rate_hz = baud * sps;
    for (double v : per_symbol)
        for (int k = 0; k < sps; ++k) tr.s.push_back(v);
    return tr;
}

}  // namespace

TEST_CASE("bessel4_lowpass reference points") {
    CHECK(bessel4_lowpass(0.0, 10e9) == cplx(1.0, 0.0));
    // -3 dB at the cutoff by construction.
    CHECK(std::abs(bessel4_lowpass(10e9, 10e9)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    // Hermitian symmetry keeps real signals real.
    const cplx hp = bessel4_lowpass(3e9, 10e9);
    const cplx hm = bessel4_lowpass(-3e9, 10e9);
    CHECK(hm == std::conj(hp));
    // Monotone rolloff well past the cutoff.
    CHECK(std::abs(bessel4_lowpass(30e9, 10e9)) < 0.1);
}

TEST_CASE("photodetect is the exact square law") {
    ComplexEnvelope env;
    env.rate_hz = 160e9;
    Rng rng(3);
    env.s.resize(160);
    for (auto& z : env.s) z = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const auto tr = photodetect(env, 10e9);
    CHECK(tr.rate_hz == env.rate_hz);
    CHECK(tr.sps == 16);
    REQUIRE(tr.size() == env.size());
    for (std::size_t i = 0; i < tr.size(); ++i) CHECK(tr.s[i] == std::norm(env.s[i]));
}

TEST_CASE("photodetect scales quadratically with the field") {
    ComplexEnvelope env;
    env.rate_hz = 160e9;
    env.s = {cplx(0.5, 0.25), cplx(-1.0, 2.0)};
    ComplexEnvelope scaled = env;
    for (auto& z : scaled.s) z *= 2.0;
    const auto a = photodetect(env, 80e9);
    const auto b = photodetect(scaled, 80e9);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.s[i] == 4.0 * a.s[i]);
}

TEST_CASE("receiver chain passes DC untouched and decimates cleanly") {
    const double baud = 10e9;
    ElectricalTrace tr = symbol_trace(std::vector<double>(32, 0.7), 16, baud);
    const auto out = receiver_chain(tr, 20e9, 16e9, 8 * baud);
    CHECK(out.sps == 8);
    CHECK(out.rate_hz == 80e9);
    REQUIRE(out.size() == 32 * 8);  // symbol count preserved
    for (double v : out.s) CHECK(v == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("receiver chain attenuates a cutoff-frequency tone by 3 dB") {
    const double baud = 10e9;
    const int sps = 16;
    const double rate = baud * sps;
    const double f0 = 20e9;
    ElectricalTrace tr;
    tr.sps = sps;
    tr.rate_hz = rate;
    const std::size_t n = 1024;
    for (std::size_t i = 0; i < n; ++i)
        tr.s.push_back(1.0 + 0.5 * std::cos(kTwoPi * f0 * double(i) / rate));

    // A scope bandwidth far above the tone isolates the photodiode filter;
    // the tone amplitude is read off its own DFT bin (exact for 128 whole
    // cycles), since 8 samples per cycle undersample the peaks. The nominally
    // flat scope stage still costs a few ppm at the tone, so the tolerance
    // checks the -3 dB calibration, not ppm-level flatness.
    const auto out = receiver_chain(tr, f0, 5e12, rate);
    cplx bin(0.0, 0.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        bin += out.s[i] * std::polar(1.0, -kTwoPi * f0 * double(i) / rate);
        mean += out.s[i];
    }
    const double amplitude = 2.0 * std::abs(bin) / double(out.size());
    CHECK(amplitude == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-4));
    CHECK(mean / double(out.size()) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("receiver chain validates rate ratios") {
    ElectricalTrace tr = symbol_trace({1.0, 2.0, 3.0, 4.0}, 16, 10e9);
    CHECK_THROWS_AS(receiver_chain(tr, 20e9, 16e9, 70e9), std::invalid_argument);
    CHECK_THROWS_AS(receiver_chain(tr, 20e9, 16e9, 15e9), std::invalid_argument);
}

TEST_CASE("align recovers a constructed circular shift") {
    Rng rng(8);
    SymbolSequence target;
    target.n_levels = 4;
    for (int i = 0; i < 64; ++i) target.sym.push_back(int(rng.uniform() * 4));

    const int sps = 2;
    std::vector<double> values;
    for (int s : target.sym) values.push_back(double(s));

    for (int shift : {0, 1, 37, 63}) {
        ElectricalTrace tr;
        tr.sps = sps;
        tr.rate_hz = 20e9;
        tr.s.resize(values.size() * sps);
        for (std::size_t i = 0; i < values.size(); ++i)
            for (int k = 0; k < sps; ++k)
                tr.s[((i + std::size_t(shift)) % values.size()) * sps + std::size_t(k)] =
                    values[i];

        const auto res = align(tr, target);
        CHECK(res.defined);
        for (std::size_t i = 0; i < values.size(); ++i)
            CHECK(res.trace.s[i * sps + sps / 2] == values[i]);
    }
}

TEST_CASE("align is idempotent") {
    Rng rng(9);
    SymbolSequence target;
    target.n_levels = 4;
    for (int i = 0; i < 48; ++i) target.sym.push_back(int(rng.uniform() * 4));
    ElectricalTrace tr;
    tr.sps = 4;
    tr.rate_hz = 40e9;
    for (int s : target.sym)
        for (int k = 0; k < 4; ++k) tr.s.push_back(double(s) + 0.01 * k);
    // Roll by 11 symbols.
    std::rotate(tr.s.begin(), tr.s.begin() + tr.s.size() - 11 * 4, tr.s.end());

    const auto once = align(tr, target);
    const auto twice = align(once.trace, target);
    CHECK(twice.shift_symbols == 0);
    CHECK(twice.trace.s == once.trace.s);
}

TEST_CASE("align flags traces without variance") {
    SymbolSequence target;
    target.n_levels = 4;
    target.sym = {0, 1, 2, 3, 2, 1, 0, 1};
    ElectricalTrace flat = symbol_trace(std::vector<double>(8, 1.0), 2, 10e9);
    const auto res = align(flat, target);
    CHECK_FALSE(res.defined);
}
