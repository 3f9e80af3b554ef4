#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pnnsim/channel.hpp"
#include "pnnsim/fft.hpp"
#include "pnnsim/pnn.hpp"
#include "pnnsim/rng.hpp"

using namespace pnnsim;

namespace {

ComplexEnvelope random_env(std::size_t n, double rate_hz, std::uint64_t seed) {
    Rng rng(seed);
    ComplexEnvelope env;
    env.rate_hz = rate_hz;
    env.s.resize(n);
    for (auto& z : env.s) z = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return env;
}

double max_rel_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    REQUIRE(a.size() == b.size());
    double scale = 0.0;
    for (const auto& z : a) scale = std::max(scale, std::abs(z));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m / scale;
}

double rms_width_samples(const ComplexEnvelope& env) {
    double p = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
        p += std::norm(env.s[i]);
        m1 += std::norm(env.s[i]) * double(i);
    }
    m1 /= p;
    double m2 = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
        const double d = double(i) - m1;
        m2 += std::norm(env.s[i]) * d * d;
    }
    return std::sqrt(m2 / p);
}

double fwhm_samples(const ComplexEnvelope& env) {
    std::size_t im = 0;
    double pk = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i)
        if (std::norm(env.s[i]) > pk) {
            pk = std::norm(env.s[i]);
            im = i;
        }
    const double h = pk / 2.0;
    double l = 0.0, r = 0.0;
    for (std::size_t i = im; i > 0; --i) {
        const double a = std::norm(env.s[i - 1]), b = std::norm(env.s[i]);
        if (a < h && b >= h) {
            l = double(i - 1) + (h - a) / (b - a);
            break;
        }
    }
    for (std::size_t i = im; i + 1 < env.size(); ++i) {
        const double a = std::norm(env.s[i]), b = std::norm(env.s[i + 1]);
        if (a >= h && b < h) {
            r = double(i) + (a - h) / (a - b);
            break;
        }
    }
    return r - l;
}

double energy_within(const ComplexEnvelope& env, double half_window_samples) {
    double p = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
        p += std::norm(env.s[i]);
        m1 += std::norm(env.s[i]) * double(i);
    }
    m1 /= p;
    double in = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i)
        if (std::abs(double(i) - m1) <= half_window_samples) in += std::norm(env.s[i]);
    return in / p;
}

}  // namespace

TEST_CASE("layout construction") {
    const auto l = PnnLayout::make(4, 25e-12);
    REQUIRE(l.delays_s.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(l.delays_s[std::size_t(i)] == 25e-12 * i);
    for (double db : l.channel_loss_db) CHECK(db == 0.0);

    CHECK_THROWS_AS(PnnLayout::make(0, 25e-12), std::invalid_argument);
    CHECK_THROWS_AS(PnnLayout::make(4, -1e-12), std::invalid_argument);
    CHECK_THROWS_AS(PnnLayout::make(4, 25e-12, {0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(PnnLayout::make(2, 25e-12, {0.0, +1.0}), std::invalid_argument);
}

TEST_CASE("eight-channel device layout") {
    const auto l = default_layout8();
    CHECK(l.n_channels == 8);
    CHECK(l.delay_unit_s == 25e-12);
    const std::vector<double> losses = {-19.0, -15.5, -14.8, -14.7, -21.4, -16.0, -18.0, -20.0};
    CHECK(l.channel_loss_db == losses);
}

TEST_CASE("layout hash separates configurations") {
    const auto a = PnnLayout::make(8, 25e-12);
    auto b = a;
    CHECK(a.hash() == b.hash());
    b.delays_s[3] += 1e-15;
    CHECK(a.hash() != b.hash());
    auto c = a;
    c.channel_loss_db[0] = -1.0;
    CHECK(a.hash() != c.hash());
}

TEST_CASE("normalized wraps phases and anchors channel 1") {
    PnnWeights w;
    w.amplitude = {1.0, 0.5, 0.2};
    w.phase_rad = {1.0, 1.0 + 3 * kPi, 1.0 - kPi};
    const auto n = normalized(w);
    CHECK(n.phase_rad[0] == 0.0);
    for (double p : n.phase_rad) {
        CHECK(p > -kPi);
        CHECK(p <= kPi);
    }
    CHECK(n.phase_rad[1] == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(n.phase_rad[2] == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(n.amplitude == w.amplitude);
}

TEST_CASE("single lossless channel is the identity") {
    const auto env = random_env(128, 16e9, 2);
    const auto l = PnnLayout::make(1, 0.0);
    const auto y = apply_pnn(env, l, unit_weights(1));
    CHECK(max_rel_diff(env.s, y.s) < 1e-12);
}

TEST_CASE("single channel applies its insertion loss as a field factor") {
    const auto env = random_env(128, 16e9, 3);
    const double loss_db = 20.0 * std::log10(0.5);
    const auto l = PnnLayout::make(1, 0.0, {loss_db});
    const auto y = apply_pnn(env, l, unit_weights(1));
    for (std::size_t i = 0; i < env.size(); ++i)
        CHECK(std::abs(y.s[i] - 0.5 * env.s[i]) < 1e-12);
}

TEST_CASE("two equal channels interfere fully") {
    const auto env = random_env(128, 16e9, 4);
    const auto l = PnnLayout::make(2, 0.0);
    PnnWeights w = unit_weights(2);

    const auto sum = apply_pnn(env, l, w);  // (x + x) / 2
    CHECK(max_rel_diff(env.s, sum.s) < 1e-12);

    w.phase_rad[1] = kPi;  // (x - x) / 2
    const auto null = apply_pnn(env, l, w);
    double peak = 0.0;
    for (const auto& z : null.s) peak = std::max(peak, std::abs(z));
    CHECK(peak < 1e-12);
}

TEST_CASE("apply_pnn equals the direct shift-and-sum on integer delays") {
    const double rate = 16e9;
    const std::size_t n = 64;
    const auto env = [&] {
        auto e = random_env(n, rate, 5);
        e.carrier_offset_hz = 1.7e9;
        return e;
    }();
    const int m_unit = 3;  // samples per delay unit
    auto l = PnnLayout::make(3, double(m_unit) / rate, {0.0, -3.0, -7.0});
    PnnWeights w;
    w.amplitude = {1.0, 0.7, 0.3};
    w.phase_rad = {0.3, -1.2, 2.0};

    std::vector<cplx> want(n, 0.0);
    for (int i = 0; i < 3; ++i) {
        const double tau = l.delays_s[std::size_t(i)];
        const cplx c = std::polar(
            std::pow(10.0, l.channel_loss_db[std::size_t(i)] / 20.0) * w.amplitude[std::size_t(i)] / 3.0,
            w.phase_rad[std::size_t(i)] + kTwoPi * env.carrier_offset_hz * tau);
        const std::size_t shift = std::size_t(i * m_unit);
        for (std::size_t t = 0; t < n; ++t) want[t] += c * env.s[(t + n - shift) % n];
    }

    const auto y = apply_pnn(env, l, w);
    CHECK(max_rel_diff(want, y.s) < 1e-12);
}

TEST_CASE("apply_pnn is linear in the input") {
    const auto x = random_env(128, 16e9, 6);
    auto z = random_env(128, 16e9, 7);
    z.carrier_offset_hz = x.carrier_offset_hz;
    const auto l = default_layout8();
    PnnWeights w = unit_weights(8);
    w.phase_rad = ideal_phases(l, -2.625e-21);

    const cplx a(0.8, -0.1), b(0.3, 0.4);
    ComplexEnvelope mix = x;
    for (std::size_t i = 0; i < x.size(); ++i) mix.s[i] = a * x.s[i] + b * z.s[i];

    const auto ym = apply_pnn(mix, l, w);
    const auto yx = apply_pnn(x, l, w);
    const auto yz = apply_pnn(z, l, w);
    std::vector<cplx> want(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) want[i] = a * yx.s[i] + b * yz.s[i];
    CHECK(max_rel_diff(want, ym.s) < 1e-11);
}

TEST_CASE("a global phase shift leaves the output magnitude unchanged") {
    const auto env = random_env(256, 160e9, 8);
    const auto l = default_layout8();
    Rng rng(9);
    PnnWeights w;
    for (int i = 0; i < 8; ++i) {
        w.amplitude.push_back(rng.uniform());
        w.phase_rad.push_back(rng.uniform(-kPi, kPi));
    }
    PnnWeights shifted = w;
    const double c = 2.1;
    for (auto& p : shifted.phase_rad) p += c;

    const auto y0 = apply_pnn(env, l, w);
    const auto y1 = apply_pnn(env, l, shifted);
    const cplx rot = std::polar(1.0, c);
    for (std::size_t i = 0; i < env.size(); ++i) {
        CHECK(std::abs(std::abs(y1.s[i]) - std::abs(y0.s[i])) < 1e-10);
        CHECK(std::abs(y1.s[i] - rot * y0.s[i]) < 1e-10);
    }
}

TEST_CASE("apply_pnn agrees with the frequency response") {
    // Delaying by tau multiplies the e^{+j w t} component by e^{-j w tau},
    // so the bin-k multiplier is the response evaluated at -w_k.
    const auto env = [&] {
        auto e = random_env(64, 16e9, 10);
        e.carrier_offset_hz = 2.3e9;
        return e;
    }();
    const auto l = PnnLayout::make(4, 3.0 / 16e9, {0.0, -2.0, -5.0, -1.0});
    PnnWeights w;
    w.amplitude = {0.9, 0.6, 1.0, 0.2};
    w.phase_rad = {0.0, 1.1, -2.4, 0.5};

    auto omega = fft_omega(env.size(), env.rate_hz);
    for (auto& v : omega) v = -v;
    const auto h = pnn_frequency_response(l, w, omega, env.carrier_offset_hz);

    const auto X = fft(env.s, false);
    const auto Y = fft(apply_pnn(env, l, w).s, false);
    std::vector<cplx> want(X.size());
    for (std::size_t k = 0; k < X.size(); ++k) want[k] = h[k] * X[k];
    CHECK(max_rel_diff(want, Y) < 1e-10);
}

TEST_CASE("uniform delays make the response magnitude periodic in the FSR") {
    const auto l = PnnLayout::make(8, 25e-12);
    Rng rng(11);
    PnnWeights w;
    for (int i = 0; i < 8; ++i) {
        w.amplitude.push_back(rng.uniform());
        w.phase_rad.push_back(rng.uniform(-kPi, kPi));
    }
    const double fsr_w = kTwoPi / l.delay_unit_s;  // 2 pi * 40 GHz
    std::vector<double> base, shifted;
    for (int k = -50; k <= 50; ++k) {
        base.push_back(kTwoPi * 0.4e9 * k);
        shifted.push_back(kTwoPi * 0.4e9 * k + fsr_w);
    }
    const auto h0 = pnn_frequency_response(l, w, base, 0.0);
    const auto h1 = pnn_frequency_response(l, w, shifted, 0.0);
    for (std::size_t i = 0; i < h0.size(); ++i)
        CHECK(std::abs(h0[i]) == doctest::Approx(std::abs(h1[i])).epsilon(1e-9));
}

TEST_CASE("ideal phases follow the centered quadratic profile") {
    const auto l = default_layout8();
    const double b2l = -2.625e-21;  // 125 km at -0.021 ps^2/m
    const auto phi = ideal_phases(l, b2l);
    REQUIRE(phi.size() == 8);
    // ((i - N/2) dt)^2 / (2 b2l), i = 1..8: tap 1 = (75 ps)^2 / (-5250 ps^2).
    CHECK(phi[0] == doctest::Approx(-15.0 / 14.0).epsilon(1e-12));
    CHECK(phi[3] == 0.0);
    CHECK(phi[7] == doctest::Approx(-40.0 / 21.0).epsilon(1e-12));
    for (int i = 1; i <= 8; ++i) {
        const double t = (i - 4.0) * 25e-12;
        CHECK(phi[std::size_t(i - 1)] == doctest::Approx(t * t / (2.0 * b2l)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ideal_phases(l, 0.0), std::invalid_argument);
}

TEST_CASE("a dense ideal-phase line undoes pulse broadening") {
    // T0 = 40 ps keeps the pulse band inside the +/-200 ps tap window, where
    // the quadratic profile covers every stationary-phase delay. The hard
    // window edges leave weak Fresnel echoes (~2% of the energy, far from the
    // pulse), so the main lobe is judged by FWHM and energy concentration;
    // the raw second moment only has to recover most of the broadening.
    const double rate = 160e9;
    const std::size_t n = 4096;
    const double T0 = 40e-12;
    ComplexEnvelope pulse;
    pulse.rate_hz = rate;
    pulse.s.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (double(i) - double(n / 2)) / rate;
        pulse.s[i] = std::exp(-t * t / (2.0 * T0 * T0));
    }
    const FiberSpec fiber{125e3, -0.021, 0.0};
    const auto l = PnnLayout::make(512, 0.78125e-12);
    PnnWeights w;
    w.amplitude.assign(512, 1.0);
    w.phase_rad = ideal_phases(l, fiber.beta2_l_s2());

    const ComplexEnvelope disp = propagate(pulse, fiber);
    const ComplexEnvelope eq = propagate(apply_pnn(pulse, l, w), fiber);

    const double s0 = rms_width_samples(pulse);
    const double factor = std::sqrt(1.0 + std::pow(fiber.beta2_l_s2() / (T0 * T0), 2));
    CHECK(rms_width_samples(disp) == doctest::Approx(factor * s0).epsilon(0.01));
    CHECK(rms_width_samples(eq) < 0.8 * rms_width_samples(disp));

    CHECK(fwhm_samples(disp) > 1.8 * fwhm_samples(pulse));
    CHECK(fwhm_samples(eq) == doctest::Approx(fwhm_samples(pulse)).epsilon(0.02));

    CHECK(energy_within(pulse, 3.0 * s0) > 0.99);
    CHECK(energy_within(disp, 3.0 * s0) < 0.90);
    CHECK(energy_within(eq, 3.0 * s0) > 0.97);
}

TEST_CASE("required taps") {
    // 10 Gbps over 100 km with 50 ps taps and a 2 pi * 10 GHz signal band.
    CHECK(required_taps(10e9, -0.021e-24 * 100e3, 50e-12, kTwoPi * 10e9) == 4);
    // Default band = 2 pi * bit rate.
    CHECK(required_taps(10e9, -2.625e-21, 25e-12) == 10);
    CHECK(required_taps(10e9, -2.625e-21, 25e-12, kTwoPi * 10e9) == 10);
    // Dispersion-free: one symbol per tap window.
    CHECK(required_taps(10e9, 0.0, 50e-12) == 2);
}

TEST_CASE("heater calibration maps currents to weights") {
    const auto l = PnnLayout::make(3, 25e-12);
    auto calib = HeaterCalibration::uniform(3, 0.05, 0.0);
    REQUIRE(calib.alpha_rad_per_ma2.size() == 5);  // 2 phase + 3 MZI heaters

    // [phase ch2, phase ch3, mzi ch1..ch3]
    const double i_pi = std::sqrt(kPi / 0.05);
    std::vector<double> currents = {i_pi, 0.0, i_pi, std::sqrt(kPi / 2.0 / 0.05), 0.0};
    bool clamped = true;
    const auto w = currents_to_weights(currents, calib, l, &clamped);
    CHECK_FALSE(clamped);
    CHECK(w.phase_rad[0] == 0.0);  // channel 1 has no phase heater
    CHECK(w.phase_rad[1] == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(w.phase_rad[2] == 0.0);
    CHECK(w.amplitude[0] == doctest::Approx(1.0).epsilon(1e-12));          // sin^2(pi/2)
    CHECK(w.amplitude[1] == doctest::Approx(0.5).epsilon(1e-12));          // sin^2(pi/4)
    CHECK(w.amplitude[2] == doctest::Approx(0.0).epsilon(1e-12));

    // Out-of-range currents clamp and report it.
    std::vector<double> hot = currents;
    hot[0] = calib.max_current_ma + 10.0;
    const auto wc = currents_to_weights(hot, calib, l, &clamped);
    CHECK(clamped);
    CHECK(wc.phase_rad[1] ==
          doctest::Approx(0.05 * calib.max_current_ma * calib.max_current_ma).epsilon(1e-12));

    std::vector<double> neg = currents;
    neg[2] = -5.0;
    currents_to_weights(neg, calib, l, &clamped);
    CHECK(clamped);

    std::vector<double> short_vec = {1.0, 2.0};
    CHECK_THROWS_AS(currents_to_weights(short_vec, calib, l, nullptr), std::invalid_argument);
}

TEST_CASE("heater beta offsets shift the transduction") {
    const auto l = PnnLayout::make(2, 25e-12);
    HeaterCalibration calib = HeaterCalibration::uniform(2, 0.05, 0.0);
    calib.beta_rad = {0.3, kPi, 0.0};  // phase ch2, mzi ch1, mzi ch2
    const std::vector<double> idle = {0.0, 0.0, 0.0};
    const auto w = currents_to_weights(idle, calib, l, nullptr);
    CHECK(w.phase_rad[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(w.amplitude[0] == doctest::Approx(1.0).epsilon(1e-12));  // sin^2(pi/2)
    CHECK(w.amplitude[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("delay perturbation is bounded, seeded, and spares channel 1") {
    const auto l = default_layout8();
    const auto p0 = perturb_delays(l, 0.0, 5);
    CHECK(p0.delays_s == l.delays_s);

    const auto pa = perturb_delays(l, 0.03, 5);
    const auto pb = perturb_delays(l, 0.03, 5);
    const auto pc = perturb_delays(l, 0.03, 6);
    CHECK(pa.delays_s == pb.delays_s);
    CHECK(pa.delays_s != pc.delays_s);
    CHECK(pa.delays_s[0] == 0.0);

    bool any_moved = false;
    for (int i = 1; i < 8; ++i) {
        const double nominal = l.delays_s[std::size_t(i)];
        const double got = pa.delays_s[std::size_t(i)];
        CHECK(std::abs(got - nominal) <= 0.03 * nominal + 1e-18);
        any_moved = any_moved || got != nominal;
    }
    CHECK(any_moved);
    CHECK_THROWS_AS(perturb_delays(l, -0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(perturb_delays(l, 1.0, 1), std::invalid_argument);
}

TEST_CASE("apply_pnn validates weights and delays") {
    const auto env = random_env(32, 16e9, 12);
    const auto l = PnnLayout::make(2, 25e-12);
    PnnWeights bad = unit_weights(2);
    bad.amplitude[1] = 1.5;
    CHECK_THROWS_AS(apply_pnn(env, l, bad), std::invalid_argument);
    PnnWeights wrong_size = unit_weights(3);
    CHECK_THROWS_AS(apply_pnn(env, l, wrong_size), std::invalid_argument);

    // 8 channels x 25 ps needs more than 32 samples at 16 GS/s (2 us period).
    const auto big = PnnLayout::make(8, 300e-9);
    CHECK_THROWS_AS(apply_pnn(env, big, unit_weights(8)), std::invalid_argument);
}
