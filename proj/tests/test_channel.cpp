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

double energy(const ComplexEnvelope& env) {
    double e = 0.0;
    for (const auto& z : env.s) e += std::norm(z);
    return e;
}

double rel_rms(const ComplexEnvelope& a, const ComplexEnvelope& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a.s[i] - b.s[i]);
        den += std::norm(a.s[i]);
    }
    return std::sqrt(num / den);
}

// Power-profile rms width of a centered pulse, by circular moments.
double rms_width_s(const ComplexEnvelope& env) {
    const double dt = 1.0 / env.rate_hz;
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
    return std::sqrt(m2 / p) * dt;
}

}  // namespace

TEST_CASE("fiber transfer magnitude and phase") {
    FiberSpec fiber{125e3, -0.021, 0.0};
    const auto omega = fft_omega(256, 160e9);
    const auto h = fiber_transfer(omega, fiber);

    SUBCASE("lossless mask is unit modulus") {
        for (const auto& v : h) CHECK(std::abs(std::abs(v) - 1.0) < 1e-12);
    }
    SUBCASE("zero frequency carries only the flat attenuation") {
        CHECK(h[0] == cplx(1.0, 0.0));
        FiberSpec lossy{125e3, -0.021, 0.2};
        const auto hl = fiber_transfer(omega, lossy);
        CHECK(std::abs(hl[0]) == doctest::Approx(std::pow(10.0, -25.0 / 20.0)).epsilon(1e-14));
    }
    SUBCASE("quadratic phase at 10 GHz") {
        // beta2*L = -2625 ps^2; arg H = beta2 L w^2 / 2 = -5.18154231 rad.
        const double w = kTwoPi * 10e9;
        const double want = fiber.beta2_l_s2() * w * w / 2.0;
        CHECK(want == doctest::Approx(-5.18154231).epsilon(1e-8));
        const std::vector<double> grid = {w, -w};
        const auto hv = fiber_transfer(grid, fiber);
        CHECK(std::arg(hv[0]) == doctest::Approx(std::remainder(want, kTwoPi)).epsilon(1e-12));
        CHECK(hv[0] == hv[1]);  // even in omega
    }
}

TEST_CASE("propagate: the opposite-sign span inverts the channel") {
    const auto env = random_env(4096, 160e9, 21);
    const FiberSpec fwd{125e3, -0.021, 0.0};
    const FiberSpec bwd{125e3, +0.021, 0.0};
    const auto back = propagate(propagate(env, fwd), bwd);
    CHECK(rel_rms(env, back) < 1e-9);
}

TEST_CASE("propagate conserves or attenuates energy exactly") {
    const auto env = random_env(2048, 160e9, 22);
    const FiberSpec lossless{80e3, -0.021, 0.0};
    CHECK(energy(propagate(env, lossless)) == doctest::Approx(energy(env)).epsilon(1e-9));

    const FiberSpec lossy{125e3, -0.021, 0.2};
    const double a2 = std::pow(10.0, -2.5);  // 25 dB power loss
    CHECK(energy(propagate(env, lossy)) == doctest::Approx(a2 * energy(env)).epsilon(1e-12));
}

TEST_CASE("propagate composes over distance") {
    const auto env = random_env(1024, 160e9, 23);
    const FiberSpec half{62.5e3, -0.021, 0.2};
    const FiberSpec full{125e3, -0.021, 0.2};
    const auto two = propagate(propagate(env, half), half);
    const auto one = propagate(env, full);
    CHECK(rel_rms(one, two) < 1e-12);
}

TEST_CASE("propagate rejects non-finite samples") {
    auto env = random_env(64, 160e9, 24);
    env.s[10] = cplx(std::nan(""), 0.0);
    CHECK_THROWS_AS(propagate(env, FiberSpec{1e3, -0.021, 0.0}), std::invalid_argument);
}

TEST_CASE("gaussian pulse broadens by the closed-form dispersion factor") {
    // Field exp(-t^2 / (2 T0^2)): the power rms width grows by
    // sqrt(1 + (beta2 L / T0^2)^2) over the span.
    const double T0 = 20e-12;
    const double rate = 160e9;
    const std::size_t n = 2048;
    ComplexEnvelope env;
    env.rate_hz = rate;
    env.s.resize(n);
    const double t_mid = double(n / 2) / rate;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / rate - t_mid;
        env.s[i] = std::exp(-t * t / (2.0 * T0 * T0));
    }
    const FiberSpec fiber{125e3, -0.021, 0.0};
    const double s0 = rms_width_s(env);
    const double s1 = rms_width_s(propagate(env, fiber));
    const double factor = std::sqrt(1.0 + std::pow(fiber.beta2_l_s2() / (T0 * T0), 2));
    CHECK(s0 == doctest::Approx(T0 / std::sqrt(2.0)).epsilon(1e-3));
    CHECK(s1 / s0 == doctest::Approx(factor).epsilon(5e-3));
}

TEST_CASE("optical noise is calibrated to the requested OSNR") {
    ComplexEnvelope env;
    env.rate_hz = 160e9;
    env.s.assign(65536, cplx(2.0, 0.0));  // 4 mW constant power
    NoiseSpec spec;
    spec.osnr_db = 20.0;
    spec.ref_bw_hz = 12.5e9;
    const auto noisy = add_noise(env, spec, 77);
    double p_noise = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) p_noise += std::norm(noisy.s[i] - env.s[i]);
    p_noise /= double(env.size());
    // Total load = P / OSNR * (band / ref_bw).
    const double want = 4.0 / 100.0 * (160e9 / 12.5e9);
    CHECK(p_noise == doctest::Approx(want).epsilon(0.02));
}

TEST_CASE("noise injection is deterministic in the seed") {
    const auto env = random_env(512, 160e9, 31);
    NoiseSpec spec;
    const auto a = add_noise(env, spec, 5);
    const auto b = add_noise(env, spec, 5);
    const auto c = add_noise(env, spec, 6);
    bool same = true, diff = false;
    for (std::size_t i = 0; i < env.size(); ++i) {
        same = same && (a.s[i] == b.s[i]);
        diff = diff || (a.s[i] != c.s[i]);
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("add_noise_power injects the stated total power") {
    ComplexEnvelope env;
    env.rate_hz = 160e9;
    env.s.assign(65536, cplx(1.0, 0.0));
    const double target_mw = 0.25;
    const auto noisy = add_noise_power(env, target_mw, 3);
    double p = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) p += std::norm(noisy.s[i] - env.s[i]);
    CHECK(p / double(env.size()) == doctest::Approx(target_mw).epsilon(0.02));
}

TEST_CASE("electrical noise is calibrated to the requested SNR") {
    ElectricalTrace tr;
    tr.rate_hz = 80e9;
    tr.sps = 8;
    tr.s.assign(65536, 2.0);  // trace power 4
    const auto noisy = add_electrical_noise(tr, 15.0, 12);
    double var = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double d = noisy.s[i] - tr.s[i];
        var += d * d;
    }
    var /= double(tr.size());
    CHECK(var == doctest::Approx(4.0 / std::pow(10.0, 1.5)).epsilon(0.03));
}

TEST_CASE("analytic dispersion penalty") {
    const FiberSpec fiber{125e3, -0.021, 0.2};
    SUBCASE("first notch frequency") {
        const double w_notch = cd_first_notch_rad_s(fiber);
        CHECK(w_notch == doctest::Approx(std::sqrt(kPi / std::abs(fiber.beta2_l_s2())))
                             .epsilon(1e-14));
        CHECK(w_notch / kTwoPi == doctest::Approx(5.51e9).epsilon(0.002));
        CHECK(cd_penalty_analytic_db(fiber, w_notch) == kPenaltyCapDb);
    }
    SUBCASE("even in the dispersion sign") {
        const FiberSpec flipped{125e3, +0.021, 0.2};
        for (double f : {1e9, 3e9, 7e9, 12e9})
            CHECK(cd_penalty_analytic_db(fiber, kTwoPi * f) ==
                  cd_penalty_analytic_db(flipped, kTwoPi * f));
    }
    SUBCASE("closed form value") {
        const double w = kTwoPi * 3e9;
        const double arg = fiber.beta2_l_s2() * w * w / 2.0;
        CHECK(cd_penalty_analytic_db(fiber, w) ==
              doctest::Approx(-20.0 * std::log10(std::abs(std::cos(arg)))).epsilon(1e-14));
    }
}

TEST_CASE("measured penalty agrees with the analytic curve") {
    const FiberSpec fiber{125e3, -0.021, 0.2};
    LinkSpec link;
    link.fiber = fiber;
    for (double f : {1e9, 3e9, 4.5e9, 8e9, 12e9}) {
        const double measured = cd_penalty_measured_db(link, kTwoPi * f);
        const double analytic = cd_penalty_analytic_db(fiber, kTwoPi * f);
        CHECK(std::abs(measured - analytic) < 1e-8);
    }
}

TEST_CASE("measured penalty: back-to-back is exactly zero") {
    LinkSpec btb;
    CHECK(cd_penalty_measured_db(btb, kTwoPi * 5e9) == 0.0);
}

TEST_CASE("measured penalty cancels flat loss and flat devices") {
    LinkSpec lossy;
    lossy.fiber = FiberSpec{125e3, -0.021, 0.2};
    LinkSpec lossless;
    lossless.fiber = FiberSpec{125e3, -0.021, 0.0};
    const double w = kTwoPi * 4e9;
    CHECK(cd_penalty_measured_db(lossy, w) ==
          doctest::Approx(cd_penalty_measured_db(lossless, w)).epsilon(1e-12));

    // A single-tap device is a flat scale and must not change the penalty.
    LinkSpec with_tap = lossless;
    LinkSpec::PnnStage stage;
    stage.layout = PnnLayout::make(1, 0.0, {-3.0});
    stage.weights = unit_weights(1);
    stage.weights.phase_rad[0] = 0.7;
    with_tap.pnn = stage;
    CHECK(cd_penalty_measured_db(with_tap, w) ==
          doctest::Approx(cd_penalty_measured_db(lossless, w)).epsilon(1e-9));
}

TEST_CASE("a dense compensator removes the notch") {
    const FiberSpec fiber{125e3, -0.021, 0.0};
    LinkSpec bare;
    bare.fiber = fiber;
    LinkSpec comp;
    comp.fiber = fiber;
    LinkSpec::PnnStage stage;
    stage.layout = PnnLayout::make(512, 0.78125e-12);
    stage.weights.amplitude.assign(512, 1.0);
    stage.weights.phase_rad = ideal_phases(stage.layout, fiber.beta2_l_s2());
    comp.pnn = stage;

    const double w = kTwoPi * 5.5e9;  // on the 50 MHz probe grid, near the notch
    CHECK(cd_penalty_measured_db(bare, w) > 20.0);
    CHECK(cd_penalty_measured_db(comp, w) < 3.0);
}

TEST_CASE("measured penalty requires an on-grid probe frequency") {
    LinkSpec link;
    link.fiber = FiberSpec{125e3, -0.021, 0.0};
    CHECK_THROWS_AS(cd_penalty_measured_db(link, kTwoPi * 1.23456789e9), std::invalid_argument);
}
