#include "pnnsim/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "pnnsim/fft.hpp"
#include "pnnsim/rng.hpp"

namespace pnnsim {

std::vector<cplx> fiber_transfer(std::span<const double> omega_rad_s, const FiberSpec& fiber) {
    if (fiber.length_m < 0) throw std::invalid_argument("fiber_transfer: negative length");
    const double b2l = fiber.beta2_l_s2();
    const double a = fiber.atten_linear();
    std::vector<cplx> h(omega_rad_s.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double w = omega_rad_s[k];
        h[k] = std::polar(a, 0.5 * b2l * w * w);
    }
    return h;
}

ComplexEnvelope propagate(const ComplexEnvelope& env, const FiberSpec& fiber) {
    const std::size_t n = env.size();
    if (n == 0 || env.rate_hz <= 0) throw std::invalid_argument("propagate: empty envelope");
    for (const auto& v : env.s)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("propagate: non-finite sample");

    auto spec = fft(env.s, false);
    const auto omega = fft_omega(n, env.rate_hz);
    const auto h = fiber_transfer(omega, fiber);
    for (std::size_t k = 0; k < n; ++k) spec[k] *= h[k];

    ComplexEnvelope out;
    out.rate_hz = env.rate_hz;
    out.carrier_offset_hz = env.carrier_offset_hz;
    out.s.resize(n);
    fft(std::span<const cplx>(spec), std::span<cplx>(out.s), true);
    return out;
}

ComplexEnvelope add_noise_power(const ComplexEnvelope& env, double noise_power_mw,
                                std::uint64_t seed) {
    if (noise_power_mw < 0) throw std::invalid_argument("add_noise_power: negative noise power");
    ComplexEnvelope out = env;
    Rng rng(mix_seed(seed, {0xa5e5ull}));
    for (auto& v : out.s) v += rng.cnormal(noise_power_mw);
    return out;
}

ComplexEnvelope add_noise(const ComplexEnvelope& env, const NoiseSpec& noise, std::uint64_t seed) {
    if (noise.mode != NoiseSpec::Mode::optical_awgn)
        throw std::invalid_argument("add_noise: electrical mode applies to detected traces");
    if (env.size() == 0 || env.rate_hz <= 0) throw std::invalid_argument("add_noise: empty envelope");
    double sig = 0.0;
    for (const auto& v : env.s) sig += std::norm(v);
    sig /= double(env.size());
    // White across the simulated band; the target OSNR counts only the
    // noise falling into the reference bandwidth.
    const double p_ref = sig * std::pow(10.0, -noise.osnr_db / 10.0);
    const double total = p_ref * env.rate_hz / noise.ref_bw_hz;
    return add_noise_power(env, total, seed);
}

ElectricalTrace add_electrical_noise(const ElectricalTrace& trace, double snr_db,
                                     std::uint64_t seed) {
    if (trace.size() == 0) throw std::invalid_argument("add_electrical_noise: empty trace");
    double p = 0.0;
    for (double v : trace.s) p += v * v;
    p /= double(trace.size());
    const double var = p * std::pow(10.0, -snr_db / 10.0);
    ElectricalTrace out = trace;
    Rng rng(mix_seed(seed, {0xe1ecull}));
    const double sigma = std::sqrt(var);
    for (auto& v : out.s) v += sigma * rng.normal();
    return out;
}

double cd_penalty_analytic_db(const FiberSpec& fiber, double omega_bar_rad_s) {
    const double c = std::cos(0.5 * fiber.beta2_l_s2() * omega_bar_rad_s * omega_bar_rad_s);
    if (c == 0.0) return kPenaltyCapDb;
    return std::min(kPenaltyCapDb, -20.0 * std::log10(std::abs(c)));
}

double cd_first_notch_rad_s(const FiberSpec& fiber) {
    const double b2l = std::abs(fiber.beta2_l_s2());
    if (b2l == 0.0) throw std::invalid_argument("cd_first_notch: dispersion-free fiber has no notch");
    return std::sqrt(kPi / b2l);
}

double cd_penalty_measured_db(const LinkSpec& link, double omega_bar_rad_s,
                              const PenaltyProbeConfig& cfg) {
    const std::size_t n = cfg.n_samples;
    if (n < 16 || cfg.rate_hz <= 0) throw std::invalid_argument("cd_penalty_measured: bad probe grid");
    if (!(cfg.depth > 0) || cfg.depth >= 1)
        throw std::invalid_argument("cd_penalty_measured: depth must be in (0, 1)");
    const double df = cfg.rate_hz / double(n);
    const double f_bar = omega_bar_rad_s / kTwoPi;
    const double bin_real = f_bar / df;
    const long bin = std::lround(bin_real);
    if (bin < 1 || std::abs(bin_real - double(bin)) > 1e-6)
        throw std::invalid_argument("cd_penalty_measured: omega_bar not resolvable on the probe grid");
    if (std::size_t(bin) >= n / 2)
        throw std::invalid_argument("cd_penalty_measured: omega_bar beyond the probe Nyquist");

    ComplexEnvelope probe;
    probe.rate_hz = cfg.rate_hz;
    probe.carrier_offset_hz = link.carrier_offset_hz;
    probe.s.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / cfg.rate_hz;
        probe.s[i] = cplx(1.0 + cfg.depth * std::cos(omega_bar_rad_s * t), 0.0);
    }

    ComplexEnvelope out = probe;
    if (link.pnn) out = apply_pnn(out, link.pnn->layout, link.pnn->weights);
    if (link.fiber) out = propagate(out, *link.fiber);

    // Modulation index |P(omega_bar)| / P(0) of the detected intensity.
    auto mod_index = [&](const ComplexEnvelope& e) {
        cplx acc(0.0, 0.0);
        double dc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::norm(e.s[i]);
            const double ph = -omega_bar_rad_s * double(i) / cfg.rate_hz;
            acc += p * cplx(std::cos(ph), std::sin(ph));
            dc += p;
        }
        return std::abs(acc) / dc;
    };

    const double m_in = mod_index(probe);
    const double m_out = mod_index(out);
    if (m_out <= 0.0 || !std::isfinite(m_out)) return kPenaltyCapDb;
    return std::min(kPenaltyCapDb, 20.0 * std::log10(m_in / m_out));
}

}  // namespace pnnsim
