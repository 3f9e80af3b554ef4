#include "pnnsim/pnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "pnnsim/fft.hpp"
#include "pnnsim/rng.hpp"

namespace pnnsim {

namespace {

void check_weights(const PnnLayout& layout, const PnnWeights& w) {
    const std::size_t n = std::size_t(layout.n_channels);
    if (w.amplitude.size() != n || w.phase_rad.size() != n)
        throw std::invalid_argument("pnn: weight arrays must match n_channels");
    for (double a : w.amplitude)
        if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("pnn: amplitudes must lie in [0, 1]");
}

std::vector<double> loss_linear(const PnnLayout& layout) {
    std::vector<double> k(layout.channel_loss_db.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        k[i] = std::pow(10.0, layout.channel_loss_db[i] / 20.0);
    return k;
}

}  // namespace

PnnLayout PnnLayout::make(int n_channels, double delay_unit_s,
                          std::vector<double> channel_loss_db, double group_index) {
    if (n_channels < 1) throw std::invalid_argument("PnnLayout: n_channels must be >= 1");
    if (delay_unit_s < 0) throw std::invalid_argument("PnnLayout: delay unit must be >= 0");
    PnnLayout l;
    l.n_channels = n_channels;
    l.delay_unit_s = delay_unit_s;
    l.group_index = group_index;
    if (channel_loss_db.empty()) {
        l.channel_loss_db.assign(std::size_t(n_channels), 0.0);
    } else {
        if (int(channel_loss_db.size()) != n_channels)
            throw std::invalid_argument("PnnLayout: channel_loss_db size must equal n_channels");
        l.channel_loss_db = std::move(channel_loss_db);
    }
    for (double db : l.channel_loss_db)
        if (db > 0) throw std::invalid_argument("PnnLayout: channel losses must be <= 0 dB");
    l.delays_s.resize(std::size_t(n_channels));
    for (int i = 0; i < n_channels; ++i) l.delays_s[std::size_t(i)] = delay_unit_s * double(i);
    return l;
}

std::uint64_t PnnLayout::hash() const {
    std::uint64_t h = 0x243f6a8885a308d3ull;
    auto mix_bits = [&h](double v) {
        std::uint64_t u;
        static_assert(sizeof(u) == sizeof(v));
        std::memcpy(&u, &v, sizeof(u));
        h ^= u + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    h ^= std::uint64_t(n_channels);
    mix_bits(delay_unit_s);
    mix_bits(group_index);
    for (double d : delays_s) mix_bits(d);
    for (double d : channel_loss_db) mix_bits(d);
    return h;
}

PnnLayout default_layout8() {
    return PnnLayout::make(8, 25e-12,
                           {-19.0, -15.5, -14.8, -14.7, -21.4, -16.0, -18.0, -20.0});
}

PnnWeights unit_weights(int n_channels) {
    PnnWeights w;
    w.amplitude.assign(std::size_t(n_channels), 1.0);
    w.phase_rad.assign(std::size_t(n_channels), 0.0);
    return w;
}

PnnWeights normalized(const PnnWeights& w) {
    PnnWeights out = w;
    const double ref = w.phase_rad.empty() ? 0.0 : w.phase_rad[0];
    for (auto& p : out.phase_rad) {
        p = std::remainder(p - ref, kTwoPi);
        if (p <= -kPi) p += kTwoPi;  // (-pi, pi]
    }
    return out;
}

ComplexEnvelope apply_pnn(const ComplexEnvelope& env, const PnnLayout& layout,
                          const PnnWeights& w) {
    check_weights(layout, w);
    const std::size_t n = env.size();
    if (n == 0 || env.rate_hz <= 0) throw std::invalid_argument("apply_pnn: empty envelope");
    const double max_delay = *std::max_element(layout.delays_s.begin(), layout.delays_s.end());
    if (max_delay >= env.duration_s())
        throw std::invalid_argument("apply_pnn: max delay exceeds the envelope period");

    const auto k_lin = loss_linear(layout);
    const double inv_n = 1.0 / double(layout.n_channels);
    auto spec = fft(env.s, false);

    // Multiplier at FFT bin w_k: sum_i c_i e^{-j w_k tau_i} with
    // c_i = (k_i a_i / N) e^{j(phi_i + 2 pi f_off tau_i)}. This equals the
    // analysis-convention response H evaluated at -w_k.
    std::vector<cplx> mult(n, cplx(0.0, 0.0));
    const double dw = kTwoPi * env.rate_hz / double(n);
    const std::size_t half = (n + 1) / 2;
    for (int i = 0; i < layout.n_channels; ++i) {
        const double tau = layout.delays_s[std::size_t(i)];
        const double mag = k_lin[std::size_t(i)] * w.amplitude[std::size_t(i)] * inv_n;
        if (mag == 0.0) continue;
        const cplx c = std::polar(mag, w.phase_rad[std::size_t(i)] +
                                           kTwoPi * env.carrier_offset_hz * tau);
        // Incremental rotation with periodic renormalization: exact polar
        // every 4096 bins bounds the drift below 1e-12.
        const cplx step = std::polar(1.0, -dw * tau);
        cplx rot = c;
        for (std::size_t k = 0; k < half; ++k) {
            if ((k & 4095u) == 0) rot = c * std::polar(1.0, -dw * tau * double(k));
            mult[k] += rot;
            rot *= step;
        }
        rot = c * std::polar(1.0, -dw * tau * (double(half) - double(n)));
        for (std::size_t k = half; k < n; ++k) {
            if (((k - half) & 4095u) == 0)
                rot = c * std::polar(1.0, -dw * tau * (double(k) - double(n)));
            mult[k] += rot;
            rot *= step;
        }
    }
    for (std::size_t k = 0; k < n; ++k) spec[k] *= mult[k];

    ComplexEnvelope out;
    out.rate_hz = env.rate_hz;
    out.carrier_offset_hz = env.carrier_offset_hz;
    out.s.resize(n);
    fft(std::span<const cplx>(spec), std::span<cplx>(out.s), true);
    return out;
}

std::vector<cplx> pnn_frequency_response(const PnnLayout& layout, const PnnWeights& w,
                                         std::span<const double> omega_rad_s,
                                         double carrier_offset_hz) {
    check_weights(layout, w);
    const auto k_lin = loss_linear(layout);
    const double inv_n = 1.0 / double(layout.n_channels);
    std::vector<cplx> h(omega_rad_s.size(), cplx(0.0, 0.0));
    for (int i = 0; i < layout.n_channels; ++i) {
        const double tau = layout.delays_s[std::size_t(i)];
        const double mag = k_lin[std::size_t(i)] * w.amplitude[std::size_t(i)] * inv_n;
        const double base = w.phase_rad[std::size_t(i)] + kTwoPi * carrier_offset_hz * tau;
        for (std::size_t k = 0; k < h.size(); ++k)
            h[k] += std::polar(mag, base + omega_rad_s[k] * tau);
    }
    return h;
}

std::vector<double> ideal_phases(const PnnLayout& layout, double beta2_l_s2) {
    if (beta2_l_s2 == 0.0) throw std::invalid_argument("ideal_phases: beta2*L must be nonzero");
    const int n = layout.n_channels;
    std::vector<double> phi(std::size_t(n), 0.0);
    const double dt = layout.delay_unit_s;
    for (int i = 1; i <= n; ++i) {
        const double t = (double(i) - double(n) / 2.0) * dt;
        phi[std::size_t(i - 1)] = t * t / (2.0 * beta2_l_s2);
    }
    return phi;
}

int required_taps(double bit_rate_hz, double beta2_l_s2, double delay_unit_s,
                  double delta_omega_rad_s) {
    if (bit_rate_hz <= 0 || delay_unit_s <= 0)
        throw std::invalid_argument("required_taps: rates and delay unit must be positive");
    if (delta_omega_rad_s <= 0) delta_omega_rad_s = kTwoPi * bit_rate_hz;
    const double window = 1.0 / bit_rate_hz + std::abs(beta2_l_s2 * delta_omega_rad_s);
    return int(window / delay_unit_s);
}

HeaterCalibration HeaterCalibration::uniform(int n_channels, double alpha, double beta) {
    HeaterCalibration c;
    const std::size_t n = std::size_t(2 * n_channels - 1);
    c.alpha_rad_per_ma2.assign(n, alpha);
    c.beta_rad.assign(n, beta);
    return c;
}

PnnWeights currents_to_weights(std::span<const double> currents_ma,
                               const HeaterCalibration& calib, const PnnLayout& layout,
                               bool* clamped) {
    const int n = layout.n_channels;
    const std::size_t n_heaters = std::size_t(2 * n - 1);
    if (currents_ma.size() != n_heaters)
        throw std::invalid_argument("currents_to_weights: expected 2N-1 currents");
    if (calib.alpha_rad_per_ma2.size() != n_heaters || calib.beta_rad.size() != n_heaters)
        throw std::invalid_argument("currents_to_weights: calibration must cover 2N-1 heaters");
    bool hit = false;
    auto heater_phase = [&](std::size_t h) {
        double i_ma = currents_ma[h];
        if (i_ma < 0.0 || i_ma > calib.max_current_ma) {
            hit = true;
            i_ma = std::clamp(i_ma, 0.0, calib.max_current_ma);
        }
        return calib.alpha_rad_per_ma2[h] * i_ma * i_ma + calib.beta_rad[h];
    };
    PnnWeights w = unit_weights(n);
    for (int ch = 2; ch <= n; ++ch) w.phase_rad[std::size_t(ch - 1)] = heater_phase(std::size_t(ch - 2));
    for (int ch = 1; ch <= n; ++ch) {
        const double theta = heater_phase(std::size_t(n - 1 + ch - 1));
        const double s = std::sin(theta / 2.0);
        w.amplitude[std::size_t(ch - 1)] = s * s;
    }
    if (clamped) *clamped = hit;
    return w;
}

PnnLayout perturb_delays(const PnnLayout& layout, double rel_err, std::uint64_t seed) {
    if (rel_err < 0 || rel_err >= 1) throw std::invalid_argument("perturb_delays: rel_err must be in [0, 1)");
    PnnLayout out = layout;
    Rng rng(mix_seed(seed, {0x5917a1ull}));
    for (int i = 0; i < layout.n_channels; ++i) {
        const unsigned units = unsigned(i);  // binary spiral composition of (i-1)*dt
        double d = 0.0;
        for (int b = 0; b < 31; ++b) {
            if (!(units >> b)) break;
            if ((units >> b) & 1u) {
                const double eps = rng.uniform(-rel_err, rel_err);
                d += layout.delay_unit_s * double(1u << b) * (1.0 + eps);
            }
        }
        out.delays_s[std::size_t(i)] = d;
    }
    return out;
}

}  // namespace pnnsim
