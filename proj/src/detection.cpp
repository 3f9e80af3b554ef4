#include "pnnsim/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pnnsim/dsp.hpp"
#include "pnnsim/fft.hpp"

namespace pnnsim {

ElectricalTrace photodetect(const ComplexEnvelope& env, double baud_hz) {
    if (env.size() == 0 || env.rate_hz <= 0) throw std::invalid_argument("photodetect: empty envelope");
    if (baud_hz <= 0) throw std::invalid_argument("photodetect: baud must be positive");
    const double sps_real = env.rate_hz / baud_hz;
    const int sps = int(std::lround(sps_real));
    if (sps < 1 || std::abs(sps_real - double(sps)) > 1e-9)
        throw std::invalid_argument("photodetect: envelope rate must be an integer multiple of baud");
    ElectricalTrace out;
    out.rate_hz = env.rate_hz;
    out.sps = sps;
    out.s.resize(env.size());
    for (std::size_t i = 0; i < env.size(); ++i) out.s[i] = std::norm(env.s[i]);
    return out;
}

ElectricalTrace receiver_chain(const ElectricalTrace& trace, double pd_bw_hz,
                               double scope_bw_hz, double scope_rate_hz) {
    const std::size_t n = trace.size();
    if (n == 0 || trace.rate_hz <= 0 || trace.sps < 1)
        throw std::invalid_argument("receiver_chain: empty trace");
    if (pd_bw_hz <= 0 || scope_bw_hz <= 0 || scope_rate_hz <= 0)
        throw std::invalid_argument("receiver_chain: bandwidths must be positive");

    const double step_real = trace.rate_hz / scope_rate_hz;
    const int step = int(std::lround(step_real));
    if (step < 1 || std::abs(step_real - double(step)) > 1e-9)
        throw std::invalid_argument("receiver_chain: input rate must be an integer multiple of the scope rate");
    const double baud = trace.rate_hz / double(trace.sps);
    const double sps_real = scope_rate_hz / baud;
    const int sps_new = int(std::lround(sps_real));
    if (sps_new < 1 || std::abs(sps_real - double(sps_new)) > 1e-9)
        throw std::invalid_argument("receiver_chain: scope rate must be an integer multiple of baud");

    std::vector<cplx> spec(n);
    for (std::size_t i = 0; i < n; ++i) spec[i] = cplx(trace.s[i], 0.0);
    auto tmp = fft(spec, false);
    const auto freq = fft_freq_hz(n, trace.rate_hz);
    for (std::size_t k = 0; k < n; ++k)
        tmp[k] *= bessel4_lowpass(freq[k], pd_bw_hz) * bessel4_lowpass(freq[k], scope_bw_hz);
    fft(std::span<const cplx>(tmp), std::span<cplx>(spec), true);

    ElectricalTrace out;
    out.rate_hz = scope_rate_hz;
    out.sps = sps_new;
    out.s.resize(n / std::size_t(step));
    for (std::size_t i = 0; i < out.s.size(); ++i) out.s[i] = spec[i * std::size_t(step)].real();
    return out;
}

AlignResult align(const ElectricalTrace& trace, const SymbolSequence& target) {
    const std::size_t n_sym = target.sym.size();
    if (n_sym == 0 || trace.sps < 1 || trace.size() != n_sym * std::size_t(trace.sps))
        throw std::invalid_argument("align: trace must cover the target symbol count exactly");

    const int k = trace.sps / 2;
    std::vector<double> y(n_sym), t(n_sym);
    double y_mean = 0.0, t_mean = 0.0;
    for (std::size_t i = 0; i < n_sym; ++i) {
        y[i] = trace.s[i * std::size_t(trace.sps) + std::size_t(k)];
        t[i] = double(target.sym[i]);
        y_mean += y[i];
        t_mean += t[i];
    }
    y_mean /= double(n_sym);
    t_mean /= double(n_sym);
    double y_var = 0.0;
    for (std::size_t i = 0; i < n_sym; ++i) {
        y[i] -= y_mean;
        t[i] -= t_mean;
        y_var += y[i] * y[i];
    }

    AlignResult res;
    if (y_var <= 0.0) {
        res.trace = trace;
        res.shift_symbols = 0;
        res.defined = false;
        return res;
    }

    // c[s] = sum_n y[(n+s) mod N] t[n] = IFFT(FFT(y) conj(FFT(t))) * N
    std::vector<cplx> ys(n_sym), ts(n_sym);
    for (std::size_t i = 0; i < n_sym; ++i) {
        ys[i] = cplx(y[i], 0.0);
        ts[i] = cplx(t[i], 0.0);
    }
    auto yf = fft(ys, false);
    auto tf = fft(ts, false);
    for (std::size_t i = 0; i < n_sym; ++i) yf[i] *= std::conj(tf[i]);
    fft(std::span<const cplx>(yf), std::span<cplx>(ys), true);

    std::size_t best = 0;
    double best_c = ys[0].real();
    for (std::size_t s = 1; s < n_sym; ++s) {
        if (ys[s].real() > best_c) {  // strict: smallest shift wins ties
            best_c = ys[s].real();
            best = s;
        }
    }

    res.shift_symbols = int(best);
    res.trace.rate_hz = trace.rate_hz;
    res.trace.sps = trace.sps;
    res.trace.s.resize(trace.size());
    const std::size_t roll = best * std::size_t(trace.sps);
    for (std::size_t i = 0; i < trace.size(); ++i)
        res.trace.s[i] = trace.s[(i + roll) % trace.size()];
    return res;
}

}  // namespace pnnsim
