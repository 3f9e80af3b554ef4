#include "pnnsim/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace pnnsim {

namespace {

// Plans live for the process. FFTW_ESTIMATE picks the algorithm without timing
// runs, so repeated invocations on the same machine are bit-identical;
// FFTW_UNALIGNED lets the plan execute on any caller buffer.
std::mutex g_plan_mutex;
std::map<std::pair<std::size_t, int>, fftw_plan> g_plans;

fftw_plan plan_for(std::size_t n, bool inverse) {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    const auto key = std::make_pair(n, inverse ? 1 : 0);
    auto it = g_plans.find(key);
    if (it != g_plans.end()) return it->second;
    std::vector<cplx> a(n), b(n);
    fftw_plan p = fftw_plan_dft_1d(int(n),
                                   reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()),
                                   inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    g_plans.emplace(key, p);
    return p;
}

}  // namespace

void fft(std::span<const cplx> in, std::span<cplx> out, bool inverse) {
    const std::size_t n = in.size();
    if (n == 0 || out.size() != n) throw std::invalid_argument("fft: size mismatch");
    fftw_plan p = plan_for(n, inverse);
    if (in.data() == out.data()) {
        std::vector<cplx> tmp(in.begin(), in.end());
        fftw_execute_dft(p,
                         reinterpret_cast<fftw_complex*>(tmp.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
    } else {
        // fftw_execute_dft is the documented thread-safe entry point.
        fftw_execute_dft(p,
                         reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                         reinterpret_cast<fftw_complex*>(out.data()));
    }
    if (inverse) {
        const double scale = 1.0 / double(n);
        for (auto& v : out) v *= scale;
    }
}

std::vector<cplx> fft(const std::vector<cplx>& in, bool inverse) {
    std::vector<cplx> out(in.size());
    fft(std::span<const cplx>(in), std::span<cplx>(out), inverse);
    return out;
}

std::vector<double> fft_freq_hz(std::size_t n, double rate_hz) {
    std::vector<double> f(n);
    const double df = rate_hz / double(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t k = 0; k < n; ++k)
        f[k] = (k < half) ? df * double(k) : df * (double(k) - double(n));
    return f;
}

std::vector<double> fft_omega(std::size_t n, double rate_hz) {
    auto f = fft_freq_hz(n, rate_hz);
    for (auto& v : f) v *= kTwoPi;
    return f;
}

}  // namespace pnnsim
