// Times the objective-evaluation batch (one PSO iteration's swarm) through the
// OpenMP index map against the serial reference, and checks the two paths give
// bitwise-identical losses. Wall times vary run to run; the equality must not.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "pnnsim/optimize.hpp"
#include "pnnsim/parallel.hpp"
#include "pnnsim/rng.hpp"
#include "pnnsim/scenario.hpp"

using namespace pnnsim;

namespace {

double time_batch(const Pipeline& pipe, const std::vector<std::vector<double>>& params,
                  std::vector<double>& losses, bool parallel, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
        par::for_each_index(
            params.size(),
            [&](std::size_t i) {
                losses[i] = pipe.objective(params[i], mix_seed(11, {std::uint64_t(i)}));
            },
            parallel);
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return dt / double(reps);
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
    const Scenario sc;  // 125 km / 10 GBd PAM4, the training workload
    const Pipeline pipe(sc);
    const Bounds b = pipe.bounds();

    const std::size_t batch = 30;  // default swarm size
    Rng rng(3);
    std::vector<std::vector<double>> params(batch);
    for (auto& p : params) {
        p.resize(b.dim());
        for (std::size_t d = 0; d < b.dim(); ++d) p[d] = rng.uniform(b.lo[d], b.hi[d]);
    }

    std::vector<double> serial_loss(batch), parallel_loss(batch);
    time_batch(pipe, params, serial_loss, false, 1);  // warm FFT plans
    const double t_serial = time_batch(pipe, params, serial_loss, false, reps);
    const double t_parallel = time_batch(pipe, params, parallel_loss, true, reps);

    bool identical = true;
    for (std::size_t i = 0; i < batch; ++i) identical = identical && serial_loss[i] == parallel_loss[i];

    std::printf("kernel                 batch  threads  serial ms  parallel ms  speedup  identical\n");
    std::printf("objective evaluation   %5zu  %7d  %9.2f  %11.2f  %7.2fx  %s\n", batch,
                par::thread_limit(), 1e3 * t_serial, 1e3 * t_parallel, t_serial / t_parallel,
                identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
