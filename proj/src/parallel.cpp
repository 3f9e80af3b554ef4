#include "pnnsim/parallel.hpp"

#include <atomic>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pnnsim::par {

namespace {
std::atomic<int> g_thread_limit{0};  // 0 = library default
}

int thread_limit() {
    int n = g_thread_limit.load();
    if (n > 0) return n;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_thread_limit(int n) { g_thread_limit.store(n < 0 ? 0 : n); }

namespace detail {

void run_indexed(std::size_t n, void (*trampoline)(void*, std::size_t), void* ctx, bool parallel) {
    if (n == 0) return;
    const int threads = parallel ? thread_limit() : 1;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) trampoline(ctx, i);
        return;
    }
#ifdef _OPENMP
    std::exception_ptr err;
    std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < (long long)n; ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            trampoline(ctx, std::size_t(i));
        } catch (...) {
            if (!failed.exchange(true)) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
#else
    for (std::size_t i = 0; i < n; ++i) trampoline(ctx, i);
#endif
}

}  // namespace detail

}  // namespace pnnsim::par
