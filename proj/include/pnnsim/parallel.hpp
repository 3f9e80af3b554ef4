#pragma once

#include <cstddef>
#include <type_traits>

namespace pnnsim::par {

/// Current worker limit (>= 1). 0 in set_thread_limit restores the OpenMP default.
int thread_limit();
void set_thread_limit(int n);

namespace detail {
void run_indexed(std::size_t n, void (*trampoline)(void*, std::size_t), void* ctx, bool parallel);
}

/// Order-independent index map: body(i) for i in [0, n). Results must be written
/// to slot i only, which keeps any schedule (or the serial reference) bitwise
/// identical. Exceptions are captured and rethrown after the join.
template <class F>
void for_each_index(std::size_t n, F&& body, bool parallel = true) {
    using Fn = std::remove_reference_t<F>;
    auto trampoline = [](void* ctx, std::size_t i) { (*static_cast<Fn*>(ctx))(i); };
    detail::run_indexed(n, trampoline, &body, parallel);
}

/// Serial reference path, kept callable on its own for tests and benchmarks.
template <class F>
void for_each_index_serial(std::size_t n, F&& body) {
    for_each_index(n, body, false);
}

}  // namespace pnnsim::par
