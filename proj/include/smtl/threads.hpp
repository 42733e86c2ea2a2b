#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace smtl {

/// Runs body(i) for i in [0, n). Work items must be independent and write
/// only to their own slots; indices are split into contiguous chunks so the
/// result is identical for any thread count. The lowest-index exception wins.
inline void parallel_for(int n, int n_threads,
                         const std::function<void(int)>& body) {
    if (n <= 0) return;
    if (n_threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    const int workers = std::min(n_threads, n);
    std::vector<std::exception_ptr> errors(workers, nullptr);
    std::vector<int> error_index(workers, -1);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int base = n / workers, rem = n % workers;
    int start = 0;
    for (int w = 0; w < workers; ++w) {
        const int count = base + (w < rem ? 1 : 0);
        const int lo = start, hi = start + count;
        start = hi;
        pool.emplace_back([&, w, lo, hi]() {
            for (int i = lo; i < hi; ++i) {
                try {
                    body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                    error_index[w] = i;
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    int first = -1;
    for (int w = 0; w < workers; ++w)
        if (errors[w] && (first < 0 || error_index[w] < error_index[first]))
            first = w;
    if (first >= 0) std::rethrow_exception(errors[first]);
}

/// Thread budget: explicit value if > 0, else SMTL_THREADS env var, else 1.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SMTL_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

}  // namespace smtl
