#include "concord/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace concord::parallel {

namespace {
int g_threads = 0;
}

void set_threads(int n) { g_threads = n < 0 ? 0 : n; }

int threads() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

bool enabled() {
#ifdef _OPENMP
    return threads() > 1;
#else
    return false;
#endif
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
    if (threads() > 1 && n > 1) {
        const int nt = threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            fn(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    serial_for(n, fn);
}

void serial_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace concord::parallel
