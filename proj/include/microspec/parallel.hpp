#pragma once

#include <exception>
#include <mutex>

namespace microspec {

enum class Execution { serial, parallel };

/// Sets the OpenMP worker count used by parallel maps (values < 1 are ignored).
void set_worker_count(int n);
int worker_count();

/// Calls body(i) for i in [0, n). Each index writes only its own slot, so the
/// result does not depend on the schedule. The first exception thrown by any
/// index is rethrown on the calling thread.
template <class Body>
void parallel_map(int n, Body&& body, Execution mode = Execution::parallel) {
    if (mode == Execution::serial || n < 2) {
        for (int i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex guard;
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

}  // namespace microspec
