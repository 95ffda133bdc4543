#include "microspec/parallel.hpp"

#include <omp.h>

namespace microspec {

void set_worker_count(int n) {
    if (n >= 1)
        omp_set_num_threads(n);
}

int worker_count() { return omp_get_max_threads(); }

}  // namespace microspec
