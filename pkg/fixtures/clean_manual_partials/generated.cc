#include <vector>
#include <omp.h>
#include <cstddef>

double solve(const std::vector<double>& v) {
    int max_threads = omp_get_max_threads();
    std::vector<double> partial(max_threads, 0.0);
    #pragma omp parallel
    {
        int tid = omp_get_thread_num();
        #pragma omp for
        for (size_t i = 0; i < v.size(); ++i) {
            partial[tid] += v[i];
        }
    }
    double total = 0.0;
    for (int t = 0; t < max_threads; ++t) total += partial[t];
    return total;
}
