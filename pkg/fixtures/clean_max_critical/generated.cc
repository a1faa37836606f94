#include <vector>
#include <omp.h>
#include <cstddef>

double solve(const std::vector<double>& v) {
    double best = v[0];
    #pragma omp parallel for
    for (size_t i = 0; i < v.size(); ++i) {
        #pragma omp critical
        {
            if (v[i] > best) best = v[i];
        }
    }
    return best;
}
