#include <vector>
#include <omp.h>
#include <cstddef>

void solve(std::vector<double>& v) {
    #pragma omp parallel for
    for (size_t i = 1; i < v.size() - 1; ++i) {
        v[i] = 0.5 * (v[i - 1] + v[i + 1]);
    }
}
