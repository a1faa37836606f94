#include <vector>
#include <omp.h>
#include <cstddef>

void solve(std::vector<double>& v) {
    #pragma omp parallel for
    for (size_t i = 0; i < v.size(); ++i) {
        v[i] = v[i] * 3.0 + 1.0;
    }
}
