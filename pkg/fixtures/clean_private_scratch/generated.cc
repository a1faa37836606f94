#include <cmath>
#include <vector>
#include <omp.h>
#include <cstddef>

double solve(const std::vector<double>& v) {
    double total = 0.0;
    #pragma omp parallel for reduction(+:total)
    for (size_t i = 0; i < v.size(); ++i) {
        double scratch = v[i] * v[i];
        total += std::sqrt(scratch);
    }
    return total;
}
