#include <vector>
#include <omp.h>
#include <cstddef>

double solve(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    #pragma omp parallel for reduction(+:acc)
    for (size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}
