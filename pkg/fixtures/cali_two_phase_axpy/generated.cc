#include <vector>
#include <omp.h>

double solve(int n) {
    std::vector<double> x(n), y(n);
    #pragma omp parallel for
    for (int i = 0; i < n; ++i) {
        x[i] = 0.5 * i;
        y[i] = 2.0 * i;
    }
    #pragma omp parallel for
    for (int i = 0; i < n; ++i) {
        y[i] += 1.5 * x[i];
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += y[i];
    return total;
}
