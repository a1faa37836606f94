#include <cmath>
#include <vector>
#include <omp.h>

double solve(int n) {
    std::vector<double> v(n), s(n);
    #pragma omp parallel for
    for (int i = 0; i < n; ++i) {
        v[i] = std::sin(0.001 * i);
    }
    #pragma omp parallel for
    for (int i = 1; i < n - 1; ++i) {
        s[i] = (v[i - 1] + v[i] + v[i + 1]) / 3.0;
    }
    double total = 0.0;
    #pragma omp parallel for reduction(+:total)
    for (int i = 0; i < n; ++i) {
        total += s[i];
    }
    return total;
}
