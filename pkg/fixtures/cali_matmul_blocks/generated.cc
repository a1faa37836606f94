#include <vector>
#include <omp.h>

double solve(int n) {
    std::vector<double> a(n * n), b(n * n), c(n * n, 0.0);
    #pragma omp parallel for
    for (int i = 0; i < n * n; ++i) {
        a[i] = (i % 7) * 0.5;
        b[i] = (i % 5) * 0.25;
    }
    #pragma omp parallel for
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            double aik = a[i * n + k];
            for (int j = 0; j < n; ++j) {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    double total = 0.0;
    for (int i = 0; i < n * n; ++i) total += c[i];
    return total;
}
