#include <vector>
#include <omp.h>

double solve(int n, int rounds) {
    std::vector<double> v(n, 1.0);
    #pragma omp parallel
    {
        for (int r = 0; r < rounds; ++r) {
            #pragma omp for
            for (int i = 0; i < n; ++i) {
                v[i] = v[i] * 0.999 + 0.001;
            }
            #pragma omp barrier
        }
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += v[i];
    return total;
}
