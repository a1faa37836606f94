#include <omp.h>

long solve(int n) {
    long counter = 0;
    #pragma omp parallel for
    for (int i = 0; i < n; ++i) {
        counter++;
    }
    return counter;
}
