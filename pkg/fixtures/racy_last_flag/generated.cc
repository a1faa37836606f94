#include <omp.h>

int solve(int n) {
    int last = -1;
    #pragma omp parallel for
    for (int i = 0; i < n; ++i) {
        last = i;
    }
    return last;
}
