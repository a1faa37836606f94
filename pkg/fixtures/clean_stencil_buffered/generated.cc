#include <vector>
#include <omp.h>
#include <cstddef>

void solve(const std::vector<double>& in, std::vector<double>& out) {
    out = in;
    #pragma omp parallel for
    for (size_t i = 1; i < in.size() - 1; ++i) {
        out[i] = 0.5 * (in[i - 1] + in[i + 1]);
    }
}
