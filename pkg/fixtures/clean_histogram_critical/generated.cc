#include <vector>
#include <omp.h>
#include <cstddef>

std::vector<long> solve(const std::vector<int>& data, int bins) {
    std::vector<long> hist(bins, 0);
    #pragma omp parallel for
    for (size_t i = 0; i < data.size(); ++i) {
        #pragma omp critical
        hist[data[i]]++;
    }
    return hist;
}
