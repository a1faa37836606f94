#include <cstddef>
#include <vector>

std::vector<long> solve_reference(const std::vector<int>& data, int bins) {
    std::vector<long> hist(bins, 0);
    for (size_t i = 0; i < data.size(); ++i) hist[data[i]]++;
    return hist;
}
