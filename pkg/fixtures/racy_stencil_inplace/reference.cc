#include <cstddef>
#include <vector>

void solve_reference(std::vector<double>& v) {
    std::vector<double> src = v;
    for (size_t i = 1; i + 1 < v.size(); ++i)
        v[i] = 0.5 * (src[i - 1] + src[i + 1]);
}
