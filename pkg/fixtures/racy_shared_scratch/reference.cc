#include <cmath>
#include <cstddef>
#include <vector>

double solve_reference(const std::vector<double>& v) {
    double total = 0.0;
    for (size_t i = 0; i < v.size(); ++i) total += std::fabs(v[i]);
    return total;
}
