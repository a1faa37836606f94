#include <cstddef>
#include <vector>

double solve_reference(const std::vector<double>& v) {
    double best = v[0];
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > best) best = v[i];
    return best;
}
