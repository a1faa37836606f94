#include <vector>

double solve_reference(int n, int rounds) {
    std::vector<double> v(n, 1.0);
    for (int r = 0; r < rounds; ++r)
        for (int i = 0; i < n; ++i)
            v[i] = v[i] * 0.999 + 0.001;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += v[i];
    return total;
}
