#include <cmath>
#include <vector>

double solve_reference(int n) {
    std::vector<double> v(n), s(n);
    for (int i = 0; i < n; ++i) v[i] = std::sin(0.001 * i);
    for (int i = 1; i + 1 < n; ++i) s[i] = (v[i - 1] + v[i] + v[i + 1]) / 3.0;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += s[i];
    return total;
}
