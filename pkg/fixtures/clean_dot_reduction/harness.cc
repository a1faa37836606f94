#include <cmath>
#include <cstdio>
#include <vector>

double solve(const std::vector<double>& a, const std::vector<double>& b);
double solve_reference(const std::vector<double>& a, const std::vector<double>& b);

static bool validate() {
    std::vector<double> a(200000), b(200000);
    for (size_t i = 0; i < a.size(); ++i) { a[i] = 0.001 * i; b[i] = 1.0 / (i + 1); }
    double got = solve(a, b);
    double want = solve_reference(a, b);
    bool ok = std::fabs(got - want) < 1e-6 * std::fabs(want);
    return ok;
}

int main() {
    if (validate()) {
        printf("VALIDATION: PASS\n");
        return 0;
    }
    printf("VALIDATION: FAIL\n");
    return 1;
}
