#include <cmath>
#include <cstdio>
#include <vector>

double solve(const std::vector<double>& v);
double solve_reference(const std::vector<double>& v);

static bool validate() {
    std::vector<double> v(200000, 0.5);
    double got = solve(v);
    double want = solve_reference(v);
    bool ok = std::fabs(got - want) < 1e-6 * want;
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
