#include <cmath>
#include <cstdio>
#include <vector>

double solve(int n);
double solve_reference(int n);

static bool validate() {
    double got = solve(96);
    double want = solve_reference(96);
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
