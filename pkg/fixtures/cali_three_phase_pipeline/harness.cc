#include <cmath>
#include <cstdio>
#include <vector>

double solve(int n);
double solve_reference(int n);

static bool validate() {
    double got = solve(100000);
    double want = solve_reference(100000);
    bool ok = std::fabs(got - want) < 1e-5;
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
