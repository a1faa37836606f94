#include <cmath>
#include <cstdio>
#include <vector>

double solve(const std::vector<double>& v);
double solve_reference(const std::vector<double>& v);

static bool validate() {
    std::vector<double> v(50000);
    for (size_t i = 0; i < v.size(); ++i) v[i] = (double)((i * 2654435761u) % 1000003);
    double got = solve(v);
    double want = solve_reference(v);
    bool ok = got == want;
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
