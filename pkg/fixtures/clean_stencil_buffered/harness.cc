#include <cmath>
#include <cstdio>
#include <vector>

void solve(const std::vector<double>& in, std::vector<double>& out);
void solve_reference(const std::vector<double>& in, std::vector<double>& out);

static bool validate() {
    std::vector<double> a(100000), x, y;
    for (size_t i = 0; i < a.size(); ++i) a[i] = (i % 17) * 0.25;
    solve(a, x);
    solve_reference(a, y);
    double diff = 0;
    for (size_t i = 0; i < a.size(); ++i) diff += std::fabs(x[i] - y[i]);
    bool ok = diff < 1e-9;
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
