#include <cmath>
#include <cstdio>
#include <vector>

void solve(std::vector<double>& v);
void solve_reference(std::vector<double>& v);

static bool validate() {
    std::vector<double> a(100000), b;
    for (size_t i = 0; i < a.size(); ++i) a[i] = (i % 17) * 0.25;
    b = a;
    solve(a);
    solve_reference(b);
    double diff = 0;
    for (size_t i = 0; i < a.size(); ++i) diff += std::fabs(a[i] - b[i]);
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
