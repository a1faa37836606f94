#include <cmath>
#include <cstdio>
#include <vector>

long solve(int n);
long solve_reference(int n);

static bool validate() {
    long got = solve(200000);
    long want = solve_reference(200000);
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
