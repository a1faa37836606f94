#include <cmath>
#include <cstdio>
#include <vector>

std::vector<long> solve(const std::vector<int>& data, int bins);
std::vector<long> solve_reference(const std::vector<int>& data, int bins);

static bool validate() {
    std::vector<int> data(50000);
    for (size_t i = 0; i < data.size(); ++i) data[i] = (int)(i % 8);
    std::vector<long> got = solve(data, 8);
    std::vector<long> want = solve_reference(data, 8);
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
