#include <cstddef>
#include <vector>

void solve_reference(const std::vector<double>& in, std::vector<double>& out) {
    out = in;
    for (size_t i = 1; i + 1 < in.size(); ++i)
        out[i] = 0.5 * (in[i - 1] + in[i + 1]);
}
