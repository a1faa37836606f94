double solve_reference(int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += 2.0 * i + 1.5 * (0.5 * i);
    return total;
}
