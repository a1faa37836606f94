int solve_reference(int n) { return n - 1; }
