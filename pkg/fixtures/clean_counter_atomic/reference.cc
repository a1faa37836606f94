long solve_reference(int n) { return n; }
