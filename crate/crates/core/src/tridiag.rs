//! Tridiagonal solves for the implicit diffusion stages.

/// Thomas algorithm for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. The system must be diagonally dominant.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Solves `(I − coef·Δ) x = rhs` where Δ is the no-flux second difference on spacing `dx`.
pub fn solve_neumann_implicit(coef: f64, dx: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let r = coef / (dx * dx);
    let lower = vec![-r; n];
    let upper = vec![-r; n];
    let mut diag = vec![1.0 + 2.0 * r; n];
    diag[0] = 1.0 + r;
    diag[n - 1] = 1.0 + r;
    solve(&lower, &diag, &upper, rhs)
}
