//! Self-contained numerical kernels.
//!
//! Everything here operates on small dense problems (n ≤ 18), so plain
//! O(n³) algorithms are used throughout.

mod eigen;
mod matrix;
mod newton;
mod ode;
mod poly;

pub use eigen::{eigenvalues, Spectrum};
pub use matrix::Matrix;
pub use newton::{
    damped_newton, damped_newton_with, newton_multistart, newton_multistart_with, NewtonOptions,
    NewtonSolution,
};
pub use ode::{integrate, IntegratorOptions, Method, OdeSolution, Record, SteadyState};
pub use poly::{polynomial_roots, Poly};

/// Central-difference Jacobian of `f` at `x`.
///
/// Column `j` uses the step `h·max(1, |x_j|)`.
pub fn finite_difference_jacobian<F>(f: F, x: &[f64], h: f64) -> crate::Result<Matrix>
where
    F: Fn(&[f64]) -> crate::Result<Vec<f64>>,
{
    let n = x.len();
    let m = f(x)?.len();
    let mut jac = Matrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let step = h * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        let fp = f(&xp)?;
        xp[j] = x[j] - step;
        let fm = f(&xp)?;
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}
