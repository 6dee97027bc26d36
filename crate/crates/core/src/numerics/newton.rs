//! Damped Newton iteration with Armijo backtracking, and a deterministic
//! multi-start driver.

use std::cmp::Ordering;

use super::{finite_difference_jacobian, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Converged when `‖F(x)‖∞ ≤ tolerance`.
    pub tolerance: f64,
    /// Relative step for the central-difference Jacobian.
    pub fd_step: f64,
    pub max_backtracks: usize,
    /// Armijo sufficient-decrease constant on `½‖F‖²`.
    pub armijo: f64,
    /// Two solutions closer than this (max-norm, relative, floored at 1)
    /// are merged.
    pub dedup_tolerance: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-10,
            fd_step: 1e-7,
            max_backtracks: 40,
            armijo: 1e-4,
            dedup_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|a| a * a).sum::<f64>()
}

/// Damped Newton from `x0` with a central-difference Jacobian. Returns
/// `None` if the iteration fails to converge, stalls, meets a singular
/// Jacobian or the residual errors.
pub fn damped_newton<F>(residual: &F, x0: &[f64], opts: &NewtonOptions) -> Option<NewtonSolution>
where
    F: Fn(&[f64]) -> crate::Result<Vec<f64>>,
{
    let jacobian = |x: &[f64]| finite_difference_jacobian(residual, x, opts.fd_step);
    damped_newton_with(residual, &jacobian, x0, opts)
}

/// [`damped_newton`] with a caller-supplied Jacobian.
pub fn damped_newton_with<F, G>(
    residual: &F,
    jacobian: &G,
    x0: &[f64],
    opts: &NewtonOptions,
) -> Option<NewtonSolution>
where
    F: Fn(&[f64]) -> crate::Result<Vec<f64>>,
    G: Fn(&[f64]) -> crate::Result<Matrix>,
{
    let mut x = x0.to_vec();
    let mut fx = residual(&x).ok()?;
    if fx.len() != x.len() || fx.iter().any(|v| !v.is_finite()) {
        return None;
    }
    for it in 0..=opts.max_iterations {
        let norm = inf_norm(&fx);
        if norm <= opts.tolerance {
            return Some(NewtonSolution {
                x,
                residual_norm: norm,
                iterations: it,
            });
        }
        if it == opts.max_iterations {
            break;
        }
        let jac = jacobian(&x).ok()?;
        let rhs: Vec<f64> = fx.iter().map(|v| -v).collect();
        let dx = jac.solve(&rhs).ok()?;
        if dx.iter().any(|v| !v.is_finite()) {
            return None;
        }

        let phi = half_sq(&fx);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            if let Ok(ft) = residual(&trial) {
                if ft.iter().all(|v| v.is_finite())
                    && half_sq(&ft) <= (1.0 - 2.0 * opts.armijo * lambda) * phi
                {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let (xn, fn_) = accepted?;
        x = xn;
        fx = fn_;
    }
    None
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

/// Runs [`damped_newton`] from every start and merges duplicates.
///
/// The result is sorted lexicographically and, within each cluster of
/// duplicates, keeps the representative with the smallest residual, so it
/// does not depend on the order of `starts`.
pub fn newton_multistart<F>(
    residual: &F,
    starts: &[Vec<f64>],
    opts: &NewtonOptions,
) -> Vec<NewtonSolution>
where
    F: Fn(&[f64]) -> crate::Result<Vec<f64>>,
{
    let jacobian = |x: &[f64]| finite_difference_jacobian(residual, x, opts.fd_step);
    newton_multistart_with(residual, &jacobian, starts, opts)
}

/// [`newton_multistart`] with a caller-supplied Jacobian.
pub fn newton_multistart_with<F, G>(
    residual: &F,
    jacobian: &G,
    starts: &[Vec<f64>],
    opts: &NewtonOptions,
) -> Vec<NewtonSolution>
where
    F: Fn(&[f64]) -> crate::Result<Vec<f64>>,
    G: Fn(&[f64]) -> crate::Result<Matrix>,
{
    let mut found: Vec<NewtonSolution> = starts
        .iter()
        .filter_map(|s| damped_newton_with(residual, jacobian, s, opts))
        .collect();
    found.sort_by(|a, b| {
        a.residual_norm
            .total_cmp(&b.residual_norm)
            .then_with(|| lexicographic(&a.x, &b.x))
    });
    let mut unique: Vec<NewtonSolution> = Vec::new();
    for s in found {
        if !unique.iter().any(|u| close(&u.x, &s.x, opts.dedup_tolerance)) {
            unique.push(s);
        }
    }
    unique.sort_by(|a, b| lexicographic(&a.x, &b.x));
    unique
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Result;
    use proptest::prelude::*;

    fn square_minus_four(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![x[0] * x[0] - 4.0])
    }

    #[test]
    fn scalar_square_root_from_both_sides() {
        let sols = newton_multistart(
            &square_minus_four,
            &[vec![3.0], vec![-3.0]],
            &NewtonOptions::default(),
        );
        assert_eq!(sols.len(), 2);
        assert!((sols[0].x[0] + 2.0).abs() < 1e-10);
        assert!((sols[1].x[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn damping_rescues_a_far_start() {
        // atan has a famously divergent undamped Newton iteration for |x0| > 1.39.
        let f = |x: &[f64]| -> Result<Vec<f64>> { Ok(vec![x[0].atan()]) };
        let sol = damped_newton(&f, &[10.0], &NewtonOptions::default()).unwrap();
        assert!(sol.x[0].abs() < 1e-10);
    }

    #[test]
    fn no_root_gives_none() {
        let f = |x: &[f64]| -> Result<Vec<f64>> { Ok(vec![x[0] * x[0] + 1.0]) };
        assert!(damped_newton(&f, &[0.5], &NewtonOptions::default()).is_none());
        assert!(newton_multistart(&f, &[vec![0.5], vec![3.0]], &NewtonOptions::default()).is_empty());
    }

    #[test]
    fn two_dimensional_system() {
        // Circle ∩ line: x² + y² = 1, y = x.
        let f = |v: &[f64]| -> Result<Vec<f64>> {
            Ok(vec![v[0] * v[0] + v[1] * v[1] - 1.0, v[1] - v[0]])
        };
        let starts = vec![vec![1.0, 0.5], vec![-1.0, -0.2], vec![0.9, 0.9]];
        let sols = newton_multistart(&f, &starts, &NewtonOptions::default());
        let h = 0.5f64.sqrt();
        assert_eq!(sols.len(), 2);
        assert!((sols[0].x[0] + h).abs() < 1e-10 && (sols[1].x[0] - h).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn result_is_invariant_under_start_permutation(
            starts in proptest::collection::vec(-5.0f64..5.0, 1..12),
            shift in 0usize..12,
        ) {
            let f = |x: &[f64]| -> Result<Vec<f64>> {
                Ok(vec![(x[0] - 1.0) * (x[0] + 2.0) * (x[0] - 3.5)])
            };
            let a: Vec<Vec<f64>> = starts.iter().map(|&s| vec![s]).collect();
            let mut b = a.clone();
            b.reverse();
            let k = shift % b.len();
            b.rotate_left(k);
            let opts = NewtonOptions::default();
            let ra: Vec<Vec<f64>> = newton_multistart(&f, &a, &opts).into_iter().map(|s| s.x).collect();
            let rb: Vec<Vec<f64>> = newton_multistart(&f, &b, &opts).into_iter().map(|s| s.x).collect();
            prop_assert_eq!(ra, rb);
        }
    }
}
