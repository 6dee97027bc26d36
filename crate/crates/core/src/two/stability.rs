//! Small-signal stability of a two-machine rest point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{rhs_dq_two, TwoCurrents, TwoDqState, TwoEquilibrium, TwoMachineParams};
use crate::error::Result;
use crate::numerics::{eigenvalues, finite_difference_jacobian, Matrix};

/// Eigenvalues with `|Re λ| ≤ ε` make the verdict marginal.
pub const MARGINAL_EPSILON: f64 = 1e-7;

/// State matrix over `[δ, ω₁, ω₂, i_d1, i_q1, i_d2, i_q2, i_d3, i_q3]` and
/// input matrix over `[T_m1/J, T_m2/J]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoJacobian {
    pub a: Matrix,
    pub b: Matrix,
}

impl TwoJacobian {
    pub fn mechanical(&self) -> Matrix {
        self.a.block(0, 0, 3, 3)
    }

    pub fn mechanical_electrical(&self) -> Matrix {
        self.a.block(0, 3, 3, 6)
    }

    pub fn electrical_mechanical(&self) -> Matrix {
        self.a.block(3, 0, 6, 3)
    }

    pub fn electrical(&self) -> Matrix {
        self.a.block(3, 3, 6, 6)
    }
}

pub fn jacobian_two_at(omega: f64, delta: f64, i: &TwoCurrents, p: &TwoMachineParams) -> TwoJacobian {
    let (s, c) = delta.sin_cos();
    let (r, rl, b) = (p.resistance(), p.load_resistance, p.b());
    let (l, l3, j, d) = (p.inductance, p.line_inductance, p.inertia, p.damping);
    let w = omega;
    let mut a = Matrix::zeros(9, 9);

    let mm = [
        [0.0, -0.5, 0.5],
        [b * (c * i.i_d1 + s * i.i_q1) / j, -d / j, 0.0],
        [b * (-c * i.i_d2 + s * i.i_q2) / j, 0.0, -d / j],
    ];
    let me = [
        [0.0; 6],
        [b * s / j, -b * c / j, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, -b * s / j, -b * c / j, 0.0, 0.0],
    ];
    let em = [
        [-b * w * c / l, -b * s / l - i.i_q1 / 2.0, -i.i_q1 / 2.0],
        [-b * w * s / l, b * c / l + i.i_d1 / 2.0, i.i_d1 / 2.0],
        [b * w * c / l, -i.i_q2 / 2.0, b * s / l - i.i_q2 / 2.0],
        [-b * w * s / l, i.i_d2 / 2.0, b * c / l + i.i_d2 / 2.0],
        [0.0, -i.i_q3 / 2.0, -i.i_q3 / 2.0],
        [0.0, i.i_d3 / 2.0, i.i_d3 / 2.0],
    ];
    let ee = [
        [-r / l, -w, 0.0, 0.0, rl / l, 0.0],
        [w, -r / l, 0.0, 0.0, 0.0, rl / l],
        [0.0, 0.0, -r / l, -w, -rl / l, 0.0],
        [0.0, 0.0, w, -r / l, 0.0, -rl / l],
        [rl / l3, 0.0, -rl / l3, 0.0, -2.0 * rl / l3, -w],
        [0.0, rl / l3, 0.0, -rl / l3, w, -2.0 * rl / l3],
    ];
    a.set_block(0, 0, &Matrix::from_rows(&mm));
    a.set_block(0, 3, &Matrix::from_rows(&me));
    a.set_block(3, 0, &Matrix::from_rows(&em));
    a.set_block(3, 3, &Matrix::from_rows(&ee));

    let mut input = Matrix::zeros(9, 2);
    input[(1, 0)] = 1.0;
    input[(2, 1)] = 1.0;
    TwoJacobian { a, b: input }
}

pub fn jacobian_two(eq: &TwoEquilibrium, p: &TwoMachineParams) -> TwoJacobian {
    jacobian_two_at(eq.omega, eq.delta, &eq.currents, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoVerdict {
    LocallyStable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStabilityReport {
    pub omega: f64,
    pub delta: f64,
    pub jacobian: TwoJacobian,
    pub eigenvalues: Vec<Complex64>,
    pub max_real_eigenvalue: f64,
    pub verdict: TwoVerdict,
    /// Largest entrywise gap `|A − A_fd| / max(1, |A|)` against central
    /// differences of the dq model.
    pub finite_difference_mismatch: f64,
}

/// Eigenvalues of the state matrix and the resulting verdict.
pub fn eigen_stability_two(jac: &TwoJacobian, epsilon: f64) -> Result<(Vec<Complex64>, f64, TwoVerdict)> {
    let spectrum = eigenvalues(&jac.a)?;
    let max_real = spectrum.max_real();
    let verdict = if max_real < -epsilon {
        TwoVerdict::LocallyStable
    } else if max_real > epsilon {
        TwoVerdict::Unstable
    } else {
        TwoVerdict::Marginal
    };
    Ok((spectrum.values().to_vec(), max_real, verdict))
}

fn finite_difference_mismatch(state: &TwoDqState, a: &Matrix, p: &TwoMachineParams) -> Result<f64> {
    let f = |x: &[f64]| -> Result<Vec<f64>> { Ok(rhs_dq_two(&TwoDqState::from_slice(x), p).to_vec()) };
    let fd = finite_difference_jacobian(&f, &state.to_vec(), 1e-6)?;
    let mut worst: f64 = 0.0;
    for r in 0..9 {
        for c in 0..9 {
            let an = a[(r, c)];
            worst = worst.max((an - fd[(r, c)]).abs() / an.abs().max(1.0));
        }
    }
    Ok(worst)
}

pub fn stability_two(eq: &TwoEquilibrium, p: &TwoMachineParams) -> Result<TwoStabilityReport> {
    let jacobian = jacobian_two(eq, p);
    let (eigenvalues, max_real_eigenvalue, verdict) = eigen_stability_two(&jacobian, MARGINAL_EPSILON)?;
    let finite_difference_mismatch = finite_difference_mismatch(&eq.state(), &jacobian.a, p)?;
    Ok(TwoStabilityReport {
        omega: eq.omega,
        delta: eq.delta,
        jacobian,
        eigenvalues,
        max_real_eigenvalue,
        verdict,
        finite_difference_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{closed_form_currents, solve_two_equilibria, Reduction, TwoSolveOptions};
    use super::*;

    fn case2() -> TwoMachineParams {
        TwoMachineParams::from_total_resistance(1.0, 9.0, 2910.0, 2800.0, 1010.0, 1000.0, 0.041, 0.04, 5.0)
            .unwrap()
    }

    #[test]
    fn block_structure_as_tabulated() {
        let p = case2();
        let i = closed_form_currents(312.0, 0.5, &p).unwrap();
        let jac = jacobian_two_at(312.0, 0.5, &i, &p);
        let mm = jac.mechanical();
        assert_eq!((mm[(0, 0)], mm[(0, 1)], mm[(0, 2)]), (0.0, -0.5, 0.5));
        assert_eq!(mm[(1, 2)], 0.0);
        assert_eq!(mm[(2, 1)], 0.0);
        let ee = jac.electrical();
        assert_eq!(ee[(4, 4)], -2.0 * 1000.0 / 0.04);
        for r in 0..9 {
            for c in 0..2 {
                let expected = if (r, c) == (1, 0) || (r, c) == (2, 1) { 1.0 } else { 0.0 };
                assert_eq!(jac.b[(r, c)], expected);
            }
        }
    }

    #[test]
    fn unexcited_coupling_blocks_vanish() {
        let p = TwoMachineParams::new(1.0, 9.0, 10.0, 10.0, 10.0, 1000.0, 0.041, 0.04, 0.0).unwrap();
        let i = TwoCurrents::default();
        let jac = jacobian_two_at(50.0, 0.3, &i, &p);
        assert_eq!(jac.mechanical_electrical().max_abs(), 0.0);
        assert_eq!(jac.electrical_mechanical().max_abs(), 0.0);
    }

    #[test]
    fn unexcited_spectrum_splits_into_mechanical_and_network_modes() {
        let p = TwoMachineParams::new(2.0, 6.0, 10.0, 10.0, 10.0, 1000.0, 0.041, 0.04, 0.0).unwrap();
        let jac = jacobian_two_at(50.0, 0.3, &TwoCurrents::default(), &p);
        let (eig, _, _) = eigen_stability_two(&jac, MARGINAL_EPSILON).unwrap();
        let mech = eig.iter().filter(|z| (z.re + 3.0).abs() < 1e-9 && z.im.abs() < 1e-9).count();
        assert_eq!(mech, 2);
        let net = eigenvalues(&jac.electrical()).unwrap();
        for z in net.iter() {
            assert!(eig.iter().any(|e| (e - z).norm() <= 1e-9 * z.norm().max(1.0)));
        }
        assert!(eig.iter().any(|z| z.norm() < 1e-12));
    }

    #[test]
    fn case2_published_verdicts() {
        let p = case2();
        let sol = solve_two_equilibria(&p, &TwoSolveOptions { cross_check: false, ..Default::default() }).unwrap();
        let reports: Vec<TwoStabilityReport> = sol.equilibria.iter().map(|e| stability_two(e, &p).unwrap()).collect();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].verdict, TwoVerdict::Unstable);
        assert_eq!(reports[1].verdict, TwoVerdict::LocallyStable);
        assert!((reports[1].max_real_eigenvalue + 4.40).abs() < 0.01, "{}", reports[1].max_real_eigenvalue);
        assert!((reports[0].max_real_eigenvalue - 11.40).abs() < 0.01, "{}", reports[0].max_real_eigenvalue);
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences_at_rest_points() {
        let p = case2();
        for reduction in [Reduction::HalfGain, Reduction::Exact] {
            let opts = TwoSolveOptions { cross_check: false, ..TwoSolveOptions::with_reduction(reduction) };
            for e in solve_two_equilibria(&p, &opts).unwrap().equilibria {
                let rep = stability_two(&e, &p).unwrap();
                assert!(rep.finite_difference_mismatch <= 1e-6, "{}", rep.finite_difference_mismatch);
            }
        }
    }

    #[test]
    fn case2_exact_verdicts() {
        let p = case2();
        let opts = TwoSolveOptions { cross_check: false, ..TwoSolveOptions::with_reduction(Reduction::Exact) };
        let sol = solve_two_equilibria(&p, &opts).unwrap();
        let v: Vec<TwoVerdict> = sol.equilibria.iter().map(|e| stability_two(e, &p).unwrap().verdict).collect();
        assert_eq!(v, vec![TwoVerdict::Unstable, TwoVerdict::LocallyStable]);
    }
}
