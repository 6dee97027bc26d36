use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{eigenvalues, Matrix, Spectrum};
use crate::{Error, Result};

/// Real-coefficient univariate polynomial, coefficients in ascending order.
///
/// Trailing (highest-order) exact zeros are trimmed on construction, so the
/// stored leading coefficient is nonzero unless the polynomial is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c·x^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self::constant(1.0), |acc, &r| {
            &acc * &Self::new(vec![-r, 1.0])
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().expect("non-empty")
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops leading coefficients with `|c| ≤ rel_tol·‖p‖∞`.
    pub fn trimmed(&self, rel_tol: f64) -> Self {
        let cut = rel_tol * self.norm_inf();
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= cut) {
            coeffs.pop();
        }
        Self::new(coeffs)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `p(σ·x)`: coefficient `k` multiplied by `σ^k`.
    pub fn rescale_argument(&self, sigma: f64) -> Self {
        let mut pow = 1.0;
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &c in &self.coeffs {
            out.push(c * pow);
            pow *= sigma;
        }
        Self::new(out)
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + rhs.coeffs.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

/// All complex roots of `p`.
///
/// Zero roots are split off first. The remaining polynomial is rescaled to
/// `x = σ·y` with `σ = |c₀/cₙ|^(1/n)` so its coefficients have comparable
/// magnitude, its balanced companion matrix goes through the Hessenberg QR
/// eigenvalue solver, and each root is polished by Newton steps on the
/// rescaled polynomial (a step is kept only if it lowers `|p|`).
pub fn polynomial_roots(p: &Poly) -> Result<Spectrum> {
    if p.degree() == 0 {
        return Err(Error::InvalidParameter(
            "polynomial_roots needs degree >= 1".into(),
        ));
    }
    if p.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("polynomial coefficients"));
    }

    let zeros = p.coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = Poly::new(p.coeffs[zeros..].to_vec());
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    if reduced.degree() == 0 {
        return Ok(Spectrum::new(roots));
    }

    let n = reduced.degree();
    let sigma = (reduced.coeffs[0] / reduced.leading()).abs().powf(1.0 / n as f64);
    let sigma = if sigma.is_finite() && sigma > 0.0 { sigma } else { 1.0 };
    let scaled = reduced.rescale_argument(sigma);
    let scaled = scaled.scale(1.0 / scaled.leading());

    let companion = Matrix::from_fn(n, n, |i, j| {
        if i == 0 {
            -scaled.coeffs[n - 1 - j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let raw = eigenvalues(&companion)?;

    let dp = scaled.derivative();
    for z0 in raw {
        let mut z = z0;
        let mut fz = scaled.eval_complex(z);
        for _ in 0..8 {
            let d = dp.eval_complex(z);
            if d.norm() == 0.0 {
                break;
            }
            let trial = z - fz / d;
            let ft = scaled.eval_complex(trial);
            if ft.norm() < fz.norm() {
                z = trial;
                fz = ft;
            } else {
                break;
            }
        }
        // Keep exact conjugate symmetry for (nearly) real roots.
        if z0.im == 0.0 {
            z.im = 0.0;
        }
        roots.push(z * sigma);
    }
    Ok(Spectrum::new(roots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arithmetic() {
        let a = Poly::new(vec![1.0, 2.0]);
        let b = Poly::new(vec![-1.0, 0.0, 3.0]);
        assert_eq!((&a * &b).coeffs(), &[-1.0, -2.0, 3.0, 6.0]);
        assert_eq!((&a + &b).coeffs(), &[0.0, 2.0, 3.0]);
        assert_eq!((&b - &b).coeffs(), &[0.0]);
        assert_eq!(b.derivative().coeffs(), &[0.0, 6.0]);
        assert_eq!(Poly::new(vec![1.0, 0.0, 0.0]).degree(), 0);
        assert_eq!(Poly::monomial(2.0, 3).coeffs(), &[0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn rescaled_argument_evaluates_consistently() {
        let p = Poly::new(vec![3.0, -1.0, 0.5, 2.0]);
        let q = p.rescale_argument(7.0);
        assert!((q.eval(0.3) - p.eval(2.1)).abs() < 1e-12);
    }

    #[test]
    fn known_cubic() {
        let p = Poly::new(vec![-9.0, 17.0, -9.0, 1.0]);
        let roots = polynomial_roots(&p).unwrap().real_values(1e-7);
        let r7 = 7f64.sqrt();
        for (got, want) in roots.iter().zip([1.0, 4.0 - r7, 4.0 + r7]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn quintuple_root_clusters_near_one() {
        // Five-fold roots are ill-conditioned: perturbations of size ε move
        // them by ε^(1/5), so the cluster tolerance is 1e-3.
        let p = Poly::from_roots(&[1.0; 5]);
        let roots = polynomial_roots(&p).unwrap();
        assert_eq!(roots.len(), 5);
        for z in roots.iter() {
            assert!((z - 1.0).norm() < 1e-3, "{z}");
        }
    }

    #[test]
    fn zero_roots_are_split_off() {
        let p = Poly::new(vec![0.0, 0.0, -4.0, 0.0, 1.0]);
        let roots = polynomial_roots(&p).unwrap().real_values(1e-9);
        let want = [-2.0, 0.0, 0.0, 2.0];
        for (g, w) in roots.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_pair() {
        let p = Poly::new(vec![26.0, 2.0, 1.0]); // (x + 1)² + 25
        let roots = polynomial_roots(&p).unwrap();
        assert!((roots.values()[0] - Complex64::new(-1.0, 5.0)).norm() < 1e-12);
        assert!((roots.values()[1] - Complex64::new(-1.0, -5.0)).norm() < 1e-12);
    }

    #[test]
    fn constant_is_rejected() {
        assert!(polynomial_roots(&Poly::constant(3.0)).is_err());
    }

    #[test]
    fn residual_bound_holds_for_wide_dynamic_range() {
        // Roots spread over six decades, coefficients over ~40.
        let planted = [1e-3, 0.5, 2.0, 30.0, 400.0, 5e3, 6e4, 1e5];
        let p = Poly::from_roots(&planted).scale(1e-11);
        let roots = polynomial_roots(&p).unwrap();
        let norm = p.norm_inf();
        for z in roots.iter() {
            let bound = 1e-8 * norm * z.norm().max(1.0).powi(p.degree() as i32);
            assert!(p.eval_complex(*z).norm() <= bound);
        }
        let real = roots.real_values(1e-7);
        for (g, w) in real.iter().zip(planted) {
            assert!((g - w).abs() <= 1e-6 * w, "{g} vs {w}");
        }
    }

    proptest! {
        #[test]
        fn planted_roots_are_recovered(
            degree in 2usize..=18,
            seeds in proptest::collection::vec(0.0f64..1.0, 18),
            sign_bits in proptest::collection::vec(any::<bool>(), 18),
        ) {
            // Well-separated planted roots: 1 + k + jitter, random signs.
            let planted: Vec<f64> = (0..degree)
                .map(|k| {
                    let r = 1.0 + k as f64 + 0.4 * seeds[k];
                    if sign_bits[k] { r } else { -r }
                })
                .collect();
            let p = Poly::from_roots(&planted);
            let mut want = planted.clone();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let got = polynomial_roots(&p).unwrap().real_values(1e-7);
            prop_assert_eq!(got.len(), degree);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-6 * w.abs(), "{} vs {}", g, w);
            }
        }
    }
}
