//! Elimination of the currents: the two torque balances in `(ω, δ)`, the
//! angle recovery and the degree-18 speed polynomial.

use serde::{Deserialize, Serialize};

use super::{TwoMachineAux, TwoMachineParams};
use crate::error::{Error, Result};
use crate::numerics::Poly;

/// How the two torque balances are reduced to `(ω, δ)`.
///
/// `HalfGain` is the published reduction, which carries half the exact
/// electrical gain and the opposite sign on the line coupling term of the
/// torque difference. `Exact` is the rest-point condition of the dynamic
/// model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    HalfGain,
    Exact,
}

impl Reduction {
    /// Electrical gain multiplying `ω` in the reduced torque balances.
    pub fn gain(self, b: f64) -> f64 {
        match self {
            Reduction::HalfGain => b * b,
            Reduction::Exact => 2.0 * b * b,
        }
    }

    /// Sign on the line coupling term in the torque difference.
    pub fn coupling_sign(self) -> f64 {
        match self {
            Reduction::HalfGain => 1.0,
            Reduction::Exact => -1.0,
        }
    }
}

/// Reduced torque sum and difference at `(ω, δ)`, each with its largest
/// term for relative scaling.
pub fn reduced_residual(omega: f64, delta: f64, p: &TwoMachineParams, reduction: Reduction) -> [(f64, f64); 2] {
    let aux = TwoMachineAux::new(omega, p);
    let n = aux.n();
    let (s, c) = delta.sin_cos();
    let bw = reduction.gain(p.b()) * omega;
    let lw = p.inductance * omega;
    let row = |terms: &[f64]| -> (f64, f64) {
        (terms.iter().sum(), terms.iter().fold(0.0f64, |m, t| m.max(t.abs())))
    };
    [
        row(&[
            -2.0 * p.damping * omega,
            bw * aux.a * s * s / n,
            -bw * p.resistance() * c * c / aux.z,
            p.torque_sum(),
        ]),
        row(&[
            -bw * s * c * lw / aux.z,
            bw * s * c * reduction.coupling_sign() * aux.e / n,
            -p.torque_difference(),
        ]),
    ]
}

/// Factors of the speed polynomial `P1·P2·Q3² − T_d²·Z·M·D0²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFactors {
    pub reduction: Reduction,
    /// `R² + L²ω²`
    pub z: Poly,
    /// `Z·X + R_L²(4LL₃ω² − 8RR_L) + 4R_L⁴`, equal to `X·(a² + e²)`
    pub m: Poly,
    pub p1: Poly,
    pub p2: Poly,
    pub q3: Poly,
    pub d0: Poly,
    pub torque_difference: f64,
    /// Coefficientwise bound on the terms summed into each assembled
    /// coefficient; rounding error is relative to this.
    pub magnitude: Poly,
}

/// Leading coefficients below this fraction of their magnitude bound are
/// cancellation residue.
const CANCELLATION_TOLERANCE: f64 = 1e-12;

/// `[z, m, p1, p2, q3, d0]`. With `bound` set every constant enters by
/// absolute value and differences become sums, giving term magnitudes.
fn factor_polys(p: &TwoMachineParams, reduction: Reduction, bound: bool) -> [Poly; 6] {
    let k = |v: f64| if bound { v.abs() } else { v };
    let sub = |a: &Poly, b: &Poly| if bound { a + b } else { a - b };
    let (r, rl, l, l3, d) = (p.resistance(), p.load_resistance, p.inductance, p.line_inductance, p.damping);
    let beta = reduction.gain(p.b());
    let w = Poly::monomial(1.0, 1);
    let z = Poly::new(vec![r * r, 0.0, l * l]);
    let x = Poly::new(vec![4.0 * rl * rl, 0.0, l3 * l3]);
    let tail = Poly::new(vec![
        4.0 * rl.powi(4) + k(-8.0 * r * rl.powi(3)),
        0.0,
        4.0 * l * l3 * rl * rl,
    ]);
    let m = &(&z * &x) + &tail;
    let a_x = &x.scale(k(-r)) + &Poly::constant(4.0 * rl.powi(3));
    let e_x = &(&w * &x).scale(k(-l)) + &w.scale(k(-2.0 * l3 * rl * rl));
    let speed_excess = Poly::new(vec![k(-p.torque_sum()), 2.0 * d]);
    let p1 = &(&speed_excess * &z) + &w.scale(r * beta);
    let p2 = sub(&(&a_x * &w).scale(beta), &(&speed_excess * &m));
    let q3 = &(&w * &m).scale(k(-l)) + &(&e_x * &z).scale(k(reduction.coupling_sign()));
    let d0 = &z.scale(4.0 * rl.powi(3)) + &tail.scale(r);
    [z, m, p1, p2, q3, d0]
}

impl PolyFactors {
    pub fn new(p: &TwoMachineParams, reduction: Reduction) -> Self {
        let [z, m, p1, p2, q3, d0] = factor_polys(p, reduction, false);
        let [bz, bm, bp1, bp2, bq3, bd0] = factor_polys(p, reduction, true);
        let td = p.torque_difference();
        let magnitude = &(&(&bp1 * &bp2) * &(&bq3 * &bq3)) + &(&(&bz * &bm) * &(&bd0 * &bd0)).scale(td * td);
        Self { reduction, z, m, p1, p2, q3, d0, torque_difference: td, magnitude }
    }

    /// Assembled polynomial, highest degree 18 for `HalfGain`. Leading
    /// coefficients lost to cancellation are dropped.
    pub fn polynomial(&self) -> Poly {
        let lhs = &(&self.p1 * &self.p2) * &(&self.q3 * &self.q3);
        let rhs = (&(&self.z * &self.m) * &(&self.d0 * &self.d0)).scale(self.torque_difference.powi(2));
        let full = &lhs - &rhs;
        let mut coeffs = full.coeffs().to_vec();
        let bound = self.magnitude.coeffs();
        while coeffs.len() > 1 {
            let k = coeffs.len() - 1;
            if coeffs[k].abs() > CANCELLATION_TOLERANCE * bound.get(k).copied().unwrap_or(0.0) {
                break;
            }
            coeffs.pop();
        }
        Poly::new(coeffs)
    }

    /// Evaluates the factored form together with the larger magnitude of
    /// its two products.
    pub fn eval(&self, omega: f64) -> (f64, f64) {
        let q = self.q3.eval(omega);
        let d0 = self.d0.eval(omega);
        let lhs = self.p1.eval(omega) * self.p2.eval(omega) * q * q;
        let rhs = self.torque_difference.powi(2) * self.z.eval(omega) * self.m.eval(omega) * d0 * d0;
        (lhs - rhs, lhs.abs().max(rhs.abs()))
    }
}

/// Speed polynomial for the given reduction, assembled from its factors.
pub fn assemble_poly18(p: &TwoMachineParams, reduction: Reduction) -> Poly {
    PolyFactors::new(p, reduction).polynomial()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityFlags {
    /// `|sinδ cosδ| ≤ 1/2`
    pub product_bound: bool,
    /// `sin²δ + cos²δ = 1`
    pub unit_sum: bool,
    /// `ω > 0`
    pub positive_speed: bool,
    /// `sin²δ` and `cos²δ` both lie in `[0, 1]`
    pub squares_in_range: bool,
}

impl ValidityFlags {
    pub fn all(&self) -> bool {
        self.product_bound && self.unit_sum && self.positive_speed && self.squares_in_range
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecovery {
    pub omega: f64,
    pub sin_sq: f64,
    pub cos_sq: f64,
    pub sin_cos: f64,
    pub flags: ValidityFlags,
    /// Angles in `(−π, π]` consistent with all three trigonometric values.
    pub candidates: Vec<f64>,
}

const VALIDITY_TOLERANCE: f64 = 1e-8;
const SIGN_TOLERANCE: f64 = 1e-6;

/// Trigonometric values of the load angle implied by a rest speed, and the
/// angles consistent with them.
pub fn recover_delta(omega: f64, p: &TwoMachineParams, reduction: Reduction) -> Result<DeltaRecovery> {
    let aux = TwoMachineAux::new(omega, p);
    let n = aux.n();
    let r = p.resistance();
    let bw = reduction.gain(p.b()) * omega;
    let lw = p.inductance * omega;
    let common = aux.a * aux.z + r * n;
    let coupling = -lw / aux.z + reduction.coupling_sign() * aux.e / n;
    if bw == 0.0 || common == 0.0 || coupling == 0.0 || !bw.is_finite() {
        return Err(Error::DegenerateNetwork(format!(
            "angle recovery is singular at omega = {omega}"
        )));
    }
    let excess = 2.0 * p.damping * omega - p.torque_sum();
    let sin_sq = (excess * aux.z + r * bw) * n / (common * bw);
    let cos_sq = (aux.a * bw - excess * n) * aux.z / (common * bw);
    let sin_cos = p.torque_difference() / (bw * coupling);

    let tol = VALIDITY_TOLERANCE;
    let flags = ValidityFlags {
        product_bound: sin_cos.abs() <= 0.5 + tol,
        unit_sum: (sin_sq + cos_sq - 1.0).abs() <= tol,
        positive_speed: omega > 0.0,
        squares_in_range: (-tol..=1.0 + tol).contains(&sin_sq) && (-tol..=1.0 + tol).contains(&cos_sq),
    };
    let mut candidates = Vec::new();
    if flags.all() {
        let s_abs = sin_sq.clamp(0.0, 1.0).sqrt();
        let c_abs = cos_sq.clamp(0.0, 1.0).sqrt();
        for s in [s_abs, -s_abs] {
            for c in [c_abs, -c_abs] {
                if (s * c - sin_cos).abs() <= SIGN_TOLERANCE {
                    let d = s.atan2(c);
                    let d = if d <= -std::f64::consts::PI { d + 2.0 * std::f64::consts::PI } else { d };
                    if !candidates.iter().any(|&x: &f64| (x - d).abs() < 1e-12) {
                        candidates.push(d);
                    }
                }
            }
        }
    }
    Ok(DeltaRecovery { omega, sin_sq, cos_sq, sin_cos, flags, candidates })
}

/// Coefficient groups of the speed polynomial as tabulated in the
/// published tabulated, and the polynomial assembled from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCoefficients18 {
    /// `K₀ … K₈`
    pub k: [f64; 9],
    /// `G₂, G₄, G₆, G₈, G₁₀`
    pub g: [f64; 5],
    /// `H₀, H₂, H₄, H₆, H₈, H₁₀`
    pub h: [f64; 6],
    /// Ascending coefficients of `ω⁰ … ω¹⁸`.
    pub coefficients: Vec<f64>,
}

impl PolyCoefficients18 {
    pub fn poly(&self) -> Poly {
        Poly::new(self.coefficients.clone())
    }
}

/// Tabulated coefficient groups, transcribed term by term.
pub fn tabulated_coefficients(p: &TwoMachineParams) -> PolyCoefficients18 {
    let (r, rl, l, l3, d, b) = (
        p.resistance(),
        p.load_resistance,
        p.inductance,
        p.line_inductance,
        p.damping,
        p.b(),
    );
    let (ts, td) = (p.torque_sum(), p.torque_difference());
    let b2 = b * b;
    let b4 = b2 * b2;
    let d2 = d * d;
    let ts2 = ts * ts;
    let td2 = td * td;
    let pw = |x: f64, n: i32| x.powi(n);

    let k = [
        -4.0 * pw(rl, 4) * r * r * ts2 + 8.0 * pw(rl, 3) * pw(r, 3) * ts2 - 4.0 * rl * rl * pw(r, 4) * ts2,
        4.0 * b2 * pw(rl, 4) * r * ts - 12.0 * b2 * pw(rl, 3) * r * r * ts + 16.0 * d * pw(rl, 4) * r * r * ts
            + 8.0 * b2 * rl * rl * pw(r, 3) * ts
            - 32.0 * d * pw(rl, 3) * pw(r, 3) * ts
            + 16.0 * d * rl * rl * pw(r, 4) * ts,
        4.0 * b4 * pw(rl, 3) * r - 8.0 * b2 * d * pw(rl, 4) * r - 4.0 * b4 * rl * rl * r * r
            + 24.0 * b2 * d * pw(rl, 3) * r * r
            - 16.0 * d2 * pw(rl, 4) * r * r
            - 16.0 * b2 * d * rl * rl * pw(r, 3)
            + 32.0 * d2 * pw(rl, 3) * pw(r, 3)
            - 16.0 * d2 * rl * rl * pw(r, 4)
            - 4.0 * l * l * pw(rl, 4) * ts2
            + 8.0 * l * l * pw(rl, 3) * r * ts2
            - 4.0 * l3 * l * rl * rl * r * r * ts2
            - 8.0 * l * l * rl * rl * r * r * ts2
            + pw(r, 4) * ts2,
        -4.0 * b2 * l * l * pw(rl, 3) * ts + 16.0 * d * l * l * pw(rl, 4) * ts + 4.0 * l3 * b2 * l * rl * rl * r * ts
            + 8.0 * b2 * l * l * rl * rl * r * ts
            - 32.0 * d * l * l * pw(rl, 3) * r * ts
            + 16.0 * l3 * d * l * rl * rl * r * r * ts
            + 32.0 * d * l * l * rl * rl * r * r * ts
            - 2.0 * b2 * pw(r, 3) * ts
            - 4.0 * d * pw(r, 4) * ts,
        8.0 * b2 * d * l * l * pw(rl, 3) - 16.0 * d2 * l * l * pw(rl, 4) - 8.0 * l3 * b2 * d * l * rl * rl * r
            - 16.0 * b2 * d * l * l * rl * rl * r
            + 32.0 * d2 * l * l * pw(rl, 3) * r
            + b4 * r * r
            - 16.0 * l3 * d2 * l * rl * rl * r * r
            - 32.0 * d2 * l * l * rl * rl * r * r
            + 4.0 * b2 * d * pw(r, 3)
            + 4.0 * d2 * pw(r, 4)
            - 4.0 * l3 * pw(l, 3) * rl * rl * ts2
            - 4.0 * pw(l, 4) * rl * rl * ts2
            + 2.0 * l * l * r * r * ts2,
        16.0 * l3 * d * pw(l, 3) * rl * rl * ts + 16.0 * d * pw(l, 4) * rl * rl * ts - 2.0 * b2 * l * l * r * ts
            - 8.0 * d * l * l * r * r * ts,
        -16.0 * l3 * d2 * pw(l, 3) * rl * rl - 16.0 * d2 * pw(l, 4) * rl * rl + 4.0 * b2 * d * l * l * r
            + 8.0 * d2 * l * l * r * r
            + pw(l, 4) * ts2,
        -4.0 * d * pw(l, 4) * ts,
        4.0 * d2 * pw(l, 4),
    ];

    let g = [
        16.0 * l * l * pw(rl, 8) - 64.0 * l * l * pw(rl, 7) * r + 128.0 * l * l * pw(rl, 6) * r * r
            - 128.0 * l * l * pw(rl, 5) * pw(r, 3)
            + 64.0 * l * l * pw(rl, 4) * pw(r, 4)
            + 16.0 * l3 * l * pw(rl, 6) * r * r
            - 32.0 * l3 * l * pw(rl, 5) * pw(r, 3)
            + 32.0 * l3 * l * pw(rl, 4) * pw(r, 4)
            - 4.0 * pw(rl, 4) * pw(r, 4),
        -8.0 * l3 * l * rl * rl * pw(r, 4) + 64.0 * pw(l, 4) * pw(rl, 6) - 128.0 * pw(l, 4) * pw(rl, 5) * r
            + 128.0 * pw(l, 4) * pw(rl, 4) * r * r
            + 48.0 * l3 * pw(l, 3) * pw(rl, 6)
            - 96.0 * l3 * pw(l, 3) * pw(rl, 5) * r
            + 128.0 * l3 * pw(l, 3) * pw(rl, 4) * r * r
            - 40.0 * l * l * pw(rl, 4) * r * r
            + 32.0 * l * l * pw(rl, 3) * pw(r, 3)
            - 32.0 * l * l * rl * rl * pw(r, 4),
        64.0 * pw(l, 6) * pw(rl, 4) + 96.0 * l3 * pw(l, 5) * pw(rl, 4) - 52.0 * pw(l, 4) * pw(rl, 4)
            + 32.0 * pw(l, 4) * pw(rl, 3) * r
            - 64.0 * pw(l, 4) * rl * rl * r * r
            - 32.0 * l3 * pw(l, 3) * rl * rl * r * r
            + 4.0 * l * l * pw(r, 4),
        -32.0 * pw(l, 6) * rl * rl - 24.0 * l3 * pw(l, 5) * rl * rl + 8.0 * pw(l, 4) * r * r,
        4.0 * pw(l, 6),
    ];

    let h = [
        64.0 * td2 * pw(r, 4) * pw(rl, 12) - 256.0 * td2 * pw(r, 5) * pw(rl, 11) + 384.0 * td2 * pw(r, 6) * pw(rl, 10)
            - 256.0 * td2 * pw(r, 7) * pw(rl, 9)
            + 64.0 * td2 * pw(r, 8) * pw(rl, 8),
        64.0 * l * l * td2 * r * r * pw(rl, 12) - 128.0 * l * l * td2 * pw(r, 3) * pw(rl, 11)
            + 64.0 * l * l * td2 * pw(r, 4) * pw(rl, 10)
            + 192.0 * l3 * l * td2 * pw(r, 4) * pw(rl, 10)
            - 512.0 * l3 * l * td2 * pw(r, 5) * pw(rl, 9)
            + 448.0 * l3 * l * td2 * pw(r, 6) * pw(rl, 8)
            - 16.0 * td2 * pw(r, 6) * pw(rl, 8)
            - 128.0 * l3 * l * td2 * pw(r, 7) * pw(rl, 7)
            + 32.0 * td2 * pw(r, 7) * pw(rl, 7)
            - 16.0 * td2 * pw(r, 8) * pw(rl, 6),
        128.0 * pw(l, 4) * td2 * r * pw(rl, 11) - 256.0 * pw(l, 4) * td2 * r * r * pw(rl, 10)
            + 192.0 * l3 * pw(l, 3) * td2 * r * r * pw(rl, 10)
            + 256.0 * pw(l, 4) * td2 * pw(r, 3) * pw(rl, 9)
            - 256.0 * l3 * pw(l, 3) * td2 * pw(r, 3) * pw(rl, 9)
            - 128.0 * pw(l, 4) * td2 * pw(r, 4) * pw(rl, 8)
            + 192.0 * l3 * pw(l, 3) * td2 * pw(r, 4) * pw(rl, 8)
            - 224.0 * l * l * td2 * pw(r, 4) * pw(rl, 8)
            - 128.0 * l3 * pw(l, 3) * td2 * pw(r, 5) * pw(rl, 7)
            + 288.0 * l * l * td2 * pw(r, 5) * pw(rl, 7)
            - 64.0 * l * l * td2 * pw(r, 6) * pw(rl, 6)
            - 32.0 * l3 * l * td2 * pw(r, 6) * pw(rl, 6)
            + 32.0 * l3 * l * td2 * pw(r, 7) * pw(rl, 5),
        64.0 * pw(l, 6) * td2 * pw(rl, 10) - 208.0 * pw(l, 4) * td2 * r * r * pw(rl, 8)
            - 192.0 * l3 * pw(l, 5) * td2 * r * r * pw(rl, 8)
            + 256.0 * l3 * pw(l, 5) * td2 * r * pw(rl, 9)
            + 128.0 * l3 * pw(l, 5) * td2 * pw(r, 3) * pw(rl, 7)
            + 96.0 * pw(l, 4) * td2 * pw(r, 3) * pw(rl, 7)
            - 96.0 * pw(l, 4) * td2 * pw(r, 4) * pw(rl, 6)
            - 128.0 * l3 * pw(l, 3) * td2 * pw(r, 4) * pw(rl, 6)
            + 32.0 * l3 * pw(l, 3) * td2 * pw(r, 5) * pw(rl, 5)
            + 16.0 * l * l * td2 * pw(r, 6) * pw(rl, 4),
        64.0 * pw(l, 8) * td2 * pw(rl, 8) + 64.0 * l3 * pw(l, 7) * td2 * pw(rl, 8)
            - 160.0 * pw(l, 6) * td2 * r * pw(rl, 7)
            + 128.0 * l3 * pw(l, 7) * td2 * r * pw(rl, 7)
            - 64.0 * pw(l, 6) * td2 * r * r * pw(rl, 6)
            - 96.0 * l3 * pw(l, 5) * td2 * r * r * pw(rl, 6)
            - 32.0 * l3 * pw(l, 5) * td2 * pw(r, 3) * pw(rl, 5)
            + 32.0 * pw(l, 4) * td2 * pw(r, 4) * pw(rl, 4),
        -16.0 * pw(l, 8) * td2 * pw(rl, 6) - 32.0 * l3 * pw(l, 7) * td2 * r * pw(rl, 5)
            + 16.0 * pw(l, 6) * td2 * r * r * pw(rl, 4),
    ];

    let mut coefficients = vec![0.0; 19];
    for (i, ki) in k.iter().enumerate() {
        for (jj, gj) in g.iter().enumerate() {
            coefficients[i + 2 * (jj + 1)] += ki * gj;
        }
    }
    for (jj, hj) in h.iter().enumerate() {
        coefficients[2 * jj] -= hj;
    }
    coefficients[18] = -coefficients[18];

    PolyCoefficients18 { k, g, h, coefficients }
}

/// Whether the tabulated polynomial vanishes where the speed polynomial
/// does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedDiagnostic {
    pub roots: Vec<f64>,
    /// `|P(ω)| / Σ|c_k ω^k|` of the tabulated polynomial at each root.
    pub relative_values: Vec<f64>,
    pub shares_zeros: bool,
}

pub fn tabulated_zero_sharing(p: &TwoMachineParams, roots: &[f64]) -> TabulatedDiagnostic {
    let poly = tabulated_coefficients(p).poly();
    let relative_values: Vec<f64> = roots
        .iter()
        .map(|&w| {
            let scale: f64 = poly.coeffs().iter().enumerate().map(|(k, c)| (c * w.powi(k as i32)).abs()).sum();
            if scale > 0.0 {
                poly.eval(w).abs() / scale
            } else {
                0.0
            }
        })
        .collect();
    let shares_zeros = relative_values.iter().all(|&v| v <= VALIDITY_TOLERANCE);
    TabulatedDiagnostic { roots: roots.to_vec(), relative_values, shares_zeros }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::polynomial_roots;
    use proptest::prelude::*;

    fn case2() -> TwoMachineParams {
        TwoMachineParams::from_total_resistance(1.0, 9.0, 2910.0, 2800.0, 1010.0, 1000.0, 0.041, 0.04, 5.0)
            .unwrap()
    }

    fn positive_real_roots(poly: &Poly) -> Vec<f64> {
        polynomial_roots(poly)
            .unwrap()
            .iter()
            .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()) && z.re > 0.0)
            .map(|z| z.re)
            .collect()
    }

    #[test]
    fn half_gain_polynomial_has_degree_eighteen_and_expected_leading_term() {
        let p = case2();
        let f = assemble_poly18(&p, Reduction::HalfGain);
        assert_eq!(f.degree(), 18);
        let (d, l, l3) = (p.damping, p.inductance, p.line_inductance);
        let expected = -16.0 * d * d * l.powi(10) * l3.powi(6);
        assert!((f.leading() - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn exact_polynomial_drops_to_degree_fourteen() {
        // The line factor loses two degrees; rounding residue above must not
        // survive as spurious leading terms.
        let f = assemble_poly18(&case2(), Reduction::Exact);
        assert_eq!(f.degree(), 14);
        let factors = PolyFactors::new(&case2(), Reduction::Exact);
        assert_eq!(factors.q3.degree(), 3);
    }

    #[test]
    fn factored_and_assembled_forms_agree() {
        let p = case2();
        for reduction in [Reduction::HalfGain, Reduction::Exact] {
            let factors = PolyFactors::new(&p, reduction);
            let poly = factors.polynomial();
            for w in [1.0, 50.0, 309.0, 316.0, 400.0] {
                let (v, scale) = factors.eval(w);
                assert!((poly.eval(w) - v).abs() <= 1e-9 * scale, "{w}");
            }
        }
    }

    #[test]
    fn line_factor_matches_auxiliaries() {
        let p = case2();
        let factors = PolyFactors::new(&p, Reduction::HalfGain);
        for w in [0.0, 10.0, 315.0] {
            let aux = TwoMachineAux::new(w, &p);
            let m = factors.m.eval(w);
            assert!((m - aux.x * aux.n()).abs() <= 1e-10 * m.abs());
        }
    }

    #[test]
    fn case2_half_gain_roots_include_published_speeds() {
        let roots = positive_real_roots(&assemble_poly18(&case2(), Reduction::HalfGain));
        for target in [315.5902, 309.0166] {
            assert!(roots.iter().any(|r| (r - target).abs() < 1e-3), "{target} not in {roots:?}");
        }
    }

    #[test]
    fn case2_published_speeds_admit_an_angle() {
        let p = case2();
        for w in [315.590186780695, 309.0166150920674] {
            let rec = recover_delta(w, &p, Reduction::HalfGain).unwrap();
            assert!(rec.flags.all(), "{rec:?}");
            assert!(!rec.candidates.is_empty());
        }
    }

    #[test]
    fn balanced_torques_give_zero_product() {
        let p = TwoMachineParams::new(1.0, 9.0, 2800.0, 2800.0, 10.0, 1000.0, 0.041, 0.04, 5.0).unwrap();
        let rec = recover_delta(300.0, &p, Reduction::Exact).unwrap();
        assert_eq!(rec.sin_cos, 0.0);
    }

    #[test]
    fn large_torque_difference_violates_product_bound() {
        let p = TwoMachineParams::new(1.0, 9.0, 100.0, 5000.0, 10.0, 1000.0, 0.041, 0.04, 5.0).unwrap();
        let rec = recover_delta(280.0, &p, Reduction::HalfGain).unwrap();
        assert!(rec.sin_cos.abs() > 0.5);
        assert!(!rec.flags.product_bound);
        assert!(rec.candidates.is_empty());
    }

    #[test]
    fn tabulated_groups_vanish_without_torque_difference() {
        let p = TwoMachineParams::new(1.0, 9.0, 2800.0, 2800.0, 10.0, 1000.0, 0.041, 0.04, 5.0).unwrap();
        assert!(tabulated_coefficients(&p).h.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn tabulated_leading_coefficient() {
        let p = case2();
        let c = tabulated_coefficients(&p);
        let (d, l) = (p.damping, p.inductance);
        let expected = -16.0 * d * d * l.powi(10);
        assert!((c.coefficients[18] - expected).abs() <= 1e-12 * expected.abs());
        assert!((c.coefficients[18] + c.k[8] * c.g[4]).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn tabulated_polynomial_does_not_share_case2_zeros() {
        let p = case2();
        let diag = tabulated_zero_sharing(&p, &[315.590186780695, 309.0166150920674]);
        assert!(!diag.shares_zeros);
        let roots = positive_real_roots(&tabulated_coefficients(&p).poly());
        assert!(!roots.iter().any(|r| (r - 315.5902).abs() < 1e-3 || (r - 309.0166).abs() < 1e-3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn recovered_angles_reproduce_trigonometric_values(
            w in 1.0f64..400.0,
            t1 in 1000.0f64..3000.0,
            t2 in 1000.0f64..3000.0,
        ) {
            let p = TwoMachineParams::new(1.0, 9.0, t1, t2, 10.0, 1000.0, 0.041, 0.04, 5.0).unwrap();
            for reduction in [Reduction::HalfGain, Reduction::Exact] {
                let rec = recover_delta(w, &p, reduction).unwrap();
                prop_assert!((rec.sin_sq + rec.cos_sq - 1.0).abs() < 1e-9);
                for &d in &rec.candidates {
                    prop_assert!((d.sin().powi(2) - rec.sin_sq).abs() < 1e-8);
                    prop_assert!((d.sin() * d.cos() - rec.sin_cos).abs() < 1e-6);
                }
            }
        }
    }
}
