//! A synchronous generator feeding a series R-L load.
//!
//! In the rotor frame the model is
//!
//! ```text
//! θ̇   = ω
//! J ω̇ = −D ω − b i_q + T_m
//! L i̇_d = −R i_d − L ω i_q
//! L i̇_q =  L ω i_d − R i_q + b ω
//! ```
//!
//! Its rest points are the positive roots of the cubic
//! `D L² ω³ − T_m L² ω² + (b² R + D R²) ω − T_m R² = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::frames::{
    abc_to_dq, back_emf, dq_to_abc, electrical_torque, DqVector, ExcitationParams,
    RotorKinematics, ThreePhaseVector,
};
use crate::numerics::{eigenvalues, Matrix, Poly};
use crate::{Error, Result};

/// Real parts inside `±MARGINAL_BAND` count as neither stable nor unstable.
pub const MARGINAL_BAND: f64 = 1e-9;

/// Relative tolerance for the equilibrium residual check.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleMachineParams {
    /// Rotor inertia `J` [kg·m²].
    pub inertia: f64,
    /// Damping `D` [N·m·s/rad].
    pub damping: f64,
    /// Mechanical input torque `T_m` [N·m].
    pub torque: f64,
    /// Total series resistance `R` [Ω].
    pub resistance: f64,
    /// Total series inductance `L` [H].
    pub inductance: f64,
    pub excitation: ExcitationParams,
}

/// Individual circuit elements; the model only sees their series sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCircuit {
    pub stator_resistance: f64,
    pub line_resistance: f64,
    pub load_resistance: f64,
    pub stator_inductance: f64,
    pub line_inductance: f64,
}

impl SeriesCircuit {
    pub fn resistance(&self) -> f64 {
        self.stator_resistance + self.line_resistance + self.load_resistance
    }

    pub fn inductance(&self) -> f64 {
        self.stator_inductance + self.line_inductance
    }
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v > 0.0, || format!("{name} must be positive (got {v})"))
}

pub(crate) fn non_negative(name: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v >= 0.0, || format!("{name} must be non-negative (got {v})"))
}

impl SingleMachineParams {
    /// Validated parameters with `b` given directly.
    pub fn new(inertia: f64, damping: f64, torque: f64, resistance: f64, inductance: f64, b: f64) -> Result<Self> {
        Self::with_excitation(inertia, damping, torque, resistance, inductance, ExcitationParams::from_b(b))
    }

    pub fn with_excitation(
        inertia: f64,
        damping: f64,
        torque: f64,
        resistance: f64,
        inductance: f64,
        excitation: ExcitationParams,
    ) -> Result<Self> {
        let p = Self {
            inertia,
            damping,
            torque,
            resistance,
            inductance,
            excitation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_circuit(inertia: f64, damping: f64, torque: f64, circuit: SeriesCircuit, excitation: ExcitationParams) -> Result<Self> {
        for (name, v) in [
            ("R_s", circuit.stator_resistance),
            ("R_l", circuit.line_resistance),
            ("R_L", circuit.load_resistance),
            ("L_s", circuit.stator_inductance),
            ("L_l", circuit.line_inductance),
        ] {
            non_negative(name, v)?;
        }
        Self::with_excitation(inertia, damping, torque, circuit.resistance(), circuit.inductance(), excitation)
    }

    pub fn validate(&self) -> Result<()> {
        positive("J", self.inertia)?;
        positive("D", self.damping)?;
        non_negative("T_m", self.torque)?;
        positive("R", self.resistance)?;
        positive("L", self.inductance)?;
        non_negative("M_f", self.excitation.mutual_inductance)?;
        non_negative("i_f", self.excitation.rotor_current)?;
        Ok(())
    }

    pub fn b(&self) -> f64 {
        self.excitation.b()
    }

    /// `R² + L²ω²`, the squared load impedance at speed `ω`.
    pub fn impedance_sq(&self, omega: f64) -> f64 {
        self.resistance.powi(2) + (self.inductance * omega).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SingleDqState {
    pub theta: f64,
    pub omega: f64,
    pub i_d: f64,
    pub i_q: f64,
}

impl SingleDqState {
    pub const NAMES: [&'static str; 4] = ["theta", "omega", "i_d", "i_q"];

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.theta, self.omega, self.i_d, self.i_q]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            theta: x[0],
            omega: x[1],
            i_d: x[2],
            i_q: x[3],
        }
    }

    /// The same physical state in stator coordinates.
    pub fn to_abc(&self) -> Result<SingleAbcState> {
        Ok(SingleAbcState {
            theta: self.theta,
            omega: self.omega,
            i_abc: dq_to_abc(self.theta, DqVector::new(self.i_d, self.i_q))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SingleAbcState {
    pub theta: f64,
    pub omega: f64,
    pub i_abc: ThreePhaseVector,
}

impl SingleAbcState {
    pub const NAMES: [&'static str; 5] = ["theta", "omega", "i_a", "i_b", "i_c"];

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.theta, self.omega, self.i_abc.a, self.i_abc.b, self.i_abc.c]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            theta: x[0],
            omega: x[1],
            i_abc: ThreePhaseVector::from_slice(&x[2..5]),
        }
    }

    /// Projection onto the rotor frame (`η = θ`).
    pub fn to_dq(&self) -> Result<SingleDqState> {
        let dq = abc_to_dq(self.theta, self.i_abc)?;
        Ok(SingleDqState {
            theta: self.theta,
            omega: self.omega,
            i_d: dq.d,
            i_q: dq.q,
        })
    }
}

/// Stator-frame dynamics. Fails at `ω = 0`, where the torque is undefined.
pub fn rhs_abc_single(s: &SingleAbcState, p: &SingleMachineParams) -> Result<SingleAbcState> {
    let e = back_emf(RotorKinematics { theta: s.theta, omega: s.omega }, p.excitation);
    let te = electrical_torque(e, s.i_abc, s.omega)?;
    let di = |i: f64, e: f64| (-p.resistance * i + e) / p.inductance;
    Ok(SingleAbcState {
        theta: s.omega,
        omega: (-p.damping * s.omega - te + p.torque) / p.inertia,
        i_abc: ThreePhaseVector::new(di(s.i_abc.a, e.a), di(s.i_abc.b, e.b), di(s.i_abc.c, e.c)),
    })
}

/// Rotor-frame dynamics.
pub fn rhs_dq_single(s: &SingleDqState, p: &SingleMachineParams) -> SingleDqState {
    let (r, l, b) = (p.resistance, p.inductance, p.b());
    SingleDqState {
        theta: s.omega,
        omega: (-p.damping * s.omega - b * s.i_q + p.torque) / p.inertia,
        i_d: (-r * s.i_d - l * s.omega * s.i_q) / l,
        i_q: (l * s.omega * s.i_d - r * s.i_q + b * s.omega) / l,
    }
}

/// The equilibrium cubic in `ω`, coefficients ascending:
/// `[−T_m R², b² R + D R², −T_m L², D L²]`.
pub fn equilibrium_cubic(p: &SingleMachineParams) -> Poly {
    let (r, l, d, t, b) = (p.resistance, p.inductance, p.damping, p.torque, p.b());
    Poly::new(vec![-t * r * r, b * b * r + d * r * r, -t * l * l, d * l * l])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootClass {
    /// `Δ > 0`: one real root and a complex pair.
    OneReal,
    /// `Δ = 0` within tolerance: all real, at least two equal.
    RepeatedReal,
    /// `Δ < 0`.
    ThreeDistinctReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSolve {
    /// Ascending coefficients of the solved cubic.
    pub coefficients: [f64; 4],
    /// `x = y + shift` removes the quadratic term.
    pub shift: f64,
    /// Depressed cubic `y³ + p y + q`.
    pub p: f64,
    pub q: f64,
    /// `(q/2)² + (p/3)³`.
    pub discriminant: f64,
    /// First-order sensitivity of `discriminant` to the rounding of its
    /// inputs, in the same units.
    pub discriminant_scale: f64,
    pub class: RootClass,
    /// Distinct real roots, ascending.
    pub roots: Vec<f64>,
    /// The complex pair when `class` is `OneReal`.
    pub complex_pair: Option<(Complex64, Complex64)>,
}

impl CubicSolve {
    /// Roots of the depressed cubic, `root − shift`.
    pub fn depressed_roots(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r - self.shift).collect()
    }

    /// `|Δ|` below this counts as zero: `1e-10·s³` with
    /// `s = max(|p|, |q|^(2/3))`.
    pub fn repeated_root_tolerance(p: f64, q: f64) -> f64 {
        let scale = p.abs().max(q.abs().powf(2.0 / 3.0));
        1e-10 * scale.powi(3)
    }
}

/// Cardano's method with complex completion for three real roots.
///
/// Each real root gets two Newton steps on the original cubic, kept only when
/// they reduce the residual.
pub fn solve_cubic_cardano(c: &Poly) -> Result<CubicSolve> {
    if c.degree() != 3 {
        return Err(Error::InvalidParameter(format!("expected a cubic, got degree {}", c.degree())));
    }
    let k = c.coeffs();
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cubic coefficients"));
    }
    if k[3] <= 0.0 {
        return Err(Error::InvalidParameter("cubic leading coefficient must be positive".into()));
    }
    let (a2, a1, a0) = (k[2] / k[3], k[1] / k[3], k[0] / k[3]);
    let shift = -a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2.powi(3) / 27.0 - a2 * a1 / 3.0 + a0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let p_terms = a1.abs() + a2 * a2 / 3.0;
    let q_terms = 2.0 * a2.abs().powi(3) / 27.0 + (a2 * a1).abs() / 3.0 + a0.abs();
    let discriminant_scale = q.abs() / 2.0 * q_terms + (p / 3.0).powi(2) * p_terms;
    let tol = CubicSolve::repeated_root_tolerance(p, q);

    let mut complex_pair = None;
    let (class, mut ys) = if disc.abs() <= tol {
        let u = (-q / 2.0).cbrt();
        (RootClass::RepeatedReal, vec![2.0 * u, -u])
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        let re = -(u + v) / 2.0 + shift;
        let im = 3f64.sqrt() / 2.0 * (u - v);
        complex_pair = Some((Complex64::new(re, im), Complex64::new(re, -im)));
        (RootClass::OneReal, vec![u + v])
    } else {
        let u = Complex64::new(-q / 2.0, (-disc).sqrt()).powf(1.0 / 3.0);
        let ys = (0..3)
            .map(|j| {
                let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 3.0);
                2.0 * (u * rot).re
            })
            .collect();
        (RootClass::ThreeDistinctReal, ys)
    };

    let dc = c.derivative();
    let mut roots: Vec<f64> = ys
        .drain(..)
        .map(|y| {
            let mut x = y + shift;
            for _ in 0..2 {
                let (f, d) = (c.eval(x), dc.eval(x));
                if d == 0.0 {
                    break;
                }
                let trial = x - f / d;
                if c.eval(trial).abs() < f.abs() {
                    x = trial;
                }
            }
            x
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));

    Ok(CubicSolve {
        coefficients: [k[0], k[1], k[2], k[3]],
        shift,
        p,
        q,
        discriminant: disc,
        discriminant_scale,
        class,
        roots,
        complex_pair,
    })
}

/// `Δ` written directly in the machine parameters.
///
/// Returns the value and the sum of absolute numerator terms divided by the
/// same denominator, a scale for comparing against the `p, q` route.
pub fn discriminant_closed_form(p: &SingleMachineParams) -> (f64, f64) {
    let (r, l, d, t) = (p.resistance, p.inductance, p.damping, p.torque);
    let k = p.b().powi(2) / r;
    let den = 108.0 * d.powi(4) * l.powi(6);
    let terms = [
        4.0 * t.powi(4) * r * r * l.powi(4),
        t * t * r.powi(4) * l * l * 8.0 * d * d,
        -t * t * r.powi(4) * l * l * k * k,
        -t * t * r.powi(4) * l * l * 20.0 * k * d,
        4.0 * r.powi(6) * d * (k + d).powi(3),
    ];
    let value = terms.iter().sum::<f64>() / den;
    let scale = terms.iter().map(|v| v.abs()).sum::<f64>() / den;
    (value, scale)
}

/// `(i_d, i_q)` at a rest point with speed `omega`.
pub fn equilibrium_currents_single(omega: f64, p: &SingleMachineParams) -> (f64, f64) {
    let r = p.resistance;
    let i_q = p.b() * omega * r / p.impedance_sq(omega);
    let i_d = -(p.inductance * omega / r) * i_q;
    (i_d, i_q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleEquilibrium {
    pub omega: f64,
    pub i_d: f64,
    pub i_q: f64,
    /// `‖r‖∞ / max(1, T_m, bω)` over the three rest-point equations.
    pub residual_norm: f64,
}

impl SingleEquilibrium {
    pub fn state(&self, theta: f64) -> SingleDqState {
        SingleDqState {
            theta,
            omega: self.omega,
            i_d: self.i_d,
            i_q: self.i_q,
        }
    }
}

/// Residuals of the three rest-point equations at `(ω, i_d, i_q)`.
pub fn equilibrium_residual(omega: f64, i_d: f64, i_q: f64, p: &SingleMachineParams) -> [f64; 3] {
    let (r, l, b) = (p.resistance, p.inductance, p.b());
    [
        -p.damping * omega - b * i_q + p.torque,
        -r * i_d - l * omega * i_q,
        l * omega * i_d - r * i_q + b * omega,
    ]
}

fn relative_residual(omega: f64, i_d: f64, i_q: f64, p: &SingleMachineParams) -> f64 {
    let res = equilibrium_residual(omega, i_d, i_q, p);
    let scale = 1f64.max(p.torque).max((p.b() * omega).abs());
    res.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectionReason {
    NonPositiveSpeed,
    ComplexRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectedRoot {
    pub root: Complex64,
    pub reason: RejectionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleEquilibria {
    /// Ascending in speed.
    pub equilibria: Vec<SingleEquilibrium>,
    pub rejected: Vec<RejectedRoot>,
    pub cubic: CubicSolve,
    /// `Δ` from the parameter-level closed form.
    pub discriminant_closed_form: f64,
}

/// All rest points with positive speed.
pub fn solve_single_equilibria(p: &SingleMachineParams) -> Result<SingleEquilibria> {
    p.validate()?;
    let cubic = solve_cubic_cardano(&equilibrium_cubic(p))?;

    let (closed, closed_scale) = discriminant_closed_form(p);
    let scale = closed_scale.max(cubic.discriminant_scale).max(f64::MIN_POSITIVE);
    if (closed - cubic.discriminant).abs() > 1e-9 * scale {
        return Err(Error::Inconsistency(format!(
            "discriminant mismatch: p,q route {:e}, closed form {:e}",
            cubic.discriminant, closed
        )));
    }

    let mut equilibria = Vec::new();
    let mut rejected = Vec::new();
    for &omega in &cubic.roots {
        if omega <= 0.0 {
            rejected.push(RejectedRoot {
                root: Complex64::new(omega, 0.0),
                reason: RejectionReason::NonPositiveSpeed,
            });
            continue;
        }
        let (i_d, i_q) = equilibrium_currents_single(omega, p);
        let residual_norm = relative_residual(omega, i_d, i_q, p);
        if !(residual_norm <= RESIDUAL_TOLERANCE) {
            return Err(Error::Inconsistency(format!(
                "rest point at omega = {omega} has relative residual {residual_norm:e}"
            )));
        }
        equilibria.push(SingleEquilibrium {
            omega,
            i_d,
            i_q,
            residual_norm,
        });
    }
    if let Some((z1, z2)) = cubic.complex_pair {
        for root in [z1, z2] {
            rejected.push(RejectedRoot {
                root,
                reason: RejectionReason::ComplexRoot,
            });
        }
    }
    Ok(SingleEquilibria {
        equilibria,
        rejected,
        cubic,
        discriminant_closed_form: closed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// Symmetric matrix of the energy-function derivative in
    /// `(ω̃, ĩ_d, ĩ_q)`.
    pub q_matrix: [[f64; 3]; 3],
    /// Leading principal minors of `Q`, orders 1 to 3.
    pub minors: [f64; 3],
    /// `m₁ ≤ 0`, `m₂ ≥ 0`, `m₃ ≤ 0`.
    pub minor_conditions: [bool; 3],
    /// `(L²/4R)(i_q² + i_d²)`.
    pub current_form_bound: f64,
    /// `(b²/4R)·L²ω²/(R² + L²ω²)`; equal to the current form.
    pub speed_form_bound: f64,
    /// `D ≥ bound`.
    pub holds: bool,
}

pub fn lyapunov_check(eq: &SingleEquilibrium, p: &SingleMachineParams) -> Result<LyapunovReport> {
    let (r, l, d, b) = (p.resistance, p.inductance, p.damping, p.b());
    let (i_d, i_q, w) = (eq.i_d, eq.i_q, eq.omega);
    let q_matrix = [
        [-d, -l * i_q / 2.0, l * i_d / 2.0],
        [-l * i_q / 2.0, -r, 0.0],
        [l * i_d / 2.0, 0.0, -r],
    ];
    let m1 = -d;
    let m2 = d * r - (l * i_q / 2.0).powi(2);
    let m3 = -d * r * r + l * l * r / 4.0 * (i_q * i_q + i_d * i_d);
    let current_form_bound = l * l / (4.0 * r) * (i_q * i_q + i_d * i_d);
    let speed_form_bound = b * b / (4.0 * r) * (l * l * w * w / p.impedance_sq(w));
    if (current_form_bound - speed_form_bound).abs() > 1e-9 * current_form_bound.max(speed_form_bound).max(1e-300) {
        return Err(Error::Inconsistency(format!(
            "Lyapunov bound forms disagree: {current_form_bound:e} vs {speed_form_bound:e}"
        )));
    }
    Ok(LyapunovReport {
        q_matrix,
        minors: [m1, m2, m3],
        minor_conditions: [m1 <= 0.0, m2 >= 0.0, m3 <= 0.0],
        current_form_bound,
        speed_form_bound,
        holds: d >= speed_form_bound,
    })
}

/// Which small-signal matrix to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearizationVariant {
    /// Jacobian of the rotor-frame model: row 2 starts `−i_q`, row 3 starts
    /// `b/L + i_d`. Its characteristic polynomial is the one the Routh–Hurwitz
    /// coefficients describe.
    #[default]
    Derived,
    /// First column `(−D/J, −i_q/L, (b + i_d)/L)`, kept for comparison.
    AsPrinted,
}

/// Small-signal matrix in `(ω̃, ĩ_d, ĩ_q)`.
pub fn linearize_single(eq: &SingleEquilibrium, p: &SingleMachineParams, variant: LinearizationVariant) -> Matrix {
    let (r, l, d, j, b) = (p.resistance, p.inductance, p.damping, p.inertia, p.b());
    let (i_d, i_q, w) = (eq.i_d, eq.i_q, eq.omega);
    let (c21, c31) = match variant {
        LinearizationVariant::Derived => (-i_q, b / l + i_d),
        LinearizationVariant::AsPrinted => (-i_q / l, (b + i_d) / l),
    };
    Matrix::from_rows(&[
        [-d / j, 0.0, -b / j],
        [c21, -r / l, -w],
        [c31, w, -r / l],
    ])
}

/// `(a₂, a₁, a₀)` of `λ³ + a₂λ² + a₁λ + a₀ = det(λI − A)` for a 3×3 `A`.
pub fn characteristic_coefficients(a: &Matrix) -> [f64; 3] {
    let tr = a.trace();
    let a2m = a * a;
    let det = a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
        - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
        + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)]);
    [-tr, (tr * tr - a2m.trace()) / 2.0, -det]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouthReport {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    /// `a₂ > 0`, `a₁ > 0`, `a₀ > 0`, `a₂a₁ > a₀`.
    pub conditions: [bool; 4],
    pub stable: bool,
}

pub fn routh_hurwitz_single(eq: &SingleEquilibrium, p: &SingleMachineParams) -> RouthReport {
    let (r, l, d, j, b) = (p.resistance, p.inductance, p.damping, p.inertia, p.b());
    let w = eq.omega;
    let z = p.impedance_sq(w);
    let a2 = 2.0 * r / l + d / j;
    let a1 = r * r / (l * l) + w * w + 2.0 * r * d / (l * j) + b * b * r * r / (j * l * z);
    let a0 = d * z / (j * l * l) + b * b * r * (r * r - l * l * w * w) / (j * l * l * z);
    let conditions = [a2 > 0.0, a1 > 0.0, a0 > 0.0, a2 * a1 > a0];
    RouthReport {
        a2,
        a1,
        a0,
        conditions,
        stable: conditions.iter().all(|&c| c),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleClassification {
    LyapunovStable,
    LinearlyStable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleStabilityReport {
    pub equilibrium: SingleEquilibrium,
    pub lyapunov: LyapunovReport,
    pub routh: RouthReport,
    pub variant: LinearizationVariant,
    pub linearization: Matrix,
    /// Characteristic coefficients of `linearization` itself.
    pub matrix_coefficients: [f64; 3],
    pub eigenvalues: Vec<Complex64>,
    pub max_real_eigenvalue: f64,
    /// Whether the Routh–Hurwitz verdict matches the eigenvalue signs.
    pub routh_matches_eigenvalues: bool,
    pub classification: SingleClassification,
}

/// Lyapunov, Routh–Hurwitz and eigenvalue tests at one rest point.
///
/// With the derived linearization a disagreement between the Routh–Hurwitz
/// verdict and the eigenvalues (outside the marginal band) is an error.
pub fn stability_single(
    eq: &SingleEquilibrium,
    p: &SingleMachineParams,
    variant: LinearizationVariant,
) -> Result<SingleStabilityReport> {
    let lyapunov = lyapunov_check(eq, p)?;
    let routh = routh_hurwitz_single(eq, p);
    let linearization = linearize_single(eq, p, variant);
    let spectrum = eigenvalues(&linearization)?;
    let max_real = spectrum.max_real();
    let marginal = max_real.abs() < MARGINAL_BAND;
    let eig_stable = max_real < -MARGINAL_BAND;
    let routh_matches_eigenvalues = marginal || eig_stable == routh.stable;
    if !routh_matches_eigenvalues && variant == LinearizationVariant::Derived {
        return Err(Error::Inconsistency(format!(
            "Routh-Hurwitz says {} but max Re(lambda) = {max_real:e} at omega = {}",
            if routh.stable { "stable" } else { "unstable" },
            eq.omega
        )));
    }
    let classification = if lyapunov.holds {
        SingleClassification::LyapunovStable
    } else if marginal {
        SingleClassification::Inconclusive
    } else if eig_stable {
        SingleClassification::LinearlyStable
    } else {
        SingleClassification::Unstable
    };
    Ok(SingleStabilityReport {
        equilibrium: *eq,
        lyapunov,
        routh,
        variant,
        matrix_coefficients: characteristic_coefficients(&linearization),
        linearization,
        eigenvalues: spectrum.values().to_vec(),
        max_real_eigenvalue: max_real,
        routh_matches_eigenvalues,
        classification,
    })
}
