//! Rest points of the two-machine system by polynomial elimination, checked
//! against a seeded Newton multistart on the full eight-unknown system.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::reduction::{recover_delta, reduced_residual, PolyFactors, Reduction, ValidityFlags};
use super::{
    closed_form_currents, equilibrium_residual_two, equilibrium_terms, relative_norm, TwoCurrents, TwoDqState,
    TwoMachineParams,
};
use crate::error::{Error, Result};
use crate::numerics::{
    damped_newton, newton_multistart_with, polynomial_roots, Matrix, NewtonOptions, Poly,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSolveOptions {
    pub reduction: Reduction,
    pub seed: u64,
    /// Run the Newton multistart oracle.
    pub cross_check: bool,
    pub speed_strata: usize,
    pub angle_strata: usize,
    /// Relative residual an accepted equilibrium must meet.
    pub residual_tolerance: f64,
    /// Roots with `|Im| ≤ tol·(1 + |Re|)` count as real.
    pub imaginary_tolerance: f64,
    /// Two equilibria closer than this in `(ω, δ)` are the same.
    pub match_tolerance: f64,
}

impl Default for TwoSolveOptions {
    fn default() -> Self {
        Self {
            reduction: Reduction::HalfGain,
            seed: 0,
            cross_check: true,
            speed_strata: 24,
            angle_strata: 12,
            residual_tolerance: 1e-8,
            imaginary_tolerance: 1e-7,
            match_tolerance: 1e-6,
        }
    }
}

impl TwoSolveOptions {
    pub fn with_reduction(reduction: Reduction) -> Self {
        Self { reduction, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoEquilibrium {
    pub omega: f64,
    /// Load angle in `(−π/2, π/2]`.
    pub delta: f64,
    pub currents: TwoCurrents,
    pub flags: ValidityFlags,
    pub sin_sq: f64,
    pub cos_sq: f64,
    pub sin_cos: f64,
    pub reduction: Reduction,
    /// Relative residual of the system defining this reduction.
    pub residual_norm: f64,
    /// Relative residual of the rest-point equations of the dynamic model.
    pub dynamic_residual_norm: f64,
}

impl TwoEquilibrium {
    pub fn state(&self) -> TwoDqState {
        TwoDqState {
            delta: self.delta,
            omega1: self.omega,
            omega2: self.omega,
            currents: self.currents,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoRejection {
    ComplexRoot,
    NonPositiveSpeed,
    Validity,
    NoAngle,
    Residual,
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedCandidate {
    pub root: Complex64,
    pub reason: TwoRejection,
    pub flags: Option<ValidityFlags>,
    pub residual_norm: Option<f64>,
}

/// Agreement between the polynomial route and the Newton multistart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub starts: usize,
    /// `(ω, δ)` found by Newton.
    pub newton: Vec<(f64, f64)>,
    pub matched: usize,
    pub polynomial_only: Vec<(f64, f64)>,
    pub newton_only: Vec<(f64, f64)>,
    /// Largest distance between matched pairs.
    pub max_matched_distance: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoEquilibria {
    pub reduction: Reduction,
    pub polynomial: Poly,
    pub roots: Vec<Complex64>,
    /// Sorted by increasing speed.
    pub equilibria: Vec<TwoEquilibrium>,
    pub rejected: Vec<RejectedCandidate>,
    pub oracle: Option<OracleComparison>,
}

/// Maps `δ` into `(−π/2, π/2]`, returning whether an odd multiple of `π`
/// was removed (which flips the sign of every dq current).
pub fn canonical_delta(delta: f64) -> (f64, bool) {
    let k = ((delta - FRAC_PI_2) / PI).ceil();
    let mut d = delta - k * PI;
    let mut k = k as i64;
    if d <= -FRAC_PI_2 {
        d += PI;
        k -= 1;
    }
    (d, k.rem_euclid(2) == 1)
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).abs() / a.0.abs().max(b.0.abs()).max(1.0)).max(angle_distance(a.1, b.1))
}

/// Residual rows of the eight equations defining a reduction's rest points,
/// each paired with its largest term.
pub fn defining_residual(
    omega: f64,
    delta: f64,
    currents: &TwoCurrents,
    p: &TwoMachineParams,
    reduction: Reduction,
) -> [(f64, f64); 8] {
    let mut rows = equilibrium_terms(omega, delta, currents, p);
    if reduction == Reduction::HalfGain {
        let [sum, diff] = reduced_residual(omega, delta, p, reduction);
        rows[0] = sum;
        rows[1] = diff;
    }
    rows
}

fn polish_speed(factors: &PolyFactors, derivative: &Poly, omega: f64) -> f64 {
    let mut w = omega;
    let (mut f, _) = factors.eval(w);
    for _ in 0..30 {
        let df = derivative.eval(w);
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let next = w - f / df;
        let (fn_, _) = factors.eval(next);
        if !next.is_finite() || fn_.abs() >= f.abs() {
            break;
        }
        let converged = (next - w).abs() <= 4.0 * f64::EPSILON * w.abs();
        w = next;
        f = fn_;
        if converged {
            break;
        }
    }
    if (w - omega).abs() <= 1e-3 * omega.abs().max(1.0) {
        w
    } else {
        omega
    }
}

fn polish_pair(omega: f64, delta: f64, p: &TwoMachineParams, reduction: Reduction) -> (f64, f64) {
    let scales = reduced_residual(omega, delta, p, reduction).map(|(_, s)| s.max(f64::MIN_POSITIVE));
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let rows = reduced_residual(x[0], x[1], p, reduction);
        Ok(vec![rows[0].0 / scales[0], rows[1].0 / scales[1]])
    };
    let opts = NewtonOptions { tolerance: 1e-14, max_iterations: 20, ..NewtonOptions::default() };
    match damped_newton(&f, &[omega, delta], &opts) {
        Some(sol) if (sol.x[0] - omega).abs() <= 1e-6 * omega.abs().max(1.0) => (sol.x[0], sol.x[1]),
        _ => (omega, delta),
    }
}

fn build_equilibrium(
    omega: f64,
    delta: f64,
    currents: TwoCurrents,
    p: &TwoMachineParams,
    reduction: Reduction,
) -> Result<TwoEquilibrium> {
    let rec = recover_delta(omega, p, reduction)?;
    Ok(TwoEquilibrium {
        omega,
        delta,
        currents,
        flags: rec.flags,
        sin_sq: rec.sin_sq,
        cos_sq: rec.cos_sq,
        sin_cos: rec.sin_cos,
        reduction,
        residual_norm: relative_norm(&defining_residual(omega, delta, &currents, p, reduction)),
        dynamic_residual_norm: equilibrium_residual_two(omega, delta, &currents, p),
    })
}

/// All rest points with positive speed for the chosen reduction.
pub fn solve_two_equilibria(p: &TwoMachineParams, opts: &TwoSolveOptions) -> Result<TwoEquilibria> {
    p.validate()?;
    let reduction = opts.reduction;
    let factors = PolyFactors::new(p, reduction);
    let polynomial = factors.polynomial();

    if p.b() == 0.0 {
        if p.torque_difference() != 0.0 {
            return Ok(TwoEquilibria {
                reduction,
                polynomial,
                roots: Vec::new(),
                equilibria: Vec::new(),
                rejected: Vec::new(),
                oracle: None,
            });
        }
        return Err(Error::DegenerateNetwork(
            "without excitation and with balanced torques the load angle is undetermined".into(),
        ));
    }

    let roots: Vec<Complex64> = polynomial_roots(&polynomial)?.values().to_vec();
    let derivative = polynomial.derivative();
    let mut equilibria: Vec<TwoEquilibrium> = Vec::new();
    let mut rejected = Vec::new();
    let reject = |root, reason, flags, residual_norm| RejectedCandidate { root, reason, flags, residual_norm };

    for &z in &roots {
        if z.im.abs() > opts.imaginary_tolerance * (1.0 + z.re.abs()) {
            rejected.push(reject(z, TwoRejection::ComplexRoot, None, None));
            continue;
        }
        if z.re <= 0.0 {
            rejected.push(reject(z, TwoRejection::NonPositiveSpeed, None, None));
            continue;
        }
        let omega = polish_speed(&factors, &derivative, z.re);
        let rec = match recover_delta(omega, p, reduction) {
            Ok(r) => r,
            Err(_) => {
                rejected.push(reject(z, TwoRejection::Singular, None, None));
                continue;
            }
        };
        if !rec.flags.all() {
            rejected.push(reject(z, TwoRejection::Validity, Some(rec.flags), None));
            continue;
        }
        let mut angles: Vec<f64> = Vec::new();
        for &d in &rec.candidates {
            let (c, _) = canonical_delta(d);
            if !angles.iter().any(|&a| angle_distance(a, c) < 1e-12) {
                angles.push(c);
            }
        }
        if angles.is_empty() {
            rejected.push(reject(z, TwoRejection::NoAngle, Some(rec.flags), None));
            continue;
        }
        for delta in angles {
            let (w, d) = polish_pair(omega, delta, p, reduction);
            let (d, _) = canonical_delta(d);
            let currents = closed_form_currents(w, d, p)?;
            let eq = build_equilibrium(w, d, currents, p, reduction)?;
            if eq.residual_norm > opts.residual_tolerance || !eq.flags.all() {
                rejected.push(reject(z, TwoRejection::Residual, Some(eq.flags), Some(eq.residual_norm)));
                continue;
            }
            let key = (eq.omega, eq.delta);
            if !equilibria.iter().any(|e| distance((e.omega, e.delta), key) <= opts.match_tolerance) {
                equilibria.push(eq);
            }
        }
    }
    equilibria.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.delta.total_cmp(&b.delta)));

    let oracle = if opts.cross_check { Some(newton_oracle(p, opts, &equilibria)) } else { None };
    Ok(TwoEquilibria { reduction, polynomial, roots, equilibria, rejected, oracle })
}

struct Scales {
    torque: f64,
    network: f64,
}

impl Scales {
    fn new(p: &TwoMachineParams) -> Self {
        let w_ref = p.speed_bound().abs().max(1.0);
        Self {
            torque: p.torque1.abs().max(p.torque2.abs()).max(p.damping * w_ref).max(1.0),
            network: (p.b() * w_ref).max(1.0),
        }
    }

    fn row(&self, k: usize) -> f64 {
        if k < 2 {
            self.torque
        } else {
            self.network
        }
    }
}

fn oracle_residual(x: &[f64], p: &TwoMachineParams, reduction: Reduction, scales: &Scales) -> Vec<f64> {
    let currents = TwoCurrents::from_slice(&x[2..8]);
    defining_residual(x[0], x[1], &currents, p, reduction)
        .iter()
        .enumerate()
        .map(|(k, (v, _))| v / scales.row(k))
        .collect()
}

fn oracle_jacobian(x: &[f64], p: &TwoMachineParams, reduction: Reduction, scales: &Scales) -> Matrix {
    let (w, delta) = (x[0], x[1]);
    let c = TwoCurrents::from_slice(&x[2..8]);
    let (s, co) = delta.sin_cos();
    let (r, rl, b, d) = (p.resistance(), p.load_resistance, p.b(), p.damping);
    let (l, l3) = (p.inductance, p.line_inductance);
    let (lw, l3w) = (l * w, l3 * w);
    // Unknowns: ω, δ, i_d1, i_q1, i_d2, i_q2, i_d3, i_q3.
    let mut j = Matrix::zeros(8, 8);
    let mut set = |row: usize, entries: &[(usize, f64)]| {
        for &(col, v) in entries {
            j[(row, col)] = v / scales.row(row);
        }
    };
    match reduction {
        Reduction::Exact => {
            set(0, &[(0, -d), (1, b * (co * c.i_d1 + s * c.i_q1)), (2, b * s), (3, -b * co)]);
            set(1, &[(0, -d), (1, b * (-co * c.i_d2 + s * c.i_q2)), (4, -b * s), (5, -b * co)]);
        }
        Reduction::HalfGain => {
            let hw = 1e-7 * w.abs().max(1.0);
            let hd = 1e-7;
            let at = |w: f64, dl: f64| reduced_residual(w, dl, p, reduction);
            let (wp, wm) = (at(w + hw, delta), at(w - hw, delta));
            let (dp, dm) = (at(w, delta + hd), at(w, delta - hd));
            for k in 0..2 {
                set(k, &[((0), (wp[k].0 - wm[k].0) / (2.0 * hw)), (1, (dp[k].0 - dm[k].0) / (2.0 * hd))]);
            }
        }
    }
    set(2, &[(0, -b * s - l * c.i_q1), (1, -b * co * w), (2, -r), (3, -lw), (6, rl)]);
    set(3, &[(0, b * s - l * c.i_q2), (1, b * co * w), (4, -r), (5, -lw), (6, -rl)]);
    set(4, &[(0, b * co + l * c.i_d1), (1, -b * s * w), (2, lw), (3, -r), (7, rl)]);
    set(5, &[(0, b * co + l * c.i_d2), (1, -b * s * w), (4, lw), (5, -r), (7, -rl)]);
    set(6, &[(0, -l3 * c.i_q3), (2, rl), (4, -rl), (6, -2.0 * rl), (7, -l3w)]);
    set(7, &[(0, l3 * c.i_d3), (3, rl), (5, -rl), (6, l3w), (7, -2.0 * rl)]);
    j
}

fn newton_oracle(p: &TwoMachineParams, opts: &TwoSolveOptions, poly_eq: &[TwoEquilibrium]) -> OracleComparison {
    let reduction = opts.reduction;
    let scales = Scales::new(p);
    let w_max = 1.05 * p.speed_bound();
    let mut starts = Vec::new();
    if w_max > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for i in 0..opts.speed_strata {
            for k in 0..opts.angle_strata {
                let w = w_max * (i as f64 + rng.gen::<f64>()) / opts.speed_strata as f64;
                let d = -FRAC_PI_2 + PI * (k as f64 + rng.gen::<f64>()) / opts.angle_strata as f64;
                let c = closed_form_currents(w, d, p).unwrap_or_default();
                let mut x = vec![w, d];
                x.extend_from_slice(&c.to_array());
                starts.push(x);
            }
        }
    }
    let residual = |x: &[f64]| -> Result<Vec<f64>> { Ok(oracle_residual(x, p, reduction, &scales)) };
    let jacobian = |x: &[f64]| -> Result<Matrix> { Ok(oracle_jacobian(x, p, reduction, &scales)) };
    let nopts = NewtonOptions { tolerance: 1e-12, max_iterations: 60, ..NewtonOptions::default() };
    let sols = newton_multistart_with(&residual, &jacobian, &starts, &nopts);

    let mut newton: Vec<(f64, f64)> = Vec::new();
    for sol in sols {
        let w = sol.x[0];
        if w <= 0.0 {
            continue;
        }
        let (d, flipped) = canonical_delta(sol.x[1]);
        let mut c = TwoCurrents::from_slice(&sol.x[2..8]);
        if flipped {
            c = c.negated();
        }
        if relative_norm(&defining_residual(w, d, &c, p, reduction)) > opts.residual_tolerance {
            continue;
        }
        if !newton.iter().any(|&q| distance(q, (w, d)) <= opts.match_tolerance) {
            newton.push((w, d));
        }
    }
    newton.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let poly: Vec<(f64, f64)> = poly_eq.iter().map(|e| (e.omega, e.delta)).collect();
    let nearest = |x: (f64, f64), set: &[(f64, f64)]| set.iter().map(|&y| distance(x, y)).fold(f64::INFINITY, f64::min);
    let mut matched = 0;
    let mut max_matched_distance: f64 = 0.0;
    let mut polynomial_only = Vec::new();
    for &x in &poly {
        let dist = nearest(x, &newton);
        if dist <= opts.match_tolerance {
            matched += 1;
            max_matched_distance = max_matched_distance.max(dist);
        } else {
            polynomial_only.push(x);
        }
    }
    let newton_only: Vec<(f64, f64)> =
        newton.iter().copied().filter(|&x| nearest(x, &poly) > opts.match_tolerance).collect();
    let agree = polynomial_only.is_empty() && newton_only.is_empty();
    OracleComparison {
        starts: starts.len(),
        newton,
        matched,
        polynomial_only,
        newton_only,
        max_matched_distance,
        agree,
    }
}
