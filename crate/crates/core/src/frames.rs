//! Rotating-frame (dq) transform, back-EMF and electrical torque.
//!
//! The transform is the power-invariant 2×3 matrix
//!
//! ```text
//! U(η) = √(2/3) · [ cos η   cos(η − 2π/3)   cos(η − 4π/3) ]
//!                 [ sin η   sin(η − 2π/3)   sin(η − 4π/3) ]
//! ```
//!
//! with no zero-sequence row: any common-mode component of a three-phase
//! vector is discarded by [`abc_to_dq`]. Angles are never wrapped.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const PHASE_SHIFTS: [f64; 3] = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];

/// `√(3/2)`, the gain between `M_f·i_f` and the excitation constant `b`.
pub const EXCITATION_GAIN: f64 = 1.224_744_871_391_589;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorKinematics {
    /// Electrical rotor angle [rad].
    pub theta: f64,
    /// Rotor angular velocity [rad/s].
    pub omega: f64,
}

/// Field excitation. `b` is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationParams {
    /// Stator–rotor mutual inductance `M_f` [H].
    pub mutual_inductance: f64,
    /// Constant rotor (field) current `i_f` [A].
    pub rotor_current: f64,
}

impl ExcitationParams {
    pub fn new(mutual_inductance: f64, rotor_current: f64) -> Self {
        Self {
            mutual_inductance,
            rotor_current,
        }
    }

    /// Excitation with the given `b`, taking `i_f = 1`.
    pub fn from_b(b: f64) -> Self {
        Self::new(b / EXCITATION_GAIN, 1.0)
    }

    /// Flux linkage amplitude `M_f·i_f`.
    pub fn flux(&self) -> f64 {
        self.mutual_inductance * self.rotor_current
    }

    /// Excitation constant `b = √(3/2)·M_f·i_f` [V·s/rad].
    pub fn b(&self) -> f64 {
        EXCITATION_GAIN * self.flux()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThreePhaseVector {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ThreePhaseVector {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.a * other.a + self.b * other.b + self.c * other.c
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Zero-sequence sum `a + b + c`.
    pub fn sum(&self) -> f64 {
        self.a + self.b + self.c
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DqVector {
    pub d: f64,
    pub q: f64,
}

impl DqVector {
    pub fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.d * other.d + self.q * other.q
    }

    pub fn norm(&self) -> f64 {
        self.d.hypot(self.q)
    }

    /// Quarter-turn rotation `[[0, −1], [1, 0]]·v`.
    pub fn rotate_quarter(&self) -> Self {
        Self::new(-self.q, self.d)
    }
}

fn finite_angle(eta: f64) -> Result<()> {
    if eta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("transform angle"))
    }
}

/// `U(η)` as two rows of three.
pub fn dq_matrix(eta: f64) -> Result<[[f64; 3]; 2]> {
    finite_angle(eta)?;
    let k = (2.0f64 / 3.0).sqrt();
    let mut u = [[0.0; 3]; 2];
    for (j, shift) in PHASE_SHIFTS.iter().enumerate() {
        let (s, c) = (eta - shift).sin_cos();
        u[0][j] = k * c;
        u[1][j] = k * s;
    }
    Ok(u)
}

pub fn abc_to_dq(eta: f64, v: ThreePhaseVector) -> Result<DqVector> {
    if !v.is_finite() {
        return Err(Error::NonFinite("three-phase vector"));
    }
    let u = dq_matrix(eta)?;
    let x = v.to_array();
    let row = |r: &[f64; 3]| r[0] * x[0] + r[1] * x[1] + r[2] * x[2];
    Ok(DqVector::new(row(&u[0]), row(&u[1])))
}

pub fn dq_to_abc(eta: f64, v: DqVector) -> Result<ThreePhaseVector> {
    if !(v.d.is_finite() && v.q.is_finite()) {
        return Err(Error::NonFinite("dq vector"));
    }
    let u = dq_matrix(eta)?;
    let col = |j: usize| u[0][j] * v.d + u[1][j] * v.q;
    Ok(ThreePhaseVector::new(col(0), col(1), col(2)))
}

/// Stator EMF `M_f·i_f·ω·(sin θ, sin(θ − 2π/3), sin(θ − 4π/3))`.
pub fn back_emf(kin: RotorKinematics, exc: ExcitationParams) -> ThreePhaseVector {
    let amp = exc.flux() * kin.omega;
    let s = |k: usize| amp * (kin.theta - PHASE_SHIFTS[k]).sin();
    ThreePhaseVector::new(s(0), s(1), s(2))
}

/// Electrical torque `ω⁻¹·eᵀi`.
pub fn electrical_torque(e: ThreePhaseVector, i: ThreePhaseVector, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::SingularVelocity(omega));
    }
    Ok(e.dot(&i) / omega)
}

/// Largest deviation from the rotating-frame derivative identity
/// `d(U i)/dt = η̇·[[0,−1],[1,0]]·U i + U·di/dt` along a sampled trajectory.
///
/// All derivatives are central differences with the uniform step `h`, so the
/// result is `O(h²)` for smooth inputs.
pub fn dq_derivative_identity_check(
    eta: &[f64],
    i_abc: &[ThreePhaseVector],
    h: f64,
) -> Result<f64> {
    if eta.len() != i_abc.len() {
        return Err(Error::InvalidParameter(format!(
            "angle and current series differ in length ({} vs {})",
            eta.len(),
            i_abc.len()
        )));
    }
    if eta.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 samples, got {}",
            eta.len()
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let dq: Vec<DqVector> = eta
        .iter()
        .zip(i_abc)
        .map(|(&e, &i)| abc_to_dq(e, i))
        .collect::<Result<_>>()?;

    let mut worst: f64 = 0.0;
    for k in 1..eta.len() - 1 {
        let lhs = DqVector::new(
            (dq[k + 1].d - dq[k - 1].d) / (2.0 * h),
            (dq[k + 1].q - dq[k - 1].q) / (2.0 * h),
        );
        let eta_dot = (eta[k + 1] - eta[k - 1]) / (2.0 * h);
        let di = ThreePhaseVector::new(
            (i_abc[k + 1].a - i_abc[k - 1].a) / (2.0 * h),
            (i_abc[k + 1].b - i_abc[k - 1].b) / (2.0 * h),
            (i_abc[k + 1].c - i_abc[k - 1].c) / (2.0 * h),
        );
        let rot = dq[k].rotate_quarter();
        let udi = abc_to_dq(eta[k], di)?;
        let dev = (lhs.d - eta_dot * rot.d - udi.d).hypot(lhs.q - eta_dot * rot.q - udi.q);
        worst = worst.max(dev);
    }
    Ok(worst)
}
