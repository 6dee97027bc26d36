//! Two identical machines tied through a line inductance, each with a
//! co-located resistive load.
//!
//! The dq model uses the mean speed `ω = (ω₁ + ω₂)/2`, the mean angle
//! `η = (θ₁ + θ₂)/2` as frame angle and the half difference
//! `δ = (θ₂ − θ₁)/2`.

mod reduction;
mod solve;
mod stability;

pub use reduction::{
    tabulated_coefficients, tabulated_zero_sharing, assemble_poly18, recover_delta, reduced_residual,
    TabulatedDiagnostic, DeltaRecovery, PolyCoefficients18, PolyFactors, Reduction, ValidityFlags,
};
pub use solve::{
    canonical_delta, defining_residual, solve_two_equilibria, OracleComparison, RejectedCandidate,
    TwoEquilibria, TwoEquilibrium, TwoRejection, TwoSolveOptions,
};
pub use stability::{
    eigen_stability_two, jacobian_two, jacobian_two_at, stability_two, TwoJacobian, TwoStabilityReport,
    TwoVerdict, MARGINAL_EPSILON,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{
    abc_to_dq, back_emf, dq_to_abc, electrical_torque, DqVector, ExcitationParams, RotorKinematics,
    ThreePhaseVector,
};
use crate::numerics::Matrix;
use crate::single::{non_negative, positive, require};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoMachineParams {
    pub inertia: f64,
    pub damping: f64,
    pub torque1: f64,
    pub torque2: f64,
    pub stator_resistance: f64,
    pub load_resistance: f64,
    pub inductance: f64,
    pub line_inductance: f64,
    pub excitation: ExcitationParams,
}

impl TwoMachineParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        inertia: f64,
        damping: f64,
        torque1: f64,
        torque2: f64,
        stator_resistance: f64,
        load_resistance: f64,
        inductance: f64,
        line_inductance: f64,
        b: f64,
    ) -> Result<Self> {
        let p = Self {
            inertia,
            damping,
            torque1,
            torque2,
            stator_resistance,
            load_resistance,
            inductance,
            line_inductance,
            excitation: ExcitationParams::from_b(b),
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds from the total series resistance `R = R_s + R_L`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_total_resistance(
        inertia: f64,
        damping: f64,
        torque1: f64,
        torque2: f64,
        resistance: f64,
        load_resistance: f64,
        inductance: f64,
        line_inductance: f64,
        b: f64,
    ) -> Result<Self> {
        require(resistance >= load_resistance, || {
            format!("R must be at least R_L (got R = {resistance}, R_L = {load_resistance})")
        })?;
        Self::new(
            inertia,
            damping,
            torque1,
            torque2,
            resistance - load_resistance,
            load_resistance,
            inductance,
            line_inductance,
            b,
        )
    }

    pub fn with_excitation(mut self, excitation: ExcitationParams) -> Result<Self> {
        self.excitation = excitation;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        positive("J", self.inertia)?;
        positive("D", self.damping)?;
        non_negative("R_s", self.stator_resistance)?;
        positive("R_L", self.load_resistance)?;
        positive("L", self.inductance)?;
        positive("L_3", self.line_inductance)?;
        require(self.torque1.is_finite() && self.torque2.is_finite(), || {
            format!("torques must be finite (got {}, {})", self.torque1, self.torque2)
        })?;
        non_negative("M_f", self.excitation.mutual_inductance)?;
        non_negative("i_f", self.excitation.rotor_current)?;
        Ok(())
    }

    /// Total series resistance seen by each machine in the dq model.
    pub fn resistance(&self) -> f64 {
        self.stator_resistance + self.load_resistance
    }

    pub fn b(&self) -> f64 {
        self.excitation.b()
    }

    pub fn torque_difference(&self) -> f64 {
        self.torque2 - self.torque1
    }

    pub fn torque_sum(&self) -> f64 {
        self.torque2 + self.torque1
    }

    /// Upper bound on the equilibrium speed, `T_s / 2D`.
    pub fn speed_bound(&self) -> f64 {
        self.torque_sum() / (2.0 * self.damping)
    }

    pub fn impedance_sq(&self, omega: f64) -> f64 {
        let r = self.resistance();
        let l = self.inductance;
        r * r + l * l * omega * omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoCurrents {
    pub i_d1: f64,
    pub i_q1: f64,
    pub i_d2: f64,
    pub i_q2: f64,
    pub i_d3: f64,
    pub i_q3: f64,
}

impl TwoCurrents {
    pub fn to_array(&self) -> [f64; 6] {
        [self.i_d1, self.i_q1, self.i_d2, self.i_q2, self.i_d3, self.i_q3]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            i_d1: x[0],
            i_q1: x[1],
            i_d2: x[2],
            i_q2: x[3],
            i_d3: x[4],
            i_q3: x[5],
        }
    }

    pub fn negated(&self) -> Self {
        let a = self.to_array().map(|v| -v);
        Self::from_slice(&a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoDqState {
    pub delta: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub currents: TwoCurrents,
}

impl TwoDqState {
    pub const NAMES: [&'static str; 9] = [
        "delta", "omega1", "omega2", "i_d1", "i_q1", "i_d2", "i_q2", "i_d3", "i_q3",
    ];

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.delta, self.omega1, self.omega2];
        v.extend_from_slice(&self.currents.to_array());
        v
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            delta: x[0],
            omega1: x[1],
            omega2: x[2],
            currents: TwoCurrents::from_slice(&x[3..9]),
        }
    }

    pub fn mean_speed(&self) -> f64 {
        0.5 * (self.omega1 + self.omega2)
    }

    /// Maps to the abc frame given the mean angle `η`.
    pub fn to_abc(&self, eta: f64) -> Result<TwoAbcState> {
        let c = &self.currents;
        Ok(TwoAbcState {
            theta1: eta - self.delta,
            theta2: eta + self.delta,
            omega1: self.omega1,
            omega2: self.omega2,
            i1: dq_to_abc(eta, DqVector::new(c.i_d1, c.i_q1))?,
            i2: dq_to_abc(eta, DqVector::new(c.i_d2, c.i_q2))?,
            i3: dq_to_abc(eta, DqVector::new(c.i_d3, c.i_q3))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoAbcState {
    pub theta1: f64,
    pub theta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub i1: ThreePhaseVector,
    pub i2: ThreePhaseVector,
    pub i3: ThreePhaseVector,
}

impl TwoAbcState {
    pub const NAMES: [&'static str; 13] = [
        "theta1", "theta2", "omega1", "omega2", "i_a1", "i_b1", "i_c1", "i_a2", "i_b2", "i_c2", "i_a3",
        "i_b3", "i_c3",
    ];

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.theta1, self.theta2, self.omega1, self.omega2];
        v.extend_from_slice(&self.i1.to_array());
        v.extend_from_slice(&self.i2.to_array());
        v.extend_from_slice(&self.i3.to_array());
        v
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            theta1: x[0],
            theta2: x[1],
            omega1: x[2],
            omega2: x[3],
            i1: ThreePhaseVector::from_slice(&x[4..7]),
            i2: ThreePhaseVector::from_slice(&x[7..10]),
            i3: ThreePhaseVector::from_slice(&x[10..13]),
        }
    }

    pub fn mean_angle(&self) -> f64 {
        0.5 * (self.theta1 + self.theta2)
    }

    pub fn to_dq(&self) -> Result<TwoDqState> {
        let eta = self.mean_angle();
        let d1 = abc_to_dq(eta, self.i1)?;
        let d2 = abc_to_dq(eta, self.i2)?;
        let d3 = abc_to_dq(eta, self.i3)?;
        Ok(TwoDqState {
            delta: 0.5 * (self.theta2 - self.theta1),
            omega1: self.omega1,
            omega2: self.omega2,
            currents: TwoCurrents::from_slice(&[d1.d, d1.q, d2.d, d2.q, d3.d, d3.q]),
        })
    }
}

/// Phase-domain model. Each machine sees `R_s + R_L`; the loads couple
/// through the line current `i₃`.
pub fn rhs_abc_two(s: &TwoAbcState, p: &TwoMachineParams) -> Result<TwoAbcState> {
    let r = p.resistance();
    let rl = p.load_resistance;
    let (l, l3, j, d) = (p.inductance, p.line_inductance, p.inertia, p.damping);
    let e1 = back_emf(RotorKinematics { theta: s.theta1, omega: s.omega1 }, p.excitation);
    let e2 = back_emf(RotorKinematics { theta: s.theta2, omega: s.omega2 }, p.excitation);
    let te1 = electrical_torque(e1, s.i1, s.omega1)?;
    let te2 = electrical_torque(e2, s.i2, s.omega2)?;
    let phase = |k: usize| -> [f64; 3] {
        let (i1, i2, i3) = (s.i1.to_array()[k], s.i2.to_array()[k], s.i3.to_array()[k]);
        let (e1, e2) = (e1.to_array()[k], e2.to_array()[k]);
        [
            (-r * i1 + e1 + rl * i3) / l,
            (-r * i2 + e2 - rl * i3) / l,
            (-2.0 * rl * i3 + rl * (i1 - i2)) / l3,
        ]
    };
    let [a, b, c] = [phase(0), phase(1), phase(2)];
    Ok(TwoAbcState {
        theta1: s.omega1,
        theta2: s.omega2,
        omega1: (-d * s.omega1 - te1 + p.torque1) / j,
        omega2: (-d * s.omega2 - te2 + p.torque2) / j,
        i1: ThreePhaseVector::new(a[0], b[0], c[0]),
        i2: ThreePhaseVector::new(a[1], b[1], c[1]),
        i3: ThreePhaseVector::new(a[2], b[2], c[2]),
    })
}

fn rhs_dq_signed(s: &TwoDqState, p: &TwoMachineParams, printed: bool) -> TwoDqState {
    let r = p.resistance();
    let rl = p.load_resistance;
    let (l, l3, j, d, b) = (p.inductance, p.line_inductance, p.inertia, p.damping, p.b());
    let (sn, cs) = s.delta.sin_cos();
    let w = s.mean_speed();
    let c = &s.currents;
    let torque_sign = if printed { -1.0 } else { 1.0 };
    let emf2_q = if printed { -1.0 } else { 1.0 };
    TwoDqState {
        delta: 0.5 * (s.omega2 - s.omega1),
        omega1: (-d * s.omega1 + torque_sign * b * (sn * c.i_d1 - cs * c.i_q1) + p.torque1) / j,
        omega2: (-d * s.omega2 - torque_sign * b * (sn * c.i_d2 + cs * c.i_q2) + p.torque2) / j,
        currents: TwoCurrents {
            i_d1: (-r * c.i_d1 - l * w * c.i_q1 - b * sn * s.omega1 + rl * c.i_d3) / l,
            i_q1: (-r * c.i_q1 + l * w * c.i_d1 + b * cs * s.omega1 + rl * c.i_q3) / l,
            i_d2: (-r * c.i_d2 - l * w * c.i_q2 + b * sn * s.omega2 - rl * c.i_d3) / l,
            i_q2: (-r * c.i_q2 + l * w * c.i_d2 + emf2_q * b * cs * s.omega2 - rl * c.i_q3) / l,
            i_d3: (-2.0 * rl * c.i_d3 + rl * (c.i_d1 - c.i_d2) - l3 * w * c.i_q3) / l3,
            i_q3: (-2.0 * rl * c.i_q3 + rl * (c.i_q1 - c.i_q2) + l3 * w * c.i_d3) / l3,
        },
    }
}

/// Rotating-frame model consistent with [`rhs_abc_two`].
pub fn rhs_dq_two(s: &TwoDqState, p: &TwoMachineParams) -> TwoDqState {
    rhs_dq_signed(s, p, false)
}

/// Rotating-frame model with the published sign conventions: electrical
/// torque entering with a plus sign and a negative q-axis EMF on machine 2.
pub fn rhs_dq_two_as_printed(s: &TwoDqState, p: &TwoMachineParams) -> TwoDqState {
    rhs_dq_signed(s, p, true)
}

/// Speed-dependent network quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoMachineAux {
    /// `4R_L² + (L₃ω)²`
    pub x: f64,
    /// `−R + 4R_L³/X`
    pub a: f64,
    /// `−Lω − 2L₃ωR_L²/X`
    pub e: f64,
    /// `R² + L²ω²`
    pub z: f64,
}

impl TwoMachineAux {
    pub fn new(omega: f64, p: &TwoMachineParams) -> Self {
        let rl = p.load_resistance;
        let l3w = p.line_inductance * omega;
        let x = 4.0 * rl * rl + l3w * l3w;
        Self {
            x,
            a: -p.resistance() + 4.0 * rl.powi(3) / x,
            e: -p.inductance * omega - 2.0 * l3w * rl * rl / x,
            z: p.impedance_sq(omega),
        }
    }

    /// `a² + e²`
    pub fn n(&self) -> f64 {
        self.a * self.a + self.e * self.e
    }
}

/// Currents solving the six network equations at a rest point `(ω, δ)`.
pub fn closed_form_currents(omega: f64, delta: f64, p: &TwoMachineParams) -> Result<TwoCurrents> {
    let aux = TwoMachineAux::new(omega, p);
    let n = aux.n();
    if n == 0.0 || aux.z == 0.0 || aux.x == 0.0 {
        return Err(Error::DegenerateNetwork(format!(
            "network is singular at omega = {omega} (a² + e² = {n}, R² + L²ω² = {})",
            aux.z
        )));
    }
    let (s, c) = delta.sin_cos();
    let bw = p.b() * omega;
    let (r, lw) = (p.resistance(), p.inductance * omega);
    let common_d = -lw * c / aux.z;
    let common_q = r * c / aux.z;
    let diff_d = aux.a * s / n;
    let diff_q = aux.e * s / n;
    let i_d1 = bw * (common_d + diff_d);
    let i_q1 = bw * (common_q + diff_q);
    let i_d2 = bw * (common_d - diff_d);
    let i_q2 = bw * (common_q - diff_q);
    let (dd, dq) = (i_d1 - i_d2, i_q1 - i_q2);
    let rl = p.load_resistance;
    let l3w = p.line_inductance * omega;
    Ok(TwoCurrents {
        i_d1,
        i_q1,
        i_d2,
        i_q2,
        i_d3: (2.0 * rl * rl * dd - l3w * rl * dq) / aux.x,
        i_q3: (l3w * rl * dd + 2.0 * rl * rl * dq) / aux.x,
    })
}

/// Solves the six network equations directly as a linear system.
pub fn network_currents(omega: f64, delta: f64, p: &TwoMachineParams) -> Result<TwoCurrents> {
    let (r, rl) = (p.resistance(), p.load_resistance);
    let lw = p.inductance * omega;
    let l3w = p.line_inductance * omega;
    let m = Matrix::from_rows(&[
        [-r, -lw, 0.0, 0.0, rl, 0.0],
        [0.0, 0.0, -r, -lw, -rl, 0.0],
        [lw, -r, 0.0, 0.0, 0.0, rl],
        [0.0, 0.0, lw, -r, 0.0, -rl],
        [rl, 0.0, -rl, 0.0, -2.0 * rl, -l3w],
        [0.0, rl, 0.0, -rl, l3w, -2.0 * rl],
    ]);
    let (s, c) = delta.sin_cos();
    let bw = p.b() * omega;
    let rhs = [bw * s, -bw * s, -bw * c, -bw * c, 0.0, 0.0];
    let x = m
        .solve(&rhs)
        .map_err(|e| Error::DegenerateNetwork(format!("network solve failed at omega = {omega}: {e}")))?;
    Ok(TwoCurrents::from_slice(&x))
}

/// Residuals of the eight rest-point equations of the dynamic model, in
/// the order: two torque balances, d1, d2, q1, q2, line d, line q. Each
/// entry is paired with the largest magnitude among its terms.
pub fn equilibrium_terms(omega: f64, delta: f64, i: &TwoCurrents, p: &TwoMachineParams) -> [(f64, f64); 8] {
    let (s, c) = delta.sin_cos();
    let (r, rl, b, d) = (p.resistance(), p.load_resistance, p.b(), p.damping);
    let lw = p.inductance * omega;
    let l3w = p.line_inductance * omega;
    let row = |terms: &[f64]| -> (f64, f64) {
        (terms.iter().sum(), terms.iter().fold(0.0f64, |m, t| m.max(t.abs())))
    };
    [
        row(&[-d * omega, b * s * i.i_d1, -b * c * i.i_q1, p.torque1]),
        row(&[-d * omega, -b * s * i.i_d2, -b * c * i.i_q2, p.torque2]),
        row(&[-b * s * omega, -r * i.i_d1, -lw * i.i_q1, rl * i.i_d3]),
        row(&[b * s * omega, -r * i.i_d2, -lw * i.i_q2, -rl * i.i_d3]),
        row(&[b * c * omega, lw * i.i_d1, -r * i.i_q1, rl * i.i_q3]),
        row(&[b * c * omega, lw * i.i_d2, -r * i.i_q2, -rl * i.i_q3]),
        row(&[rl * i.i_d1, -rl * i.i_d2, -2.0 * rl * i.i_d3, -l3w * i.i_q3]),
        row(&[rl * i.i_q1, -rl * i.i_q2, l3w * i.i_d3, -2.0 * rl * i.i_q3]),
    ]
}

/// Largest residual of the rest-point equations, each relative to its
/// largest term.
pub fn equilibrium_residual_two(omega: f64, delta: f64, i: &TwoCurrents, p: &TwoMachineParams) -> f64 {
    relative_norm(&equilibrium_terms(omega, delta, i, p))
}

pub(crate) fn relative_norm(rows: &[(f64, f64)]) -> f64 {
    rows.iter().fold(0.0f64, |m, &(v, scale)| {
        let rel = if scale > 0.0 { v.abs() / scale } else { v.abs() };
        m.max(rel)
    })
}
