//! Trajectory experiments: plain simulation, agreement between the stator
//! and rotor frame models, and basin-of-attraction probes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::abc_to_dq;
use crate::numerics::{integrate, IntegratorOptions, Method, OdeSolution, Record, SteadyState};
use crate::single::{
    rhs_abc_single, rhs_dq_single, solve_single_equilibria, SingleAbcState, SingleDqState, SingleMachineParams,
};
use crate::two::{rhs_abc_two, rhs_dq_two, TwoAbcState, TwoDqState, TwoMachineParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "system", content = "params")]
pub enum SystemModel {
    Single(SingleMachineParams),
    Two(TwoMachineParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Abc,
    Dq,
}

impl SystemModel {
    pub fn state_names(&self, frame: Frame) -> &'static [&'static str] {
        match (self, frame) {
            (SystemModel::Single(_), Frame::Abc) => &SingleAbcState::NAMES,
            (SystemModel::Single(_), Frame::Dq) => &SingleDqState::NAMES,
            (SystemModel::Two(_), Frame::Abc) => &TwoAbcState::NAMES,
            (SystemModel::Two(_), Frame::Dq) => &TwoDqState::NAMES,
        }
    }

    /// Writes the time derivative of `x` into `dx`.
    pub fn rhs(&self, frame: Frame, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let v = match (self, frame) {
            (SystemModel::Single(p), Frame::Abc) => rhs_abc_single(&SingleAbcState::from_slice(x), p)?.to_vec(),
            (SystemModel::Single(p), Frame::Dq) => rhs_dq_single(&SingleDqState::from_slice(x), p).to_vec(),
            (SystemModel::Two(p), Frame::Abc) => rhs_abc_two(&TwoAbcState::from_slice(x), p)?.to_vec(),
            (SystemModel::Two(p), Frame::Dq) => rhs_dq_two(&TwoDqState::from_slice(x), p).to_vec(),
        };
        dx.copy_from_slice(&v);
        Ok(())
    }

    /// State components that settle at a rest point (angles that advance
    /// with the rotor are excluded).
    pub fn settling_components(&self, frame: Frame) -> Vec<usize> {
        let n = self.state_names(frame).len();
        match (self, frame) {
            (SystemModel::Single(_), _) => (1..n).collect(),
            (SystemModel::Two(_), Frame::Abc) => (2..n).collect(),
            (SystemModel::Two(_), Frame::Dq) => (0..n).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: SystemModel,
    pub frame: Frame,
    pub initial: Vec<f64>,
    pub integrator: IntegratorOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub reached_steady_state: bool,
    pub final_derivative_norm: f64,
}

impl Trajectory {
    fn from_solution(names: &[&str], sol: OdeSolution) -> Self {
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            t: sol.t,
            x: sol.x,
            accepted_steps: sol.accepted_steps,
            rejected_steps: sol.rejected_steps,
            reached_steady_state: sol.reached_steady_state,
            final_derivative_norm: sol.final_derivative_norm,
        }
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.t.last()?, self.x.last()?.as_slice()))
    }

    /// Samples of one named component.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.x.iter().map(|row| row[k]).collect())
    }

    /// CSV with a `t` column followed by the state names; values carry 17
    /// significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t")?;
        for n in &self.names {
            write!(out, ",{n}")?;
        }
        writeln!(out)?;
        for (t, row) in self.t.iter().zip(&self.x) {
            write!(out, "{t:.16e}")?;
            for v in row {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    let names = cfg.model.state_names(cfg.frame);
    if cfg.initial.len() != names.len() {
        return Err(Error::InvalidParameter(format!(
            "initial state has {} components, expected {} ({})",
            cfg.initial.len(),
            names.len(),
            names.join(", ")
        )));
    }
    let model = cfg.model;
    let frame = cfg.frame;
    let sol = integrate(|_, x, dx| model.rhs(frame, x, dx), 0.0, &cfg.initial, &cfg.integrator)?;
    Ok(Trajectory::from_solution(names, sol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConsistency {
    /// Largest `|U(η)·i_abc − i_dq|` over samples and current vectors.
    pub max_current_deviation: f64,
    /// Largest speed difference over samples.
    pub max_speed_deviation: f64,
    pub samples: usize,
}

/// Integrates both frame models from the same physical initial state and
/// compares them at common sample times. For two machines the frame angle
/// `η = (θ₁ + θ₂)/2` starts at `eta0`; for one machine it is the rotor
/// angle in the dq state.
pub fn frame_consistency(
    model: &SystemModel,
    dq_initial: &[f64],
    eta0: f64,
    method: Method,
    t_end: f64,
    sample_interval: f64,
) -> Result<FrameConsistency> {
    let mut opts = IntegratorOptions::new(method, t_end);
    opts.record = Record::Interval(sample_interval);
    match model {
        SystemModel::Single(_) => {
            let dq0 = SingleDqState::from_slice(dq_initial);
            let abc0 = dq0.to_abc()?.to_vec();
            let dq = integrate(|_, x, dx| model.rhs(Frame::Dq, x, dx), 0.0, dq_initial, &opts)?;
            let abc = integrate(|_, x, dx| model.rhs(Frame::Abc, x, dx), 0.0, &abc0, &opts)?;
            compare(&dq, &abc, |d, a| {
                let a = SingleAbcState::from_slice(a);
                let d = SingleDqState::from_slice(d);
                let v = abc_to_dq(a.theta, a.i_abc)?;
                Ok((((v.d - d.i_d).powi(2) + (v.q - d.i_q).powi(2)).sqrt(), (a.omega - d.omega).abs()))
            })
        }
        SystemModel::Two(_) => {
            let dq0 = TwoDqState::from_slice(dq_initial);
            let abc0 = dq0.to_abc(eta0)?.to_vec();
            let dq = integrate(|_, x, dx| model.rhs(Frame::Dq, x, dx), 0.0, dq_initial, &opts)?;
            let abc = integrate(|_, x, dx| model.rhs(Frame::Abc, x, dx), 0.0, &abc0, &opts)?;
            compare(&dq, &abc, |d, a| {
                let a = TwoAbcState::from_slice(a).to_dq()?;
                let d = TwoDqState::from_slice(d);
                let (ca, cd) = (a.currents.to_array(), d.currents.to_array());
                let mut worst: f64 = 0.0;
                for k in 0..3 {
                    let e = ((ca[2 * k] - cd[2 * k]).powi(2) + (ca[2 * k + 1] - cd[2 * k + 1]).powi(2)).sqrt();
                    worst = worst.max(e);
                }
                let speed = (a.omega1 - d.omega1).abs().max((a.omega2 - d.omega2).abs());
                Ok((worst, speed))
            })
        }
    }
}

fn compare<F>(dq: &OdeSolution, abc: &OdeSolution, f: F) -> Result<FrameConsistency>
where
    F: Fn(&[f64], &[f64]) -> Result<(f64, f64)>,
{
    if dq.t.len() != abc.t.len() {
        return Err(Error::NumericFailure(format!(
            "frame runs recorded {} and {} samples",
            dq.t.len(),
            abc.t.len()
        )));
    }
    let mut out = FrameConsistency { max_current_deviation: 0.0, max_speed_deviation: 0.0, samples: dq.t.len() };
    for (k, (d, a)) in dq.x.iter().zip(&abc.x).enumerate() {
        if (dq.t[k] - abc.t[k]).abs() > 1e-9 * dq.t[k].abs().max(1.0) {
            return Err(Error::NumericFailure(format!("sample times diverge at index {k}")));
        }
        let (ci, sp) = f(d, a)?;
        out.max_current_deviation = out.max_current_deviation.max(ci);
        out.max_speed_deviation = out.max_speed_deviation.max(sp);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinOptions {
    pub horizon: f64,
    pub tolerance: f64,
    /// Final speeds within this distance of an equilibrium take its label.
    pub label_tolerance: f64,
}

impl Default for BasinOptions {
    fn default() -> Self {
        Self { horizon: 200.0, tolerance: 1e-10, label_tolerance: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinPoint {
    pub omega0: f64,
    pub final_time: Option<f64>,
    pub final_omega: Option<f64>,
    /// Speed of the equilibrium the trajectory settled on.
    pub label: Option<f64>,
    pub reached_steady_state: bool,
    /// Integration failure, if any.
    pub failure: Option<String>,
}

/// Starts the single machine at each speed with zero currents and zero
/// rotor angle and reports where it settles.
pub fn basin_probe(p: &SingleMachineParams, omega0: &[f64], opts: &BasinOptions) -> Result<Vec<BasinPoint>> {
    let equilibria: Vec<f64> = solve_single_equilibria(p)?.equilibria.iter().map(|e| e.omega).collect();
    let model = SystemModel::Single(*p);
    // A step cap keeps enough accepted steps near rest for the steady-state
    // counter to fire.
    let method = Method::Rk45 {
        rtol: opts.tolerance,
        atol: opts.tolerance,
        initial_step: None,
        min_step: 1e-14,
        max_step: opts.horizon / 2000.0,
    };
    let mut iopts = IntegratorOptions::new(method, opts.horizon);
    iopts.record = Record::Stride(usize::MAX);
    iopts.steady_state = Some(SteadyState::new(Some(model.settling_components(Frame::Dq))));
    let mut out = Vec::with_capacity(omega0.len());
    for &w0 in omega0 {
        let x0 = SingleDqState { theta: 0.0, omega: w0, i_d: 0.0, i_q: 0.0 }.to_vec();
        match integrate(|_, x, dx| model.rhs(Frame::Dq, x, dx), 0.0, &x0, &iopts) {
            Ok(sol) => {
                let (t, x) = sol.last();
                let w = x[1];
                let label = equilibria
                    .iter()
                    .copied()
                    .filter(|e| (e - w).abs() <= opts.label_tolerance)
                    .min_by(|a, b| (a - w).abs().total_cmp(&(b - w).abs()));
                out.push(BasinPoint {
                    omega0: w0,
                    final_time: Some(t),
                    final_omega: Some(w),
                    label,
                    reached_steady_state: sol.reached_steady_state,
                    failure: None,
                });
            }
            Err(e) if e.is_numeric() => out.push(BasinPoint {
                omega0: w0,
                final_time: None,
                final_omega: None,
                label: None,
                reached_steady_state: false,
                failure: Some(e.to_string()),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::single::{equilibrium_currents_single, stability_single, LinearizationVariant, SingleClassification};
    use crate::two::{solve_two_equilibria, Reduction, TwoCurrents, TwoSolveOptions};

    fn case1() -> SingleMachineParams {
        SingleMachineParams::new(1.0, 1.0, 9.0, 1.0, 1.0, 4.0).unwrap()
    }

    fn rk45(tol: f64, t_end: f64) -> IntegratorOptions {
        IntegratorOptions::new(Method::rk45(tol), t_end)
    }

    #[test]
    fn equilibrium_start_is_stationary() {
        let p = case1();
        let (i_d, i_q) = equilibrium_currents_single(1.0, &p);
        let cfg = SimConfig {
            model: SystemModel::Single(p),
            frame: Frame::Dq,
            initial: vec![0.0, 1.0, i_d, i_q],
            integrator: rk45(1e-10, 20.0),
        };
        let tr = simulate(&cfg).unwrap();
        for row in &tr.x {
            assert!((row[1] - 1.0).abs() <= 1e-8);
            assert!((row[2] - i_d).abs() <= 1e-8 && (row[3] - i_q).abs() <= 1e-8);
        }
    }

    #[test]
    fn case1_start_at_four_and_a_half_settles_at_one() {
        let pts = basin_probe(&case1(), &[4.5], &BasinOptions::default()).unwrap();
        assert!((pts[0].label.unwrap() - 1.0).abs() < 1e-12);
        assert!((pts[0].final_omega.unwrap() - 1.0).abs() < 1e-4);
        assert!(pts[0].final_time.unwrap() < 200.0, "{:?}", pts[0]);
    }

    #[test]
    fn start_at_equilibrium_stays() {
        let pts = basin_probe(&case1(), &[1.0], &BasinOptions::default()).unwrap();
        assert!((pts[0].label.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basin_labels_are_stable_equilibria() {
        let p = case1();
        let sol = solve_single_equilibria(&p).unwrap();
        let stable: Vec<f64> = sol
            .equilibria
            .iter()
            .filter(|e| {
                let r = stability_single(e, &p, LinearizationVariant::Derived).unwrap();
                r.classification != SingleClassification::Unstable
            })
            .map(|e| e.omega)
            .collect();
        let grid: Vec<f64> = (0..=30).map(|k| 0.5 + 0.25 * k as f64).collect();
        let pts = basin_probe(&p, &grid, &BasinOptions::default()).unwrap();
        for pt in pts {
            if let Some(l) = pt.label {
                assert!(stable.contains(&l), "{pt:?}");
            }
        }
    }

    #[test]
    fn symmetric_two_machine_run_keeps_zero_angle() {
        let p = TwoMachineParams::new(1.0, 2.0, 40.0, 40.0, 1.0, 4.0, 0.5, 0.2, 3.0).unwrap();
        let cfg = SimConfig {
            model: SystemModel::Two(p),
            frame: Frame::Dq,
            initial: TwoDqState { delta: 0.0, omega1: 5.0, omega2: 5.0, currents: TwoCurrents::default() }.to_vec(),
            integrator: rk45(1e-9, 5.0),
        };
        let tr = simulate(&cfg).unwrap();
        assert!(tr.series("delta").unwrap().iter().all(|&d| d == 0.0));
        assert!(tr.series("i_d3").unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn exact_two_machine_equilibrium_is_stationary() {
        let p = TwoMachineParams::from_total_resistance(1.0, 9.0, 2910.0, 2800.0, 1010.0, 1000.0, 0.041, 0.04, 5.0)
            .unwrap();
        let opts = TwoSolveOptions { cross_check: false, ..TwoSolveOptions::with_reduction(Reduction::Exact) };
        let eq = solve_two_equilibria(&p, &opts).unwrap().equilibria.pop().unwrap();
        let cfg = SimConfig {
            model: SystemModel::Two(p),
            frame: Frame::Dq,
            initial: eq.state().to_vec(),
            integrator: rk45(1e-10, 0.2),
        };
        let tr = simulate(&cfg).unwrap();
        let (_, last) = tr.last().unwrap();
        assert!((last[1] - eq.omega).abs() < 1e-6 * eq.omega);
        assert!((last[0] - eq.delta).abs() < 1e-6);
    }

    #[test]
    fn initial_dimension_is_checked() {
        let cfg = SimConfig {
            model: SystemModel::Single(case1()),
            frame: Frame::Abc,
            initial: vec![0.0, 1.0, 0.0, 0.0],
            integrator: rk45(1e-8, 1.0),
        };
        assert!(matches!(simulate(&cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let cfg = SimConfig {
            model: SystemModel::Single(case1()),
            frame: Frame::Dq,
            initial: vec![0.0, 4.5, 0.0, 0.0],
            integrator: IntegratorOptions { record: Record::Interval(0.5), ..rk45(1e-8, 1.0) },
        };
        let tr = simulate(&cfg).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,theta,omega,i_d,i_q");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 5);
        assert_eq!(first[2].parse::<f64>().unwrap(), 4.5);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn single_frames_agree_from_zero_currents() {
        let tol = 1e-10;
        let model = SystemModel::Single(case1());
        let fc = frame_consistency(&model, &[0.0, 4.5, 0.0, 0.0], 0.0, Method::rk45(tol), 2.0, 0.01).unwrap();
        assert!(fc.max_current_deviation <= 10.0 * tol, "{fc:?}");
    }

    #[test]
    fn unexcited_frames_agree_to_roundoff() {
        let p = SingleMachineParams::new(1.0, 2.0, 5.0, 1.0, 1.0, 0.0).unwrap();
        let fc =
            frame_consistency(&SystemModel::Single(p), &[0.0, 1.0, 0.0, 0.0], 0.0, Method::rk45(1e-10), 1.0, 0.1)
                .unwrap();
        assert_eq!(fc.max_current_deviation, 0.0);
    }

    #[test]
    fn symmetric_two_machine_frames_agree() {
        let tol = 1e-10;
        let p = TwoMachineParams::new(1.0, 2.0, 40.0, 40.0, 1.0, 4.0, 0.5, 0.2, 3.0).unwrap();
        let x0 = TwoDqState { delta: 0.0, omega1: 5.0, omega2: 5.0, currents: TwoCurrents::default() }.to_vec();
        let fc = frame_consistency(&SystemModel::Two(p), &x0, 0.0, Method::rk45(tol), 2.0, 0.01).unwrap();
        assert!(fc.max_current_deviation <= 10.0 * tol, "{fc:?}");
    }

    #[test]
    fn halving_rk4_step_shrinks_frame_gap_by_eight() {
        let model = SystemModel::Single(case1());
        let run = |h: f64| {
            frame_consistency(&model, &[0.0, 4.5, 0.0, 0.0], 0.0, Method::Rk4 { step: h }, 2.0, 0.1)
                .unwrap()
                .max_current_deviation
        };
        let (a, b) = (run(0.01), run(0.005));
        assert!(a / b >= 8.0, "{a} {b}");
    }
}
