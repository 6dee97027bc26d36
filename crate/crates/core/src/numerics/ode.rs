//! Explicit Runge–Kutta integration: classic fixed-step RK4 and the adaptive
//! Dormand–Prince 5(4) pair.

use crate::{Error, Result};

const MAX_STEPS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4 {
        step: f64,
    },
    Rk45 {
        rtol: f64,
        atol: f64,
        /// Initial step guess; `None` picks `1e-3·(t_end − t0)`.
        initial_step: Option<f64>,
        /// Steps below this raise [`Error::Stiffness`].
        min_step: f64,
        max_step: f64,
    },
}

impl Method {
    pub fn rk45(tol: f64) -> Self {
        Method::Rk45 {
            rtol: tol,
            atol: tol,
            initial_step: None,
            min_step: 1e-14,
            max_step: f64::INFINITY,
        }
    }

    /// The nominal tolerance (for RK4, the step size).
    pub fn tolerance(&self) -> f64 {
        match *self {
            Method::Rk4 { step } => step,
            Method::Rk45 { rtol, atol, .. } => rtol.max(atol),
        }
    }
}

/// Early termination once the state stops moving.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Stop when `‖f‖∞ < threshold·(1 + ‖x‖∞)` over the selected components.
    pub threshold: f64,
    /// ...for this many consecutive accepted steps.
    pub consecutive: usize,
    /// Components that enter both norms; `None` means all. Angles that
    /// advance steadily at equilibrium must be excluded.
    pub components: Option<Vec<usize>>,
}

impl SteadyState {
    pub fn new(components: Option<Vec<usize>>) -> Self {
        Self {
            threshold: 1e-8,
            consecutive: 100,
            components,
        }
    }

    fn norms(&self, x: &[f64], f: &[f64]) -> (f64, f64) {
        let pick = |v: &[f64]| -> f64 {
            match &self.components {
                Some(idx) => idx.iter().fold(0.0, |m, &i| m.max(v[i].abs())),
                None => v.iter().fold(0.0, |m, a| m.max(a.abs())),
            }
        };
        (pick(f), pick(x))
    }

    fn is_steady(&self, x: &[f64], f: &[f64]) -> bool {
        let (fn_, xn) = self.norms(x, f);
        fn_ < self.threshold * (1.0 + xn)
    }
}

/// How the trajectory is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Record {
    /// Every `n`-th accepted step (plus the first and last point).
    Stride(usize),
    /// Exactly at `t0 + k·dt`; steps are shortened to land on sample times.
    Interval(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    pub t_end: f64,
    pub record: Record,
    pub steady_state: Option<SteadyState>,
}

impl IntegratorOptions {
    pub fn new(method: Method, t_end: f64) -> Self {
        Self {
            method,
            t_end,
            record: Record::Stride(1),
            steady_state: None,
        }
    }

    fn validate(&self, t0: f64) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} must be positive, got {v}")))
            }
        };
        match self.method {
            Method::Rk4 { step } => positive(step, "RK4 step")?,
            Method::Rk45 {
                rtol,
                atol,
                min_step,
                max_step,
                initial_step,
            } => {
                positive(rtol, "rtol")?;
                positive(atol, "atol")?;
                positive(min_step, "min_step")?;
                if max_step.is_nan() || max_step < min_step {
                    return Err(Error::InvalidParameter("max_step < min_step".into()));
                }
                if let Some(h) = initial_step {
                    positive(h, "initial_step")?;
                }
            }
        }
        match self.record {
            Record::Stride(0) => {
                return Err(Error::InvalidParameter("record stride must be >= 1".into()))
            }
            Record::Interval(dt) => positive(dt, "record interval")?,
            Record::Stride(_) => {}
        }
        if !(self.t_end.is_finite() && self.t_end > t0) {
            return Err(Error::InvalidParameter(format!(
                "t_end ({}) must be finite and after t0 ({t0})",
                self.t_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub reached_steady_state: bool,
    /// `‖f(t_final, x_final)‖∞` over the steady-state components (all
    /// components when no steady-state detection is configured).
    pub final_derivative_norm: f64,
}

impl OdeSolution {
    pub fn last(&self) -> (f64, &[f64]) {
        (*self.t.last().unwrap(), self.x.last().unwrap())
    }
}

struct Recorder {
    record: Record,
    t0: f64,
    next_index: usize,
    t: Vec<f64>,
    x: Vec<Vec<f64>>,
}

impl Recorder {
    fn next_sample_time(&self) -> Option<f64> {
        match self.record {
            Record::Interval(dt) => Some(self.t0 + self.next_index as f64 * dt),
            Record::Stride(_) => None,
        }
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        if self.t.last() == Some(&t) {
            return;
        }
        self.t.push(t);
        self.x.push(x.to_vec());
    }

    fn after_step(&mut self, step_index: usize, t: f64, x: &[f64]) {
        match self.record {
            Record::Stride(n) => {
                if step_index % n == 0 {
                    self.push(t, x);
                }
            }
            Record::Interval(_) => {
                if let Some(ts) = self.next_sample_time() {
                    if (t - ts).abs() <= 1e-12 * t.abs().max(1.0) {
                        self.push(t, x);
                        self.next_index += 1;
                    }
                }
            }
        }
    }
}

/// Integrates `x' = f(t, x)` from `(t0, x0)` to `opts.t_end`.
///
/// `rhs(t, x, out)` writes the derivative into `out`; its errors abort the
/// integration.
pub fn integrate<F>(mut rhs: F, t0: f64, x0: &[f64], opts: &IntegratorOptions) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    opts.validate(t0)?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    let n = x0.len();
    let mut rec = Recorder {
        record: opts.record,
        t0,
        next_index: 1,
        t: Vec::new(),
        x: Vec::new(),
    };
    rec.push(t0, x0);

    let mut t = t0;
    let mut x = x0.to_vec();
    let mut f = vec![0.0; n];
    rhs(t, &x, &mut f)?;

    let mut steady_run = 0usize;
    let mut reached_steady_state = false;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let mut stage = Stages::new(n);
    let mut h_next = match opts.method {
        Method::Rk4 { step } => step,
        Method::Rk45 {
            initial_step,
            max_step,
            ..
        } => initial_step.unwrap_or(1e-3 * (opts.t_end - t0)).min(max_step),
    };

    while t < opts.t_end {
        if accepted + rejected > MAX_STEPS {
            return Err(Error::NumericFailure(format!(
                "step budget exhausted at t = {t:.6e}"
            )));
        }
        // Land exactly on t_end and on sample times without disturbing the
        // step-size controller.
        let mut h = h_next;
        let mut limit = opts.t_end;
        if let Some(ts) = rec.next_sample_time() {
            limit = limit.min(ts);
        }
        let truncated = t + h >= limit;
        if truncated {
            h = limit - t;
        }

        match opts.method {
            Method::Rk4 { .. } => {
                stage.rk4_step(&mut rhs, t, &x, &f, h)?;
                accepted += 1;
            }
            Method::Rk45 {
                rtol,
                atol,
                min_step,
                max_step,
                ..
            } => {
                let err = stage.dopri_step(&mut rhs, t, &x, &f, h, rtol, atol)?;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err > 1.0 || !err.is_finite() {
                    rejected += 1;
                    let shrink = if err.is_finite() { factor } else { 0.2 };
                    h_next = (h * shrink).min(max_step);
                    if h_next < min_step {
                        return Err(Error::Stiffness { t, h: h_next });
                    }
                    continue;
                }
                accepted += 1;
                if !truncated {
                    h_next = (h * factor).min(max_step);
                } else {
                    h_next = h_next.max(h * factor).min(max_step);
                }
            }
        }

        t = if truncated { limit } else { t + h };
        std::mem::swap(&mut x, &mut stage.x_new);
        std::mem::swap(&mut f, &mut stage.f_new);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "state became non-finite at t = {t:.6e}"
            )));
        }
        rec.after_step(accepted, t, &x);

        if let Some(ss) = &opts.steady_state {
            if ss.is_steady(&x, &f) {
                steady_run += 1;
                if steady_run >= ss.consecutive {
                    reached_steady_state = true;
                    break;
                }
            } else {
                steady_run = 0;
            }
        }
    }
    rec.push(t, &x);

    let final_derivative_norm = match &opts.steady_state {
        Some(ss) => ss.norms(&x, &f).0,
        None => f.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    };

    Ok(OdeSolution {
        t: rec.t,
        x: rec.x,
        accepted_steps: accepted,
        rejected_steps: rejected,
        reached_steady_state,
        final_derivative_norm,
    })
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stages {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    x_new: Vec<f64>,
    f_new: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: vec![vec![0.0; n]; 7],
            tmp: vec![0.0; n],
            x_new: vec![0.0; n],
            f_new: vec![0.0; n],
        }
    }

    fn rk4_step<F>(&mut self, rhs: &mut F, t: f64, x: &[f64], f: &[f64], h: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = x.len();
        self.k[0].copy_from_slice(f);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k[0][i];
        }
        rhs(t + 0.5 * h, &self.tmp, &mut self.k[1])?;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k[1][i];
        }
        rhs(t + 0.5 * h, &self.tmp, &mut self.k[2])?;
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k[2][i];
        }
        rhs(t + h, &self.tmp, &mut self.k[3])?;
        for i in 0..n {
            self.x_new[i] = x[i]
                + h / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
        rhs(t + h, &self.x_new, &mut self.f_new)
    }

    /// One Dormand–Prince step; returns the scaled RMS error estimate.
    #[allow(clippy::too_many_arguments)]
    fn dopri_step<F>(
        &mut self,
        rhs: &mut F,
        t: f64,
        x: &[f64],
        f: &[f64],
        h: f64,
        rtol: f64,
        atol: f64,
    ) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = x.len();
        self.k[0].copy_from_slice(f);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = x[i] + h * acc;
            }
            let (head, tail) = self.k.split_at_mut(s);
            let _ = head;
            rhs(t + C[s] * h, &self.tmp, &mut tail[0])?;
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        self.x_new.copy_from_slice(&self.tmp);
        self.f_new.copy_from_slice(&self.k[6]);

        let mut sum = 0.0;
        for i in 0..n {
            let err: f64 = (0..7).map(|s| E[s] * self.k[s][i]).sum::<f64>() * h;
            let sc = atol + rtol * x[i].abs().max(self.x_new[i].abs());
            sum += (err / sc).powi(2);
        }
        Ok((sum / n.max(1) as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = -x[0];
        Ok(())
    }

    fn rotation(_t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = -x[1];
        out[1] = x[0];
        Ok(())
    }

    #[test]
    fn exponential_decay_rk45() {
        let opts = IntegratorOptions::new(Method::rk45(1e-10), 1.0);
        let sol = integrate(decay, 0.0, &[1.0], &opts).unwrap();
        let (t, x) = sol.last();
        assert_eq!(t, 1.0);
        assert!((x[0] - (-1f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn skew_system_conserves_norm() {
        let tol = 1e-9;
        let opts = IntegratorOptions::new(Method::rk45(tol), 50.0);
        let sol = integrate(rotation, 0.0, &[1.0, 0.0], &opts).unwrap();
        let (_, x) = sol.last();
        let drift = (x[0].hypot(x[1]) - 1.0).abs();
        assert!(drift <= tol * sol.accepted_steps as f64, "drift {drift}");
    }

    fn global_error(method: Method) -> (f64, usize) {
        let opts = IntegratorOptions::new(method, 2.0);
        let sol = integrate(rotation, 0.0, &[1.0, 0.0], &opts).unwrap();
        let (_, x) = sol.last();
        let err = (x[0] - 2f64.cos()).abs().max((x[1] - 2f64.sin()).abs());
        (err, sol.accepted_steps)
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn rk4_is_fourth_order() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = hs.iter().map(|&h| global_error(Method::Rk4 { step: h }).0).collect();
        let order = slope(&hs.map(f64::ln), &errs.iter().map(|e| e.ln()).collect::<Vec<_>>());
        assert!(order > 3.8 && order < 4.2, "order {order}");
    }

    #[test]
    fn rk45_error_falls_at_least_fourth_order_in_step_count() {
        let mut ln_n = Vec::new();
        let mut ln_e = Vec::new();
        for tol in [1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10] {
            let (e, n) = global_error(Method::rk45(tol));
            ln_n.push((n as f64).ln());
            ln_e.push(e.ln());
        }
        let order = -slope(&ln_n, &ln_e);
        assert!(order >= 4.0, "empirical order {order}");
    }

    #[test]
    fn interval_recording_hits_sample_times() {
        let mut opts = IntegratorOptions::new(Method::rk45(1e-8), 1.0);
        opts.record = Record::Interval(0.25);
        let sol = integrate(decay, 0.0, &[1.0], &opts).unwrap();
        assert_eq!(sol.t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        for (t, x) in sol.t.iter().zip(&sol.x) {
            assert!((x[0] - (-t).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn steady_state_stops_early() {
        let mut opts = IntegratorOptions::new(Method::rk45(1e-10), 1e4);
        opts.steady_state = Some(SteadyState::new(None));
        let sol = integrate(decay, 0.0, &[1.0], &opts).unwrap();
        assert!(sol.reached_steady_state);
        assert!(*sol.t.last().unwrap() < 1e4);
        assert!(sol.final_derivative_norm < 1e-8);
    }

    #[test]
    fn blow_up_is_reported() {
        let opts = IntegratorOptions::new(Method::rk45(1e-8), 2.0);
        let res = integrate(
            |_t, x: &[f64], out: &mut [f64]| {
                out[0] = x[0] * x[0];
                Ok(())
            },
            0.0,
            &[1.0],
            &opts,
        );
        assert!(matches!(res, Err(Error::Stiffness { .. }) | Err(Error::NumericFailure(_))));
    }

    #[test]
    fn rhs_errors_propagate() {
        let opts = IntegratorOptions::new(Method::Rk4 { step: 0.1 }, 1.0);
        let res = integrate(
            |_t, _x: &[f64], _out: &mut [f64]| Err(Error::SingularVelocity(0.0)),
            0.0,
            &[1.0],
            &opts,
        );
        assert_eq!(res.unwrap_err(), Error::SingularVelocity(0.0));
    }

    #[test]
    fn invalid_options_are_rejected() {
        let opts = IntegratorOptions::new(Method::Rk4 { step: -1.0 }, 1.0);
        assert!(integrate(decay, 0.0, &[1.0], &opts).is_err());
        let opts = IntegratorOptions::new(Method::rk45(1e-6), 0.0);
        assert!(integrate(decay, 0.0, &[1.0], &opts).is_err());
    }
}
