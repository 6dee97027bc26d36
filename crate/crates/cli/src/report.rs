//! Analysis reports and their renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use synchro_core::sim::{BasinPoint, SystemModel, Trajectory};
use synchro_core::single::{SingleClassification, SingleEquilibria, SingleStabilityReport};
use synchro_core::two::{TabulatedDiagnostic, TwoEquilibria, TwoStabilityReport, TwoVerdict};

use crate::config::AnalysisConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Equilibria,
    Stability,
    Simulate,
    Basin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleAnalysis {
    pub solution: SingleEquilibria,
    /// One entry per equilibrium, in the same order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<Vec<SingleStabilityReport>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoAnalysis {
    pub solution: TwoEquilibria,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<Vec<TwoStabilityReport>>,
    /// Whether the tabulated closed-form polynomial vanishes at the roots
    /// found here.
    pub tabulated: TabulatedDiagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    /// Configuration after command-line overrides.
    pub config: AnalysisConfig,
    pub model: SystemModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single: Option<SingleAnalysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two: Option<TwoAnalysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basin: Option<Vec<BasinPoint>>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// One row of the per-equilibrium summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub omega: f64,
    pub delta: Option<f64>,
    pub verdict: Option<&'static str>,
    pub max_real_eigenvalue: Option<f64>,
    pub a0: Option<f64>,
    pub lyapunov_holds: Option<bool>,
}

pub fn single_verdict(c: SingleClassification) -> &'static str {
    match c {
        SingleClassification::LyapunovStable => "lyapunov_stable",
        SingleClassification::LinearlyStable => "linearly_stable",
        SingleClassification::Unstable => "unstable",
        SingleClassification::Inconclusive => "inconclusive",
    }
}

pub fn two_verdict(v: TwoVerdict) -> &'static str {
    match v {
        TwoVerdict::LocallyStable => "locally_stable",
        TwoVerdict::Unstable => "unstable",
        TwoVerdict::Marginal => "marginal",
    }
}

impl Report {
    pub fn equilibrium_count(&self) -> usize {
        self.summary().len()
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        if let Some(s) = &self.single {
            return s
                .solution
                .equilibria
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    let st = s.stability.as_ref().map(|v| &v[k]);
                    SummaryRow {
                        omega: e.omega,
                        delta: None,
                        verdict: st.map(|r| single_verdict(r.classification)),
                        max_real_eigenvalue: st.map(|r| r.max_real_eigenvalue),
                        a0: st.map(|r| r.routh.a0),
                        lyapunov_holds: st.map(|r| r.lyapunov.holds),
                    }
                })
                .collect();
        }
        if let Some(t) = &self.two {
            return t
                .solution
                .equilibria
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    let st = t.stability.as_ref().map(|v| &v[k]);
                    SummaryRow {
                        omega: e.omega,
                        delta: Some(e.delta),
                        verdict: st.map(|r| two_verdict(r.verdict)),
                        max_real_eigenvalue: st.map(|r| r.max_real_eigenvalue),
                        a0: None,
                        lyapunov_holds: None,
                    }
                })
                .collect();
        }
        Vec::new()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `omega_e,delta_e,verdict,max_re_eig,a0,lyapunov_holds`, one row per
    /// equilibrium; inapplicable cells are empty.
    pub fn to_csv_summary(&self) -> String {
        let mut out = String::from("omega_e,delta_e,verdict,max_re_eig,a0,lyapunov_holds\n");
        let num = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for r in self.summary() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                num(Some(r.omega)),
                num(r.delta),
                r.verdict.unwrap_or(""),
                num(r.max_real_eigenvalue),
                num(r.a0),
                r.lyapunov_holds.map(|b| b.to_string()).unwrap_or_default()
            );
        }
        out
    }

    /// `omega0,final_time,final_omega,label,reached_steady_state,failure`.
    pub fn basin_csv(&self) -> String {
        let mut out = String::from("omega0,final_time,final_omega,label,reached_steady_state,failure\n");
        let num = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for p in self.basin.iter().flatten() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                num(Some(p.omega0)),
                num(p.final_time),
                num(p.final_omega),
                num(p.label),
                p.reached_steady_state,
                p.failure.as_deref().unwrap_or("").replace(',', ";")
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}  command: {:?}  seed: {}", self.tool, self.version, self.command, self.seed);
        match &self.model {
            SystemModel::Single(p) => {
                let _ = writeln!(
                    out,
                    "single machine: J={} D={} T_m={} R={} L={} b={}",
                    p.inertia,
                    p.damping,
                    p.torque,
                    p.resistance,
                    p.inductance,
                    p.b()
                );
            }
            SystemModel::Two(p) => {
                let _ = writeln!(
                    out,
                    "two machines: J={} D={} T_m1={} T_m2={} R={} R_L={} L={} L3={} b={}",
                    p.inertia,
                    p.damping,
                    p.torque1,
                    p.torque2,
                    p.resistance(),
                    p.load_resistance,
                    p.inductance,
                    p.line_inductance,
                    p.b()
                );
            }
        }
        if self.single.is_some() || self.two.is_some() {
            let rows = self.summary();
            let _ = writeln!(out, "{} equilibria", rows.len());
            if !rows.is_empty() {
                let _ = writeln!(
                    out,
                    "{:>22} {:>22} {:>16} {:>22} {:>22} {:>9}",
                    "omega_e", "delta_e", "verdict", "max_re_eig", "a0", "lyapunov"
                );
            }
            let num = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_else(|| "-".into());
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>22} {:>22} {:>16} {:>22} {:>22} {:>9}",
                    num(Some(r.omega)),
                    num(r.delta),
                    r.verdict.unwrap_or("-"),
                    num(r.max_real_eigenvalue),
                    num(r.a0),
                    r.lyapunov_holds.map(|b| b.to_string()).unwrap_or_else(|| "-".into())
                );
            }
        }
        if let Some(t) = &self.two {
            if let Some(o) = &t.solution.oracle {
                let _ = writeln!(
                    out,
                    "newton oracle: {} starts, {} matched, agree: {}",
                    o.starts, o.matched, o.agree
                );
            }
            let _ = writeln!(out, "tabulated polynomial shares zeros: {}", t.tabulated.shares_zeros);
        }
        if let Some(tr) = &self.trajectory {
            if let Some((t, x)) = tr.last() {
                let _ = writeln!(out, "trajectory: {} samples, final t = {t}", tr.t.len());
                for (n, v) in tr.names.iter().zip(x) {
                    let _ = writeln!(out, "  {n:>8} = {v:.12e}");
                }
                let _ = writeln!(out, "  steady state reached: {}", tr.reached_steady_state);
            }
        }
        if let Some(basin) = &self.basin {
            let _ = writeln!(out, "{:>12} {:>20} {:>20}", "omega0", "final_omega", "label");
            for p in basin {
                let f = |v: Option<f64>| v.map(|x| format!("{x:.10}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(out, "{:>12} {:>20} {:>20}", p.omega0, f(p.final_omega), f(p.label));
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
