//! JSON analysis configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use synchro_core::frames::ExcitationParams;
use synchro_core::sim::{Frame, SystemModel};
use synchro_core::single::{LinearizationVariant, SeriesCircuit, SingleMachineParams};
use synchro_core::two::{Reduction, TwoMachineParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Single,
    Two,
}

/// Physical parameters as written in the config. Keys follow the usual
/// symbols: `J, D, T_m` (or `T_m1, T_m2`), `R, L` or the component set
/// `R_s, R_l, R_L, L_s, L_l`, `L3`, and `b` or `M_f, i_f`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(rename = "T_m", default, skip_serializing_if = "Option::is_none")]
    pub torque: Option<f64>,
    #[serde(rename = "T_m1", default, skip_serializing_if = "Option::is_none")]
    pub torque1: Option<f64>,
    #[serde(rename = "T_m2", default, skip_serializing_if = "Option::is_none")]
    pub torque2: Option<f64>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub resistance: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub inductance: Option<f64>,
    #[serde(rename = "R_s", default, skip_serializing_if = "Option::is_none")]
    pub stator_resistance: Option<f64>,
    #[serde(rename = "R_l", default, skip_serializing_if = "Option::is_none")]
    pub line_resistance: Option<f64>,
    #[serde(rename = "R_L", default, skip_serializing_if = "Option::is_none")]
    pub load_resistance: Option<f64>,
    #[serde(rename = "L_s", default, skip_serializing_if = "Option::is_none")]
    pub stator_inductance: Option<f64>,
    #[serde(rename = "L_l", default, skip_serializing_if = "Option::is_none")]
    pub line_inductance: Option<f64>,
    #[serde(rename = "L3", default, skip_serializing_if = "Option::is_none")]
    pub tie_inductance: Option<f64>,
    #[serde(rename = "b", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(rename = "M_f", default, skip_serializing_if = "Option::is_none")]
    pub mutual_inductance: Option<f64>,
    #[serde(rename = "i_f", default, skip_serializing_if = "Option::is_none")]
    pub rotor_current: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_frame")]
    pub frame: Frame,
    /// Initial speed with zero currents and angles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    /// Full initial state in the chosen frame; overrides `omega0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default = "default_horizon")]
    pub t_end: f64,
    #[serde(default = "default_sim_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_record_interval")]
    pub record_interval: f64,
    /// Basin sweep `start:stop:step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            frame: default_frame(),
            omega0: None,
            initial: None,
            t_end: default_horizon(),
            tolerance: default_sim_tolerance(),
            record_interval: default_record_interval(),
            grid: None,
        }
    }
}

fn default_frame() -> Frame {
    Frame::Dq
}
fn default_horizon() -> f64 {
    200.0
}
fn default_sim_tolerance() -> f64 {
    1e-10
}
fn default_record_interval() -> f64 {
    0.1
}
fn default_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub system: SystemKind,
    pub params: ParamsSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reduction: Reduction,
    #[serde(default)]
    pub linearization: LinearizationVariant,
    /// Relative residual an emitted equilibrium must meet.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
}

pub fn parse_config(text: &str) -> Result<AnalysisConfig, CliError> {
    let cfg: AnalysisConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.resolve()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<AnalysisConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn need(v: Option<f64>, field: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing field `{field}`")))
}

fn forbid(v: Option<f64>, field: &str, system: &str) -> Result<(), CliError> {
    match v {
        Some(_) => Err(CliError::Config(format!("field `{field}` does not apply to the {system} system"))),
        None => Ok(()),
    }
}

impl ParamsSpec {
    fn excitation(&self) -> Result<ExcitationParams, CliError> {
        match (self.b, self.mutual_inductance, self.rotor_current) {
            (Some(b), None, None) => Ok(ExcitationParams::from_b(b)),
            (None, Some(m), Some(i)) => Ok(ExcitationParams::new(m, i)),
            (None, Some(_), None) => Err(CliError::Config("missing field `i_f`".into())),
            (None, None, Some(_)) => Err(CliError::Config("missing field `M_f`".into())),
            (None, None, None) => Err(CliError::Config("missing field `b` (or `M_f` and `i_f`)".into())),
            _ => Err(CliError::Config("give either `b` or `M_f` and `i_f`, not both".into())),
        }
    }

    fn single(&self) -> Result<SingleMachineParams, CliError> {
        for (v, f) in [
            (self.torque1, "T_m1"),
            (self.torque2, "T_m2"),
            (self.tie_inductance, "L3"),
        ] {
            forbid(v, f, "single")?;
        }
        let (j, d, t) = (need(self.inertia, "J")?, need(self.damping, "D")?, need(self.torque, "T_m")?);
        let exc = self.excitation()?;
        let components = [
            self.stator_resistance,
            self.line_resistance,
            self.load_resistance,
            self.stator_inductance,
            self.line_inductance,
        ];
        let aggregate = self.resistance.is_some() || self.inductance.is_some();
        let component = components.iter().any(Option::is_some);
        let p = match (aggregate, component) {
            (true, true) => {
                return Err(CliError::Config(
                    "give either `R` and `L` or the components `R_s, R_l, R_L, L_s, L_l`, not both".into(),
                ))
            }
            (false, false) => return Err(CliError::Config("missing field `R`".into())),
            (true, false) => SingleMachineParams::with_excitation(
                j,
                d,
                t,
                need(self.resistance, "R")?,
                need(self.inductance, "L")?,
                exc,
            ),
            (false, true) => SingleMachineParams::from_circuit(
                j,
                d,
                t,
                SeriesCircuit {
                    stator_resistance: need(self.stator_resistance, "R_s")?,
                    line_resistance: need(self.line_resistance, "R_l")?,
                    load_resistance: need(self.load_resistance, "R_L")?,
                    stator_inductance: need(self.stator_inductance, "L_s")?,
                    line_inductance: need(self.line_inductance, "L_l")?,
                },
                exc,
            ),
        };
        p.map_err(|e| CliError::Config(e.to_string()))
    }

    fn two(&self) -> Result<TwoMachineParams, CliError> {
        for (v, f) in [
            (self.torque, "T_m"),
            (self.line_resistance, "R_l"),
            (self.stator_inductance, "L_s"),
            (self.line_inductance, "L_l"),
        ] {
            forbid(v, f, "two-machine")?;
        }
        let exc = self.excitation()?;
        let j = need(self.inertia, "J")?;
        let d = need(self.damping, "D")?;
        let t1 = need(self.torque1, "T_m1")?;
        let t2 = need(self.torque2, "T_m2")?;
        let rl = need(self.load_resistance, "R_L")?;
        let l = need(self.inductance, "L")?;
        let l3 = need(self.tie_inductance, "L3")?;
        let p = match (self.resistance, self.stator_resistance) {
            (Some(r), None) => TwoMachineParams::from_total_resistance(j, d, t1, t2, r, rl, l, l3, 0.0),
            (None, Some(rs)) => TwoMachineParams::new(j, d, t1, t2, rs, rl, l, l3, 0.0),
            (Some(_), Some(_)) => return Err(CliError::Config("give either `R` or `R_s`, not both".into())),
            (None, None) => return Err(CliError::Config("missing field `R` (or `R_s`)".into())),
        };
        p.and_then(|p| p.with_excitation(exc)).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl AnalysisConfig {
    /// Validated physical model.
    pub fn resolve(&self) -> Result<SystemModel, CliError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(CliError::Config(format!("tolerance must be positive (got {})", self.tolerance)));
        }
        match self.system {
            SystemKind::Single => Ok(SystemModel::Single(self.params.single()?)),
            SystemKind::Two => Ok(SystemModel::Two(self.params.two()?)),
        }
    }
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Config(format!("grid must be start:stop:step (got `{spec}`)"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let (a, b, h) = (nums[0], nums[1], nums[2]);
    if !(h > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
        return Err(bad());
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * h).collect())
}
