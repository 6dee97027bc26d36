//! Configuration, orchestration and reporting behind the `synchro` binary.

pub mod config;
pub mod report;

use synchro_core::numerics::{IntegratorOptions, Method, Record, SteadyState};
use synchro_core::sim::{basin_probe, simulate, BasinOptions, SimConfig, SystemModel};
use synchro_core::single::{solve_single_equilibria, stability_single, SingleMachineParams};
use synchro_core::two::{
    tabulated_zero_sharing, solve_two_equilibria, stability_two, Reduction, TwoMachineParams, TwoSolveOptions,
    TwoVerdict,
};
use thiserror::Error;

pub use config::{load_config, parse_config, parse_grid, AnalysisConfig, ParamsSpec, SimulationSpec, SystemKind};
pub use report::{Command, Report, SingleAnalysis, SummaryRow, TwoAnalysis};

pub const TOOL: &str = "synchro";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Inconsistency(_) => 3,
        }
    }
}

impl From<synchro_core::Error> for CliError {
    fn from(e: synchro_core::Error) -> Self {
        use synchro_core::Error as E;
        match e {
            E::NonFinite(_) | E::InvalidParameter(_) | E::InsufficientData(_) => CliError::Config(e.to_string()),
            E::Inconsistency(_) => CliError::Inconsistency(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub omega0: Option<f64>,
    pub grid: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut AnalysisConfig) -> Result<(), CliError> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tolerance {
            cfg.tolerance = t;
        }
        if self.omega0.is_some() || self.grid.is_some() {
            let sim = cfg.simulation.get_or_insert_with(SimulationSpec::default);
            if let Some(w) = self.omega0 {
                sim.omega0 = Some(w);
                sim.initial = None;
            }
            if let Some(g) = &self.grid {
                sim.grid = Some(g.clone());
            }
        }
        cfg.resolve().map(|_| ())
    }
}

fn two_options(cfg: &AnalysisConfig) -> TwoSolveOptions {
    TwoSolveOptions {
        seed: cfg.seed,
        residual_tolerance: cfg.tolerance,
        ..TwoSolveOptions::with_reduction(cfg.reduction)
    }
}

fn analyze_single(
    p: &SingleMachineParams,
    cfg: &AnalysisConfig,
    with_stability: bool,
) -> Result<SingleAnalysis, CliError> {
    let solution = solve_single_equilibria(p)?;
    for e in &solution.equilibria {
        if !(e.residual_norm <= cfg.tolerance) {
            return Err(CliError::Inconsistency(format!(
                "equilibrium at omega = {} has relative residual {:e} above {:e}",
                e.omega, e.residual_norm, cfg.tolerance
            )));
        }
    }
    let stability = if with_stability {
        Some(
            solution
                .equilibria
                .iter()
                .map(|e| stability_single(e, p, cfg.linearization))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };
    Ok(SingleAnalysis { solution, stability })
}

fn analyze_two(p: &TwoMachineParams, cfg: &AnalysisConfig, with_stability: bool) -> Result<TwoAnalysis, CliError> {
    let solution = solve_two_equilibria(p, &two_options(cfg))?;
    let roots: Vec<f64> = solution.equilibria.iter().map(|e| e.omega).collect();
    let tabulated = tabulated_zero_sharing(p, &roots);
    let stability = if with_stability {
        Some(solution.equilibria.iter().map(|e| stability_two(e, p)).collect::<Result<Vec<_>, _>>()?)
    } else {
        None
    };
    Ok(TwoAnalysis { solution, stability, tabulated })
}

fn blank_report(cfg: &AnalysisConfig, command: Command) -> Result<Report, CliError> {
    Ok(Report {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed: cfg.seed,
        config: cfg.clone(),
        model: cfg.resolve()?,
        single: None,
        two: None,
        trajectory: None,
        basin: None,
        warnings: Vec::new(),
    })
}

/// Runs `command` on a validated configuration.
pub fn run_analysis(cfg: &AnalysisConfig, command: Command) -> Result<Report, CliError> {
    let mut report = blank_report(cfg, command)?;
    match command {
        Command::Equilibria | Command::Stability => {
            let with_stability = command == Command::Stability;
            match report.model {
                SystemModel::Single(p) => report.single = Some(analyze_single(&p, cfg, with_stability)?),
                SystemModel::Two(p) => {
                    let two = analyze_two(&p, cfg, with_stability)?;
                    if !two.tabulated.shares_zeros && !two.tabulated.roots.is_empty() {
                        report
                            .warnings
                            .push("tabulated closed-form polynomial does not vanish at the computed speeds".into());
                    }
                    if let Some(st) = &two.stability {
                        if let Some(worst) = st.iter().map(|r| r.finite_difference_mismatch).reduce(f64::max) {
                            if worst > 1e-6 {
                                report.warnings.push(format!(
                                    "analytic Jacobian differs from finite differences by {worst:e}"
                                ));
                            }
                        }
                    }
                    report.two = Some(two);
                }
            }
        }
        Command::Simulate => report.trajectory = Some(run_simulation(cfg, &report.model)?),
        Command::Basin => {
            let SystemModel::Single(p) = report.model else {
                return Err(CliError::Config("basin probes are available for the single machine only".into()));
            };
            let sim = cfg.simulation.clone().unwrap_or_default();
            let grid = sim
                .grid
                .as_deref()
                .ok_or_else(|| CliError::Config("missing field `simulation.grid` (or --grid)".into()))?;
            let omega0 = parse_grid(grid)?;
            let opts = BasinOptions { horizon: sim.t_end, tolerance: sim.tolerance, ..BasinOptions::default() };
            report.basin = Some(basin_probe(&p, &omega0, &opts)?);
        }
    }
    Ok(report)
}

fn run_simulation(cfg: &AnalysisConfig, model: &SystemModel) -> Result<synchro_core::sim::Trajectory, CliError> {
    let sim = cfg
        .simulation
        .clone()
        .ok_or_else(|| CliError::Config("missing field `simulation` (or --omega0)".into()))?;
    let names = model.state_names(sim.frame);
    let initial = match (&sim.initial, sim.omega0) {
        (Some(x), _) => x.clone(),
        (None, Some(w)) => names.iter().map(|n| if n.starts_with("omega") { w } else { 0.0 }).collect(),
        (None, None) => {
            return Err(CliError::Config("missing field `simulation.omega0` or `simulation.initial`".into()))
        }
    };
    if !(sim.record_interval > 0.0) || !(sim.t_end > 0.0) || !(sim.tolerance > 0.0) {
        return Err(CliError::Config(
            "simulation.t_end, simulation.tolerance and simulation.record_interval must be positive".into(),
        ));
    }
    let mut integrator = IntegratorOptions::new(Method::rk45(sim.tolerance), sim.t_end);
    integrator.record = Record::Interval(sim.record_interval);
    integrator.steady_state = Some(SteadyState::new(Some(model.settling_components(sim.frame))));
    Ok(simulate(&SimConfig { model: *model, frame: sim.frame, initial, integrator })?)
}

/// Problems found in an otherwise complete report that warrant a nonzero
/// exit.
pub fn report_problems(report: &Report) -> Option<CliError> {
    let oracle = report.two.as_ref()?.solution.oracle.as_ref()?;
    (!oracle.agree).then(|| {
        CliError::Inconsistency(format!(
            "polynomial and Newton routes disagree: {} unmatched polynomial, {} unmatched Newton equilibria",
            oracle.polynomial_only.len(),
            oracle.newton_only.len()
        ))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn case1_config() -> AnalysisConfig {
    parse_config(r#"{"system": "single", "params": {"J": 1, "D": 1, "T_m": 9, "R": 1, "L": 1, "b": 4}}"#)
        .expect("built-in config")
}

fn case2_config(reduction: Reduction) -> AnalysisConfig {
    let mut cfg = parse_config(
        r#"{"system": "two", "params": {"J": 1, "D": 9, "T_m1": 2910, "T_m2": 2800,
            "R": 1010, "R_L": 1000, "L": 0.041, "L3": 0.04, "b": 5}}"#,
    )
    .expect("built-in config");
    cfg.reduction = reduction;
    cfg
}

/// Built-in regression on the two reference cases.
pub fn run_check() -> Vec<CheckLine> {
    let mut lines = Vec::new();
    let mut push = |name, result: Result<(bool, String), CliError>| {
        let (pass, detail) = result.unwrap_or_else(|e| (false, e.to_string()));
        lines.push(CheckLine { name, pass, detail });
    };

    push("single machine, three equilibria", {
        run_analysis(&case1_config(), Command::Stability).map(|r| {
            let s7 = 7f64.sqrt();
            let expected = [1.0, 4.0 - s7, 4.0 + s7];
            let rows = r.summary();
            let speeds_ok = rows.len() == 3
                && rows.iter().zip(expected).all(|(row, w)| (row.omega - w).abs() <= 1e-9);
            let verdicts: Vec<&str> = rows.iter().map(|row| row.verdict.unwrap_or("")).collect();
            let verdicts_ok = verdicts == ["linearly_stable", "unstable", "linearly_stable"];
            (speeds_ok && verdicts_ok, format!("omega = {:?}, verdicts = {verdicts:?}", rows.iter().map(|x| x.omega).collect::<Vec<_>>()))
        })
    });

    push("two machines, published speeds and verdicts", {
        run_analysis(&case2_config(Reduction::HalfGain), Command::Stability).map(|r| {
            let two = r.two.as_ref().expect("two-machine analysis");
            let st = two.stability.as_ref().expect("stability");
            let speeds: Vec<f64> = two.solution.equilibria.iter().map(|e| e.omega).collect();
            let ok = speeds.len() == 2
                && (speeds[0] - 309.0166).abs() <= 1e-3
                && (speeds[1] - 315.5902).abs() <= 1e-3
                && st[0].verdict != TwoVerdict::LocallyStable
                && st[1].verdict == TwoVerdict::LocallyStable;
            (ok, format!("omega = {speeds:?}"))
        })
    });

    push("two machines, Newton oracle agrees", {
        run_analysis(&case2_config(Reduction::HalfGain), Command::Equilibria).map(|r| {
            let oracle = r.two.as_ref().and_then(|t| t.solution.oracle.clone());
            match oracle {
                Some(o) => (o.agree, format!("{} starts, {} matched", o.starts, o.matched)),
                None => (false, "oracle did not run".into()),
            }
        })
    });

    push("two machines, exact reduction", {
        run_analysis(&case2_config(Reduction::Exact), Command::Stability).map(|r| {
            let two = r.two.as_ref().expect("two-machine analysis");
            let verdicts: Vec<TwoVerdict> =
                two.stability.as_ref().expect("stability").iter().map(|s| s.verdict).collect();
            let agree = two.solution.oracle.as_ref().is_some_and(|o| o.agree);
            (
                agree && verdicts == [TwoVerdict::Unstable, TwoVerdict::LocallyStable],
                format!(
                    "omega = {:?}",
                    two.solution.equilibria.iter().map(|e| e.omega).collect::<Vec<_>>()
                ),
            )
        })
    });
    lines
}
