//! Command-line front end: parse one JSON run configuration, solve the
//! requested scenario(s), and emit machine-readable trajectories, a summary
//! file, and static SVG plots.

pub mod config;
pub mod emit;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ez_avoid::scenario::{
    solve_scenario_a, solve_scenario_b, solve_scenario_c, solve_scenario_d, sweep_c,
    OracleCheck, ScenarioKind, ScenarioSpec, SolveReport, SolverOptions, ViolationSummary,
};
use ez_avoid::solver::{SolveCode, SolveStatus};
use ez_avoid::{EngagementZone, VehicleState};

pub use config::{Format, RunConfig, ScenarioChoice};
pub use emit::emit_trajectory;

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum RunError {
    /// Bad configuration (exit 1).
    Config(String),
    /// Solver could not produce the requested solution (exit 2).
    Solver(String),
    /// Filesystem trouble (exit 3).
    Io(io::Error),
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

fn classify(e: ez_avoid::Error) -> RunError {
    use ez_avoid::Error::*;
    match e {
        InvalidSpec { .. } | NonpositiveSpeed { .. } | DegenerateBoundary
        | NonpositiveRange { .. } | BadArrivalTime { .. } | GridBuild { .. } => {
            RunError::Config(e.to_string())
        }
        _ => RunError::Solver(e.to_string()),
    }
}

#[derive(Debug, Serialize)]
struct SummaryEntry {
    scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_ez: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_go: Option<f64>,
    tf: f64,
    objective: f64,
    status: SolveStatus,
    violations: ViolationSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    arc_pattern: Option<String>,
    oracle_checks: Vec<OracleCheck>,
}

impl SummaryEntry {
    fn from_report(label: &str, r: &SolveReport) -> Self {
        Self {
            scenario: label.to_string(),
            k_ez: r.spec.k_ez,
            t_go: r.spec.t_go,
            tf: r.tf,
            objective: r.objective,
            status: r.status,
            violations: r.violations,
            arc_pattern: r.arc_pattern.clone(),
            oracle_checks: r.oracle_checks.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct SweepMonotonicity {
    gains: Vec<f64>,
    arrival_times: Vec<f64>,
    penalty_integrals: Vec<f64>,
    arrival_time_nondecreasing: bool,
    penalty_integral_nonincreasing: bool,
}

#[derive(Debug, Serialize)]
struct Summary {
    config: RunConfig,
    entries: Vec<SummaryEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepMonotonicity>,
}

fn build_spec(kind: ScenarioKind, config: &RunConfig) -> Result<ScenarioSpec, RunError> {
    let ez = EngagementZone::new(config.r_max).map_err(classify)?;
    let x0 = VehicleState::new(config.x0[0], config.x0[1]);
    let xf = VehicleState::new(config.xf[0], config.xf[1]);
    let spec = match kind {
        ScenarioKind::A => ScenarioSpec::min_time(x0, xf, config.speed, ez),
        ScenarioKind::B => ScenarioSpec::avoid_zone(x0, xf, config.speed, ez),
        ScenarioKind::C => ScenarioSpec::penalized(x0, xf, config.speed, ez, config.k_ez),
        ScenarioKind::D => ScenarioSpec::fixed_arrival(x0, xf, config.speed, ez, config.t_go),
    }
    .map_err(classify)?;
    spec.with_grid_m(config.grid_m).map_err(classify)
}

fn solver_options(config: &RunConfig) -> SolverOptions {
    SolverOptions {
        rho_begin: config.solver.rho_begin,
        rho_end: config.solver.rho_end,
        max_evals: config.solver.max_evals,
        restarts: config.solver.restarts,
        jitter: config.solver.jitter,
        seed: config.seed,
    }
}

fn emit_all(report: &SolveReport, config: &RunConfig, base: &Path) -> Result<(), RunError> {
    for &format in &config.formats {
        emit_trajectory(report, format, base)?;
    }
    Ok(())
}

fn penalty_integral(r: &SolveReport) -> f64 {
    match r.spec.k_ez {
        Some(k) if k > 0.0 => (r.objective - r.tf) / k,
        _ => r
            .oracle_checks
            .iter()
            .find(|c| c.name == "penalty_integral")
            .map(|c| c.value)
            .unwrap_or(f64::NAN),
    }
}

/// Execute one configuration. On success, returns whether every solve
/// converged.
pub fn run(config: &RunConfig) -> Result<bool, RunError> {
    fs::create_dir_all(&config.output_dir)?;
    let opts = solver_options(config);
    let out = |name: &str| -> PathBuf { config.output_dir.join(name) };

    let mut entries: Vec<SummaryEntry> = Vec::new();
    let mut sweep_block = None;
    let mut reports: Vec<(String, SolveReport)> = Vec::new();

    match config.scenario {
        ScenarioChoice::A => {
            let r = solve_scenario_a(&build_spec(ScenarioKind::A, config)?, &opts)
                .map_err(classify)?;
            emit_all(&r, config, &out("scenario_a"))?;
            entries.push(SummaryEntry::from_report("A", &r));
            reports.push(("A".into(), r));
        }
        ScenarioChoice::B => {
            let r = solve_scenario_b(&build_spec(ScenarioKind::B, config)?, &opts)
                .map_err(classify)?;
            emit_all(&r, config, &out("scenario_b"))?;
            entries.push(SummaryEntry::from_report("B", &r));
            reports.push(("B".into(), r));
        }
        ScenarioChoice::C => {
            let r = solve_scenario_c(&build_spec(ScenarioKind::C, config)?, &opts)
                .map_err(classify)?;
            emit_all(&r, config, &out("scenario_c"))?;
            entries.push(SummaryEntry::from_report("C", &r));
            reports.push(("C".into(), r));
        }
        ScenarioChoice::D => {
            let r = solve_scenario_d(&build_spec(ScenarioKind::D, config)?, &opts)
                .map_err(classify)?;
            emit_all(&r, config, &out("scenario_d"))?;
            entries.push(SummaryEntry::from_report("D", &r));
            reports.push(("D".into(), r));
        }
        ScenarioChoice::SweepC => {
            let spec = build_spec(ScenarioKind::C, config)?;
            let results = sweep_c(&spec, &config.k_ez_sweep, &opts).map_err(classify)?;
            let mut tfs = Vec::new();
            let mut integrals = Vec::new();
            for r in &results {
                let k = r.spec.k_ez.expect("sweep entries carry a gain");
                let label = format!("C k={k}");
                emit_all(r, config, &out(&format!("scenario_c_k{k}")))?;
                entries.push(SummaryEntry::from_report(&label, r));
                tfs.push(r.tf);
                integrals.push(penalty_integral(r));
                reports.push((label, r.clone()));
            }
            sweep_block = Some(SweepMonotonicity {
                gains: config.k_ez_sweep.clone(),
                arrival_times: tfs.clone(),
                penalty_integrals: integrals.clone(),
                arrival_time_nondecreasing: tfs.windows(2).all(|w| w[1] >= w[0] - 1e-9),
                penalty_integral_nonincreasing: integrals
                    .windows(2)
                    .all(|w| w[1] <= w[0] + 1e-9),
            });
            if config.formats.contains(&Format::Svg) {
                let refs: Vec<(String, &SolveReport)> = reports
                    .iter()
                    .map(|(label, r)| (label.clone(), r))
                    .collect();
                fs::write(out("scenario_c_sweep.svg"), emit::render_svg(&refs))?;
            }
        }
        ScenarioChoice::All => {
            let a = solve_scenario_a(&build_spec(ScenarioKind::A, config)?, &opts)
                .map_err(classify)?;
            let b = solve_scenario_b(&build_spec(ScenarioKind::B, config)?, &opts)
                .map_err(classify)?;
            let c = solve_scenario_c(&build_spec(ScenarioKind::C, config)?, &opts)
                .map_err(classify)?;
            let d = solve_scenario_d(&build_spec(ScenarioKind::D, config)?, &opts)
                .map_err(classify)?;
            for (name, label, r) in [
                ("scenario_a", "A", &a),
                ("scenario_b", "B", &b),
                ("scenario_c", "C", &c),
                ("scenario_d", "D", &d),
            ] {
                emit_all(r, config, &out(name))?;
                entries.push(SummaryEntry::from_report(label, r));
            }
            reports.push(("A".into(), a));
            reports.push(("B".into(), b));
            reports.push((format!("C k={}", config.k_ez), c));
            reports.push((format!("D t_go={}", config.t_go), d));
            if config.formats.contains(&Format::Svg) {
                let refs: Vec<(String, &SolveReport)> = reports
                    .iter()
                    .map(|(label, r)| (label.clone(), r))
                    .collect();
                fs::write(out("all_scenarios.svg"), emit::render_svg(&refs))?;
            }
        }
    }

    let all_converged = entries
        .iter()
        .all(|e| e.status.code == SolveCode::Converged);
    let summary = Summary {
        config: config.clone(),
        entries,
        sweep: sweep_block,
    };
    let mut text = serde_json::to_string_pretty(&summary).map_err(io::Error::from)?;
    text.push('\n');
    fs::write(out("summary.json"), text)?;
    Ok(all_converged)
}
