//! Run configuration: a single JSON document with defaults matching the
//! reference problem instance. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Which solve(s) to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum ScenarioChoice {
    A,
    B,
    C,
    D,
    #[serde(rename = "sweep-C")]
    #[clap(name = "sweep-C")]
    SweepC,
    #[serde(rename = "all")]
    #[clap(name = "all")]
    All,
}

/// Output file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Solver tuning block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rho_begin: f64,
    pub rho_end: f64,
    pub max_evals: usize,
    pub restarts: usize,
    pub jitter: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho_begin: 0.5,
            rho_end: 1e-6,
            max_evals: 20_000,
            restarts: 1,
            jitter: 0.3,
        }
    }
}

/// Full run configuration. All fields default to the reference instance:
/// start (1, 3), goal (-0.5, -3), unit speed, zone reach 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: ScenarioChoice,
    /// Start position [DU].
    pub x0: [f64; 2],
    /// Goal position [DU].
    pub xf: [f64; 2],
    /// Vehicle speed [DU/TU].
    pub speed: f64,
    /// Maximum zone reach [DU].
    pub r_max: f64,
    /// Penalty gain (scenario C).
    pub k_ez: f64,
    /// Gains for the sweep run.
    pub k_ez_sweep: Vec<f64>,
    /// Required arrival time [TU] (scenario D).
    pub t_go: f64,
    /// Collocation node count.
    pub grid_m: usize,
    /// Seed for jittered restarts.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub solver: SolverConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioChoice::A,
            x0: [1.0, 3.0],
            xf: [-0.5, -3.0],
            speed: 1.0,
            r_max: 2.0,
            k_ez: 1.0,
            k_ez_sweep: vec![0.1, 1.0, 10.0, 100.0],
            t_go: 6.25,
            grid_m: 19,
            seed: 0,
            output_dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
            solver: SolverConfig::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_instance() {
        let c = RunConfig::default();
        assert_eq!(c.x0, [1.0, 3.0]);
        assert_eq!(c.xf, [-0.5, -3.0]);
        assert_eq!(c.speed, 1.0);
        assert_eq!(c.r_max, 2.0);
        assert_eq!(c.grid_m, 19);
        assert_eq!(c.t_go, 6.25);
    }

    #[test]
    fn empty_document_parses_to_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"spede": 2.0}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<RunConfig>(r#"{"solver": {"rho": 1.0}}"#);
        assert!(err.is_err());
    }

    #[test]
    fn sweep_scenario_name_round_trips() {
        let c: RunConfig = serde_json::from_str(r#"{"scenario": "sweep-C"}"#).unwrap();
        assert_eq!(c.scenario, ScenarioChoice::SweepC);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("sweep-C"));
    }
}
