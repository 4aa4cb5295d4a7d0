//! Minimum-time and penalty-optimal path planning for a constant-speed
//! holonomic vehicle that must deal with a cardioid-shaped, heading-dependent
//! keepout region (the "engagement zone") anchored at the origin.
//!
//! The crate provides:
//!
//! * [`ez`] — the engagement-zone geometry: aspect/line-of-sight angles,
//!   range, the cardioid radius model, the hard path constraint and the
//!   soft proximity penalty.
//! * [`analytic`] — closed-form results used both as solvers and as
//!   independent oracles: the straight-line minimum-time solution, the
//!   boundary-riding heading roots, and the first-order necessary
//!   conditions (costate rates, stationarity) for the penalty formulation.
//! * [`collocation`] — a Legendre-Gauss-Radau pseudospectral grid and the
//!   transcription of the four optimal control problems into
//!   finite-dimensional NLPs.
//! * [`solver`] — a self-contained derivative-free trust-region solver for
//!   constrained problems, in the style of linear-approximation methods.
//! * [`scenario`] — assembly of the four problem variants (A: min time,
//!   B: min time avoiding the zone, C: min time with proximity penalty,
//!   D: fixed arrival time with proximity penalty) plus sweeps and
//!   cross-checks.
//!
//! All quantities are nondimensional: lengths in DU, times in TU, angles in
//! radians. The engagement-zone origin is fixed at (0, 0); problems with a
//! different zone origin should be translated into this frame first.

pub mod analytic;
pub mod collocation;
pub mod ez;
pub mod scenario;
pub mod solver;

pub use ez::{EngagementZone, VehicleState};
pub use scenario::{ScenarioKind, ScenarioSpec, SolveReport};

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A state is too close to the zone origin for the line-of-sight angle
    /// (and anything derived from it) to be well defined.
    #[error("state within {eps:e} DU of the engagement-zone origin (d = {d:e})")]
    OriginSingularity { d: f64, eps: f64 },
    /// Maximum range of the engagement zone must be strictly positive.
    #[error("engagement zone r_max must be finite and > 0 (got {r_max})")]
    NonpositiveRange { r_max: f64 },
    /// Start and goal coincide, so no heading is defined.
    #[error("start and goal coincide; heading undefined")]
    DegenerateBoundary,
    /// Vehicle speed must be strictly positive.
    #[error("speed must be finite and > 0 (got {v})")]
    NonpositiveSpeed { v: f64 },
    /// No heading keeps the vehicle on the zone boundary at this state.
    #[error("no boundary heading exists at this state (discriminant {disc:e})")]
    NoBoundaryHeading { disc: f64 },
    /// Both boundary roots are orthogonal to the travel direction.
    #[error("boundary-root selection is ambiguous: both roots orthogonal to travel direction")]
    AmbiguousRoot,
    /// Closed-form control argument left the arccos domain.
    #[error("arccos argument {arg} outside [-1, 1]")]
    ArccosDomain { arg: f64 },
    /// A Hamiltonian multiplier violates the complementarity sign rules.
    #[error("invalid inequality multiplier mu = {mu} for constraint value c = {c}")]
    InvalidMultiplier { mu: f64, c: f64 },
    /// Collocation grid construction failed.
    #[error("collocation grid construction failed: {reason}")]
    GridBuild { reason: String },
    /// The NLP solver could not produce a usable result.
    #[error("solver numerical failure: {reason}")]
    NumericalFailure { reason: String },
    /// The NLP solver finished without reaching feasibility.
    #[error("solver finished infeasible (max constraint violation {violation:e})")]
    Infeasible { violation: f64 },
    /// Every multistart run failed.
    #[error("all multistart runs failed")]
    AllRunsFailed,
    /// Requested arrival time is outside the admissible bracket.
    #[error("arrival time {t_go} outside [{t_min}, {t_max})")]
    BadArrivalTime { t_go: f64, t_min: f64, t_max: f64 },
    /// Scenario specification is inconsistent.
    #[error("invalid scenario spec: {reason}")]
    InvalidSpec { reason: String },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
