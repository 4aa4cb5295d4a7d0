//! Assembly of the four trajectory problems into transcribed NLPs, the
//! solve orchestration (initial guesses, candidate starts, arrival-time
//! brackets, gain sweeps), and the reporting layer with built-in oracle
//! cross-checks.

use std::cell::RefCell;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::analytic::{
    boundary_heading_roots, scenario_a_heading, scenario_a_time, select_boundary_root,
};
pub use crate::analytic::ScenarioKind;
use crate::collocation::{
    build_grid, CollocationGrid, DecisionVector, Transcription, DEFAULT_NODE_COUNT,
};
use crate::ez::{
    aspect_angle, constraint_c, distance, rho_max, wrap_angle, EngagementZone, VehicleState,
    EPS_D,
};
use crate::solver::{
    multistart, solve_from, NlpProblem, SolveCode, SolveStatus, EQ_TOL, FEAS_TOL,
};
use crate::{Error, Result};

/// Number of rows in the dense trajectory resampling (10^3 + 1).
pub const DENSE_SAMPLES: usize = 1001;

/// Nodes with a path-constraint value above this are treated as riding the
/// zone boundary when segmenting arcs.
pub const ACTIVE_ARC_TOL: f64 = 1e-4;

/// One of the four problem variants, fully parameterized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub x0: VehicleState,
    pub xf: VehicleState,
    /// Vehicle speed [DU/TU].
    pub v: f64,
    pub ez: EngagementZone,
    /// Penalty gain; present for the penalized-time variant only.
    pub k_ez: Option<f64>,
    /// Required arrival time [TU]; present for the fixed-arrival variant.
    pub t_go: Option<f64>,
    /// Number of LGR collocation nodes.
    pub grid_m: usize,
}

impl ScenarioSpec {
    fn validate_common(x0: VehicleState, xf: VehicleState, v: f64) -> Result<()> {
        if !(x0.x.is_finite() && x0.y.is_finite() && xf.x.is_finite() && xf.y.is_finite()) {
            return Err(Error::InvalidSpec {
                reason: "boundary states must be finite".into(),
            });
        }
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::NonpositiveSpeed { v });
        }
        if x0 == xf {
            return Err(Error::DegenerateBoundary);
        }
        Ok(())
    }

    /// Minimum-time arrival, zone ignored.
    pub fn min_time(
        x0: VehicleState,
        xf: VehicleState,
        v: f64,
        ez: EngagementZone,
    ) -> Result<Self> {
        Self::validate_common(x0, xf, v)?;
        Ok(Self {
            kind: ScenarioKind::A,
            x0,
            xf,
            v,
            ez,
            k_ez: None,
            t_go: None,
            grid_m: DEFAULT_NODE_COUNT,
        })
    }

    /// Minimum-time arrival with the zone as a hard constraint.
    ///
    /// Both endpoints must be clear of the origin; endpoints within the
    /// zone's maximum reach are allowed (feasibility there depends on the
    /// heading) but logged as a warning.
    pub fn avoid_zone(
        x0: VehicleState,
        xf: VehicleState,
        v: f64,
        ez: EngagementZone,
    ) -> Result<Self> {
        Self::validate_common(x0, xf, v)?;
        for (label, s) in [("start", x0), ("goal", xf)] {
            let d = distance(s);
            if d <= EPS_D {
                return Err(Error::InvalidSpec {
                    reason: format!("{label} sits on the zone origin"),
                });
            }
            if d <= ez.r_max {
                log::warn!(
                    "{label} lies within the zone's maximum reach (d = {d:.3}, r_max = {});
                     some headings are infeasible there",
                    ez.r_max
                );
            }
        }
        Ok(Self {
            kind: ScenarioKind::B,
            x0,
            xf,
            v,
            ez,
            k_ez: None,
            t_go: None,
            grid_m: DEFAULT_NODE_COUNT,
        })
    }

    /// Minimum time plus a proximity penalty weighted by `k_ez >= 0`.
    pub fn penalized(
        x0: VehicleState,
        xf: VehicleState,
        v: f64,
        ez: EngagementZone,
        k_ez: f64,
    ) -> Result<Self> {
        Self::validate_common(x0, xf, v)?;
        if !k_ez.is_finite() || k_ez < 0.0 {
            return Err(Error::InvalidSpec {
                reason: format!("penalty gain must be >= 0, got {k_ez}"),
            });
        }
        Ok(Self {
            kind: ScenarioKind::C,
            x0,
            xf,
            v,
            ez,
            k_ez: Some(k_ez),
            t_go: None,
            grid_m: DEFAULT_NODE_COUNT,
        })
    }

    /// Minimum proximity penalty with the arrival time fixed to `t_go`.
    /// The admissible bracket for `t_go` is checked at solve time, once the
    /// zone-avoiding arrival time is known.
    pub fn fixed_arrival(
        x0: VehicleState,
        xf: VehicleState,
        v: f64,
        ez: EngagementZone,
        t_go: f64,
    ) -> Result<Self> {
        Self::validate_common(x0, xf, v)?;
        if !t_go.is_finite() || t_go <= 0.0 {
            return Err(Error::InvalidSpec {
                reason: format!("arrival time must be positive, got {t_go}"),
            });
        }
        Ok(Self {
            kind: ScenarioKind::D,
            x0,
            xf,
            v,
            ez,
            k_ez: None,
            t_go: Some(t_go),
        grid_m: DEFAULT_NODE_COUNT,
        })
    }

    /// Override the collocation node count.
    pub fn with_grid_m(mut self, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSpec {
                reason: format!("need at least 2 collocation nodes, got {m}"),
            });
        }
        self.grid_m = m;
        Ok(self)
    }
}

/// Solver tuning shared by all scenario solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rho_begin: f64,
    pub rho_end: f64,
    pub max_evals: usize,
    /// Multistart runs per candidate initial guess.
    pub restarts: usize,
    /// Uniform jitter half-width applied to restarted initial points.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho_begin: 0.5,
            rho_end: 1e-6,
            max_evals: 20_000,
            restarts: 1,
            jitter: 0.3,
            seed: 0,
        }
    }
}

/// Trajectory sample at one time stamp, with the zone quantities evaluated
/// alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub d: f64,
    pub rho_max: f64,
    pub c: f64,
    pub g_ez: f64,
}

/// Worst-case constraint and defect magnitudes of a solved trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationSummary {
    pub max_node_path: f64,
    pub max_dense_path: f64,
    pub max_node_penalty: f64,
    pub max_dense_penalty: f64,
    pub max_defect: f64,
    pub terminal: [f64; 2],
}

/// One named cross-check; `passed` is `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Inter-node path samples may dip inside by this much; node constraints
/// stay exact so boundary-riding nodes remain identifiable.
fn refined_margin(ez: &EngagementZone) -> f64 {
    2.5e-3 * ez.r_max
}

fn check(name: &str, value: f64, threshold: f64) -> OracleCheck {
    OracleCheck {
        name: name.to_string(),
        value,
        threshold,
        passed: value <= threshold,
    }
}

// informational entry; f64::MAX rather than infinity so reports stay
// JSON-serializable
fn info(name: &str, value: f64) -> OracleCheck {
    OracleCheck {
        name: name.to_string(),
        value,
        threshold: f64::MAX,
        passed: true,
    }
}

/// Full result of one scenario solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub spec: ScenarioSpec,
    pub tf: f64,
    pub objective: f64,
    pub status: SolveStatus,
    pub seed: u64,
    /// Samples at the collocation nodes (endpoint included).
    pub nodes: Vec<TrajectorySample>,
    /// Dense resampling of the interpolated trajectory.
    pub dense: Vec<TrajectorySample>,
    /// Node headings and final time as solved.
    pub decision: DecisionVector,
    pub violations: ViolationSummary,
    /// Unconstrained/constrained arc sequence (zone-avoidance runs only).
    pub arc_pattern: Option<String>,
    pub oracle_checks: Vec<OracleCheck>,
}

/// Arrival-time bracket endpoints: the chord time and the zone-avoiding
/// time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBounds {
    pub t_fa: f64,
    pub t_fb: f64,
}

// ---------------------------------------------------------------------------
// transcription -> NLP packing

struct PackedProblem<'a> {
    trans: Transcription<'a>,
    tf_free: bool,
    /// Reference time used to scale the final-time variable to O(1).
    t_ref: f64,
}

impl<'a> PackedProblem<'a> {
    fn new(grid: &'a CollocationGrid, spec: &'a ScenarioSpec, t_ref: f64) -> Self {
        Self {
            trans: Transcription::new(grid, spec),
            tf_free: spec.kind != ScenarioKind::D,
            t_ref,
        }
    }

    fn pack(&self, dv: &DecisionVector) -> Vec<f64> {
        let mut x = dv.headings.clone();
        if self.tf_free {
            x.push(dv.tf.expect("free-final-time scenario") / self.t_ref);
        }
        x
    }

    fn unpack(&self, x: &[f64]) -> DecisionVector {
        let m1 = self.trans.grid.node_count() + 1;
        DecisionVector {
            headings: x[..m1].to_vec(),
            tf: self.tf_free.then(|| x[m1] * self.t_ref),
        }
    }

    /// Constraint count excluding the final-time box rows.
    fn n_transcription_cons(&self) -> usize {
        4 + if self.trans.spec.kind == ScenarioKind::B {
            self.trans.grid.node_count() + 1 + self.trans.grid.refined_samples().len()
        } else {
            0
        }
    }

    /// Build the solver problem. The objective and every transcription
    /// constraint share one memoized evaluation keyed on the decision
    /// vector, so a solver evaluation costs a single collocation solve.
    fn build_nlp<'b>(&'b self, initial: Vec<f64>, opts: &SolverOptions) -> NlpProblem<'b> {
        type Cache = RefCell<Option<(Vec<f64>, f64, Vec<f64>)>>;
        let cache: Rc<Cache> = Rc::new(RefCell::new(None));
        let n_cons = self.n_transcription_cons();
        let eval: Rc<dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'b> = Rc::new({
            let cache = Rc::clone(&cache);
            move |x: &[f64]| -> (f64, Vec<f64>) {
                if let Some((cx, f, c)) = cache.borrow().as_ref() {
                    if cx.as_slice() == x {
                        return (*f, c.clone());
                    }
                }
                let dv = self.unpack(x);
                let out = match self.trans.evaluate(&dv) {
                    Ok(eval) => {
                        let mut cons = Vec::with_capacity(n_cons);
                        let [hx, hy] = eval.residuals.terminal;
                        cons.push(hx + EQ_TOL);
                        cons.push(EQ_TOL - hx);
                        cons.push(hy + EQ_TOL);
                        cons.push(EQ_TOL - hy);
                        for c in &eval.residuals.path {
                            cons.push(-c);
                        }
                        let margin = refined_margin(&self.trans.spec.ez);
                        for c in &eval.residuals.path_refined {
                            cons.push(margin - c);
                        }
                        (eval.objective, cons)
                    }
                    // a candidate ran through the zone origin; poison it
                    Err(_) => (1e9, vec![-1e9; n_cons]),
                };
                *cache.borrow_mut() = Some((x.to_vec(), out.0, out.1.clone()));
                out
            }
        });

        let objective: crate::solver::EvalFn<'b> = {
            let eval = Rc::clone(&eval);
            Box::new(move |x: &[f64]| eval(x).0)
        };
        let mut cons: Vec<crate::solver::EvalFn<'b>> = Vec::new();
        for i in 0..n_cons {
            let eval = Rc::clone(&eval);
            cons.push(Box::new(move |x: &[f64]| eval(x).1[i]));
        }
        if self.tf_free {
            let m1 = self.trans.grid.node_count() + 1;
            let lb = 1e-3 / self.t_ref;
            cons.push(Box::new(move |x: &[f64]| x[m1] - lb));
            cons.push(Box::new(move |x: &[f64]| 10.0 - x[m1]));
        }

        let mut p = NlpProblem::new(objective, cons, initial);
        p.rho_begin = opts.rho_begin;
        p.rho_end = opts.rho_end;
        p.max_evals = opts.max_evals;
        p
    }
}

fn dominance_better(
    a: &(DecisionVector, SolveStatus, f64),
    b: &(DecisionVector, SolveStatus, f64),
) -> bool {
    let (av, bv) = (
        a.1.max_constraint_violation,
        b.1.max_constraint_violation,
    );
    let af = av <= FEAS_TOL;
    let bf = bv <= FEAS_TOL;
    match (af, bf) {
        (true, true) => a.2 < b.2,
        (true, false) => true,
        (false, true) => false,
        (false, false) => av < bv || (av <= bv && a.2 < b.2),
    }
}

/// Solve from every candidate start and keep the feasibility-first best.
fn run_candidates(
    packed: &PackedProblem,
    candidates: &[DecisionVector],
    opts: &SolverOptions,
) -> Result<(DecisionVector, SolveStatus)> {
    assert!(!candidates.is_empty());
    let mut best: Option<(DecisionVector, SolveStatus, f64)> = None;
    for cand in candidates {
        let x0 = packed.pack(cand);
        let p = packed.build_nlp(x0.clone(), opts);
        let solved = if opts.restarts > 1 {
            multistart(&p, opts.restarts, opts.jitter, opts.seed)
        } else {
            solve_from(&p, &x0)
        };
        let (x, status) = match solved {
            Ok(r) => r,
            Err(Error::NumericalFailure { .. }) => continue,
            Err(e) => return Err(e),
        };
        let f = (p.objective)(&x);
        let dv = packed.unpack(&x);
        let entry = (dv, status, f);
        let replace = match &best {
            None => true,
            Some(b) => dominance_better(&entry, b),
        };
        if replace {
            best = Some(entry);
        }
    }
    best.map(|(dv, status, _)| (dv, status))
        .ok_or(Error::AllRunsFailed)
}

// ---------------------------------------------------------------------------
// initial guesses

fn chord_guess(spec: &ScenarioSpec, grid: &CollocationGrid) -> Result<DecisionVector> {
    let psi = scenario_a_heading(spec.x0, spec.xf)?;
    let t_fa = scenario_a_time(spec.x0, spec.xf, spec.v)?;
    let tf = (spec.kind != ScenarioKind::D).then_some(t_fa);
    Ok(DecisionVector::constant(psi, grid.node_count(), tf))
}

/// True when the straight chord (flown at the chord heading) never violates
/// the path constraint, checked on a dense sampling.
fn chord_is_clear(spec: &ScenarioSpec) -> Result<bool> {
    let psi = scenario_a_heading(spec.x0, spec.xf)?;
    let n = 256;
    for i in 0..=n {
        let f = i as f64 / n as f64;
        let s = VehicleState::new(
            spec.x0.x + f * (spec.xf.x - spec.x0.x),
            spec.x0.y + f * (spec.xf.y - spec.x0.y),
        );
        if distance(s) <= EPS_D {
            return Ok(false);
        }
        if constraint_c(s, psi, &spec.ez)? > 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Chord geometry relative to the zone origin: unit chord direction, chord
/// length, and the unit direction from the origin toward the chord's
/// closest approach (the natural side for a detour).
struct ChordFrame {
    ux: f64,
    uy: f64,
    len: f64,
    wx: f64,
    wy: f64,
}

fn chord_frame(spec: &ScenarioSpec) -> ChordFrame {
    let dx = spec.xf.x - spec.x0.x;
    let dy = spec.xf.y - spec.x0.y;
    let len = dx.hypot(dy);
    let ux = dx / len;
    let uy = dy / len;
    let s_star = (-(spec.x0.x * ux + spec.x0.y * uy)).clamp(0.0, len);
    let fx = spec.x0.x + s_star * ux;
    let fy = spec.x0.y + s_star * uy;
    let fnorm = fx.hypot(fy);
    let (wx, wy) = if fnorm > 1e-9 {
        (fx / fnorm, fy / fnorm)
    } else {
        // chord passes through the origin; either side works, pick the
        // left normal deterministically
        (-uy, ux)
    };
    ChordFrame { ux, uy, len, wx, wy }
}

fn two_leg_headings(
    spec: &ScenarioSpec,
    grid: &CollocationGrid,
    waypoint: VehicleState,
) -> Result<Vec<f64>> {
    let psi1 = scenario_a_heading(spec.x0, waypoint)?;
    let psi2 = scenario_a_heading(waypoint, spec.xf)?;
    let l1 = (waypoint.x - spec.x0.x).hypot(waypoint.y - spec.x0.y);
    let l2 = (spec.xf.x - waypoint.x).hypot(spec.xf.y - waypoint.y);
    let switch = l1 / (l1 + l2);
    Ok(grid
        .all_nodes()
        .iter()
        .map(|&tau| {
            if 0.5 * (tau + 1.0) < switch {
                psi1
            } else {
                psi2
            }
        })
        .collect())
}

/// Two-leg detour around the zone through a waypoint pushed out past the
/// maximum reach, on the side of the chord's closest approach.
fn detour_guess(spec: &ScenarioSpec, grid: &CollocationGrid, t_fa: f64) -> Result<DecisionVector> {
    let frame = chord_frame(spec);
    let radius = 1.2 * spec.ez.r_max;
    let waypoint = VehicleState::new(frame.wx * radius, frame.wy * radius);
    Ok(DecisionVector {
        headings: two_leg_headings(spec, grid, waypoint)?,
        tf: Some(1.2 * t_fa),
    })
}

/// Fixed-arrival guess: a symmetric dogleg whose two legs sum to exactly
/// `v * t_go`, bent away from the zone. Arrives on time by construction,
/// which keeps the terminal constraints well-conditioned (a plain chord
/// start leaves the along-chord mismatch invisible to linearized models).
fn dogleg_guess(spec: &ScenarioSpec, grid: &CollocationGrid, t_go: f64) -> Result<DecisionVector> {
    let frame = chord_frame(spec);
    let half_path = 0.5 * spec.v * t_go;
    let half_chord = 0.5 * frame.len;
    if half_path <= half_chord * (1.0 + 1e-12) {
        let psi = scenario_a_heading(spec.x0, spec.xf)?;
        return Ok(DecisionVector::constant(psi, grid.node_count(), None));
    }
    let offset = (half_path * half_path - half_chord * half_chord).sqrt();
    // perpendicular on the away-from-zone side
    let (mut nx, mut ny) = (-frame.uy, frame.ux);
    if nx * frame.wx + ny * frame.wy < 0.0 {
        nx = -nx;
        ny = -ny;
    }
    let mid = VehicleState::new(
        0.5 * (spec.x0.x + spec.xf.x),
        0.5 * (spec.x0.y + spec.xf.y),
    );
    let apex = VehicleState::new(mid.x + offset * nx, mid.y + offset * ny);
    Ok(DecisionVector {
        headings: two_leg_headings(spec, grid, apex)?,
        tf: None,
    })
}

// ---------------------------------------------------------------------------
// reporting

fn sample_at(
    t: f64,
    s: VehicleState,
    psi: f64,
    ez: &EngagementZone,
) -> Result<TrajectorySample> {
    let xi = aspect_angle(s, psi)?;
    let d = distance(s);
    let rho = rho_max(xi, ez);
    let g = if d <= rho { rho / d - 1.0 } else { 0.0 };
    Ok(TrajectorySample {
        t,
        x: s.x,
        y: s.y,
        psi: wrap_angle(psi),
        d,
        rho_max: rho,
        c: rho - d,
        g_ez: g,
    })
}

fn build_report(
    spec: &ScenarioSpec,
    grid: &CollocationGrid,
    dv: DecisionVector,
    status: SolveStatus,
    opts: &SolverOptions,
    mut oracle_checks: Vec<OracleCheck>,
) -> Result<SolveReport> {
    let eval = Transcription::new(grid, spec).evaluate(&dv)?;
    let tf = eval.tf;

    let mut nodes = Vec::with_capacity(grid.node_count() + 1);
    for (i, &tau) in grid.all_nodes().iter().enumerate() {
        nodes.push(sample_at(
            0.5 * (tau + 1.0) * tf,
            eval.states[i],
            dv.headings[i],
            &spec.ez,
        )?);
    }

    let xs: Vec<f64> = eval.states.iter().map(|s| s.x).collect();
    let ys: Vec<f64> = eval.states.iter().map(|s| s.y).collect();
    // states resample through the interpolating polynomial; the heading at
    // an off-node time is the tangent of that polynomial, which matches
    // the node headings exactly wherever the dynamics are collocated
    let mut dense = Vec::with_capacity(DENSE_SAMPLES);
    for i in 0..DENSE_SAMPLES {
        let tau = -1.0 + 2.0 * i as f64 / (DENSE_SAMPLES - 1) as f64;
        let s = VehicleState::new(grid.interpolate(&xs, tau), grid.interpolate(&ys, tau));
        let psi = grid
            .interpolate_derivative(&ys, tau)
            .atan2(grid.interpolate_derivative(&xs, tau));
        dense.push(sample_at(0.5 * (tau + 1.0) * tf, s, psi, &spec.ez)?);
    }

    let max_defect = eval
        .defects
        .iter()
        .fold(0.0f64, |a, d| a.max(d[0].abs()).max(d[1].abs()));
    let violations = ViolationSummary {
        max_node_path: nodes.iter().fold(f64::NEG_INFINITY, |a, s| a.max(s.c)),
        max_dense_path: dense.iter().fold(f64::NEG_INFINITY, |a, s| a.max(s.c)),
        max_node_penalty: nodes.iter().fold(0.0f64, |a, s| a.max(s.g_ez)),
        max_dense_penalty: dense.iter().fold(0.0f64, |a, s| a.max(s.g_ez)),
        max_defect,
        terminal: eval.residuals.terminal,
    };

    let arc_pattern = if spec.kind == ScenarioKind::B {
        let pattern = arc_pattern(&eval.residuals.path);
        oracle_checks.push(info(
            "active_node_count",
            eval.residuals
                .path
                .iter()
                .filter(|&&c| c >= -ACTIVE_ARC_TOL)
                .count() as f64,
        ));
        Some(pattern)
    } else {
        None
    };

    oracle_checks.push(check("max_defect", max_defect, 1e-8));

    Ok(SolveReport {
        spec: spec.clone(),
        tf,
        objective: eval.objective,
        status,
        seed: opts.seed,
        nodes,
        dense,
        decision: dv,
        violations,
        arc_pattern,
        oracle_checks,
    })
}

/// Collapse per-node boundary activity into an arc pattern such as "UCU".
fn arc_pattern(path: &[f64]) -> String {
    let mut out = String::new();
    for &c in path {
        let label = if c >= -ACTIVE_ARC_TOL { 'C' } else { 'U' };
        if out.chars().last() != Some(label) {
            out.push(label);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// scenario solves

fn require_kind(spec: &ScenarioSpec, kind: ScenarioKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidSpec {
            reason: format!("expected scenario {kind:?}, got {:?}", spec.kind),
        });
    }
    Ok(())
}

/// Minimum-time arrival: analytic solution plus a full pipeline solve,
/// reported together with their difference as an oracle check.
pub fn solve_scenario_a(spec: &ScenarioSpec, opts: &SolverOptions) -> Result<SolveReport> {
    require_kind(spec, ScenarioKind::A)?;
    let grid = build_grid(spec.grid_m)?;
    let psi_a = scenario_a_heading(spec.x0, spec.xf)?;
    let t_fa = scenario_a_time(spec.x0, spec.xf, spec.v)?;

    let packed = PackedProblem::new(&grid, spec, t_fa);
    let guess = chord_guess(spec, &grid)?;
    let (dv, status) = run_candidates(&packed, &[guess], opts)?;

    let tf = dv.tf.expect("scenario keeps tf free");
    let heading_dev = dv
        .headings
        .iter()
        .fold(0.0f64, |a, &p| a.max(wrap_angle(p - psi_a).abs()));
    // largest node distance from the chord
    let eval = Transcription::new(&grid, spec).evaluate(&dv)?;
    let chord_dev = eval.states.iter().fold(0.0f64, |acc, s| {
        let px = s.x - spec.x0.x;
        let py = s.y - spec.x0.y;
        let off = (px * psi_a.sin() - py * psi_a.cos()).abs();
        acc.max(off)
    });

    let checks = vec![
        check("psm_vs_analytic_tf", (tf - t_fa).abs(), 1e-3),
        check("psm_vs_analytic_heading", heading_dev, 1e-3),
        check("max_chord_deviation", chord_dev, 1e-3),
    ];
    build_report(spec, &grid, dv, status, opts, checks)
}

/// Minimum-time arrival with the zone as a hard path constraint. The
/// report includes the arc segmentation and, on the boundary arc, the
/// comparison of node headings against the closed-form boundary roots.
pub fn solve_scenario_b(spec: &ScenarioSpec, opts: &SolverOptions) -> Result<SolveReport> {
    require_kind(spec, ScenarioKind::B)?;
    let grid = build_grid(spec.grid_m)?;
    let t_fa = scenario_a_time(spec.x0, spec.xf, spec.v)?;

    let packed = PackedProblem::new(&grid, spec, t_fa);
    let mut candidates = Vec::new();
    if chord_is_clear(spec)? {
        candidates.push(chord_guess(spec, &grid)?);
    } else {
        candidates.push(detour_guess(spec, &grid, t_fa)?);
        candidates.push(chord_guess(spec, &grid)?);
    }
    let (dv, status) = run_candidates(&packed, &candidates, opts)?;
    if status.max_constraint_violation > FEAS_TOL {
        return Err(Error::Infeasible {
            violation: status.max_constraint_violation,
        });
    }

    let eval = Transcription::new(&grid, spec).evaluate(&dv)?;
    let tf = eval.tf;
    let max_path = eval
        .residuals
        .path
        .iter()
        .fold(f64::NEG_INFINITY, |a, &c| a.max(c));

    // boundary-root oracle on interior active nodes
    let active: Vec<usize> = (0..eval.residuals.path.len())
        .filter(|&i| eval.residuals.path[i] >= -ACTIVE_ARC_TOL)
        .collect();
    let mut root_dev: f64 = 0.0;
    if active.len() > 2 {
        for &i in &active[1..active.len() - 1] {
            let dev = match boundary_heading_roots(eval.states[i], &spec.ez) {
                Ok(roots) => match select_boundary_root(&roots, dv.headings[i]) {
                    Ok(root) => wrap_angle(dv.headings[i] - root).abs(),
                    Err(_) => std::f64::consts::PI,
                },
                Err(_) => std::f64::consts::PI,
            };
            root_dev = root_dev.max(dev);
        }
    }

    let checks = vec![
        check("max_node_path_residual", max_path, 1e-6),
        check("tfb_not_less_than_tfa", t_fa - tf, 1e-6),
        check("active_arc_heading_vs_boundary_root", root_dev, 1e-2),
    ];
    let mut report = build_report(spec, &grid, dv, status, opts, checks)?;
    report.oracle_checks.push(check(
        "dense_path_violation",
        report.violations.max_dense_path.max(0.0),
        1e-2 * spec.ez.r_max,
    ));
    Ok(report)
}

/// Chord time and zone-avoiding time for this geometry.
pub fn compute_time_bounds(spec: &ScenarioSpec, opts: &SolverOptions) -> Result<(f64, f64)> {
    let (bounds, _) = time_bounds_with_b(spec, opts)?;
    Ok((bounds.t_fa, bounds.t_fb))
}

fn time_bounds_with_b(
    spec: &ScenarioSpec,
    opts: &SolverOptions,
) -> Result<(TimeBounds, SolveReport)> {
    let t_fa = scenario_a_time(spec.x0, spec.xf, spec.v)?;
    let b_spec = ScenarioSpec {
        kind: ScenarioKind::B,
        k_ez: None,
        t_go: None,
        ..spec.clone()
    };
    let b_report = solve_scenario_b(&b_spec, opts)?;
    Ok((
        TimeBounds {
            t_fa,
            t_fb: b_report.tf,
        },
        b_report,
    ))
}

/// Minimum time with the proximity penalty. Also solves the zone-avoiding
/// problem to report the arrival-time bracket, and seeds a candidate start
/// from its solution so the penalized solve cannot land above it.
pub fn solve_scenario_c(spec: &ScenarioSpec, opts: &SolverOptions) -> Result<SolveReport> {
    require_kind(spec, ScenarioKind::C)?;
    let (bounds, b_report) = time_bounds_with_b(spec, opts)?;
    solve_scenario_c_bounded(spec, opts, &bounds, Some(&b_report.decision))
}

fn solve_scenario_c_bounded(
    spec: &ScenarioSpec,
    opts: &SolverOptions,
    bounds: &TimeBounds,
    b_decision: Option<&DecisionVector>,
) -> Result<SolveReport> {
    require_kind(spec, ScenarioKind::C)?;
    let k = spec.k_ez.expect("penalized scenario carries a gain");
    let grid = build_grid(spec.grid_m)?;
    let packed = PackedProblem::new(&grid, spec, bounds.t_fa);

    let mut candidates = vec![chord_guess(spec, &grid)?];
    if k > 0.0 {
        if let Some(bdv) = b_decision {
            if bdv.headings.len() == grid.node_count() + 1 {
                candidates.push(bdv.clone());
            }
        }
    }
    let (dv, status) = run_candidates(&packed, &candidates, opts)?;

    let eval = Transcription::new(&grid, spec).evaluate(&dv)?;
    let tf = eval.tf;
    let penalty_integral = if k > 0.0 {
        (eval.objective - tf) / k
    } else {
        let d_like = ScenarioSpec {
            kind: ScenarioKind::D,
            k_ez: None,
            t_go: Some(tf),
            ..spec.clone()
        };
        let dv_fixed = DecisionVector {
            headings: dv.headings.clone(),
            tf: None,
        };
        Transcription::new(&grid, &d_like).evaluate(&dv_fixed)?.objective
    };

    let bracket_excess = (bounds.t_fa - tf).max(tf - bounds.t_fb).max(0.0);
    let mut checks = vec![
        check("tf_within_bracket", bracket_excess, 1e-6),
        info("penalty_integral", penalty_integral),
        info("bracket_t_fa", bounds.t_fa),
        info("bracket_t_fb", bounds.t_fb),
    ];
    if k == 0.0 {
        checks.push(check(
            "zero_gain_matches_min_time_tf",
            (tf - bounds.t_fa).abs(),
            1e-4,
        ));
    }
    build_report(spec, &grid, dv, status, opts, checks)
}

/// Sweep the penalty gain over `ks`, reusing one arrival-time bracket and
/// chaining each solution in as a candidate start for the next gain.
pub fn sweep_c(
    spec: &ScenarioSpec,
    ks: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<SolveReport>> {
    require_kind(spec, ScenarioKind::C)?;
    let (bounds, b_report) = time_bounds_with_b(spec, opts)?;
    let grid = build_grid(spec.grid_m)?;
    let mut reports = Vec::with_capacity(ks.len());
    let mut previous: Option<DecisionVector> = None;
    for &k in ks {
        let k_spec = ScenarioSpec {
            k_ez: Some(k),
            ..spec.clone()
        };
        let packed = PackedProblem::new(&grid, &k_spec, bounds.t_fa);
        let mut candidates = vec![chord_guess(&k_spec, &grid)?];
        if let Some(prev) = &previous {
            candidates.push(prev.clone());
        }
        if k > 0.0 {
            candidates.push(b_report.decision.clone());
        }
        let (dv, status) = run_candidates(&packed, &candidates, opts)?;
        previous = Some(dv.clone());

        let eval = Transcription::new(&grid, &k_spec).evaluate(&dv)?;
        let bracket_excess = (bounds.t_fa - eval.tf)
            .max(eval.tf - bounds.t_fb)
            .max(0.0);
        let penalty_integral = if k > 0.0 {
            (eval.objective - eval.tf) / k
        } else {
            0.0
        };
        let checks = vec![
            check("tf_within_bracket", bracket_excess, 1e-6),
            info("penalty_integral", penalty_integral),
            info("bracket_t_fa", bounds.t_fa),
            info("bracket_t_fb", bounds.t_fb),
        ];
        reports.push(build_report(&k_spec, &grid, dv, status, opts, checks)?);
    }
    Ok(reports)
}

/// Fixed arrival time with minimum proximity penalty. The requested time
/// must lie in `[t_fa, t_fb)`; at the lower endpoint the chord is the only
/// trajectory that arrives on time, so it is returned directly rather than
/// letting the solver wander inside the terminal-constraint tolerance band.
pub fn solve_scenario_d(spec: &ScenarioSpec, opts: &SolverOptions) -> Result<SolveReport> {
    require_kind(spec, ScenarioKind::D)?;
    let t_go = spec.t_go.expect("fixed-arrival scenario carries t_go");
    let (bounds, b_report) = time_bounds_with_b(spec, opts)?;
    if t_go < bounds.t_fa * (1.0 - 1e-9) || t_go >= bounds.t_fb {
        return Err(Error::BadArrivalTime {
            t_go,
            t_min: bounds.t_fa,
            t_max: bounds.t_fb,
        });
    }
    let grid = build_grid(spec.grid_m)?;

    if t_go <= bounds.t_fa * (1.0 + 1e-9) {
        let dv = chord_guess(spec, &grid)?;
        let eval = Transcription::new(&grid, spec).evaluate(&dv)?;
        let terminal = eval.residuals.terminal[0]
            .abs()
            .max(eval.residuals.terminal[1].abs());
        let status = SolveStatus {
            code: SolveCode::Converged,
            evals: 1,
            final_rho: opts.rho_end,
            max_constraint_violation: (terminal - EQ_TOL).max(0.0),
        };
        let checks = vec![
            check("terminal_residual", terminal, 1e-6),
            check("objective_nonnegative", -eval.objective, 0.0),
            info("penalty_integral", eval.objective),
            info("bracket_t_fa", bounds.t_fa),
            info("bracket_t_fb", bounds.t_fb),
            info("arrival_time_at_lower_bracket", 1.0),
        ];
        return build_report(spec, &grid, dv, status, opts, checks);
    }

    let packed = PackedProblem::new(&grid, spec, bounds.t_fa);
    let mut candidates = vec![dogleg_guess(spec, &grid, t_go)?, chord_guess(spec, &grid)?];
    if b_report.decision.headings.len() == grid.node_count() + 1 {
        candidates.push(DecisionVector {
            headings: b_report.decision.headings.clone(),
            tf: None,
        });
    }
    let (dv, status) = run_candidates(&packed, &candidates, opts)?;

    let eval = Transcription::new(&grid, spec).evaluate(&dv)?;
    let terminal = eval.residuals.terminal[0]
        .abs()
        .max(eval.residuals.terminal[1].abs());
    let checks = vec![
        check("terminal_residual", terminal, 1e-6),
        check("objective_nonnegative", -eval.objective, 0.0),
        info("penalty_integral", eval.objective),
        info("bracket_t_fa", bounds.t_fa),
        info("bracket_t_fb", bounds.t_fb),
    ];
    build_report(spec, &grid, dv, status, opts, checks)
}
