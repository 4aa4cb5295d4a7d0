//! Legendre-Gauss-Radau collocation grid and problem transcription.
//!
//! The grid places `m` LGR nodes on [-1, 1) (left endpoint included) plus an
//! appended node at +1 so terminal conditions can be collocated. States are
//! represented by the degree-`m` interpolating polynomial through all `m + 1`
//! nodes; the dynamics are enforced with a differentiation matrix at the `m`
//! LGR nodes. Because the kinematics depend only on the per-node headings,
//! the collocated states follow from one linear solve, which keeps the
//! decision vector at `m + 2` entries (headings plus optional final time)
//! for the derivative-free solver.

use nalgebra::{DMatrix, DVector};

use crate::ez::{constraint_c, penalty_g, VehicleState};
use crate::scenario::ScenarioSpec;
use crate::{analytic::ScenarioKind, Error, Result};

/// Default number of LGR collocation nodes.
pub const DEFAULT_NODE_COUNT: usize = 19;

/// LGR node set with quadrature weights, the appended endpoint node, a
/// differentiation matrix over all `m + 1` nodes, and the cached
/// factorization used to reconstruct states from headings.
#[derive(Debug)]
pub struct CollocationGrid {
    m: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    all_nodes: Vec<f64>,
    diff: DMatrix<f64>,
    bary: Vec<f64>,
    collocation_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    d_col0: DVector<f64>,
    /// Inter-node sample points with precomputed interpolation and
    /// derivative rows, used to tighten path constraints between nodes.
    refined: Vec<RefinedSample>,
}

/// Value and derivative of the node interpolant at a fixed off-node point,
/// as linear functionals of the node values.
#[derive(Debug, Clone)]
pub struct RefinedSample {
    pub tau: f64,
    pub interp_row: Vec<f64>,
    pub deriv_row: Vec<f64>,
}

/// Legendre values `(P_{n-1}, P'_{n-1}, P_n, P'_n)` at `x`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64, f64, f64) {
    assert!(n >= 1);
    let (mut p_prev, mut dp_prev) = (1.0, 0.0); // P_0
    let (mut p, mut dp) = (x, 1.0); // P_1
    if n == 1 {
        return (p_prev, dp_prev, p, dp);
    }
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let dp_next = dp_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
    }
    (p_prev, dp_prev, p, dp)
}

/// Build the LGR grid with `m >= 2` collocation nodes.
///
/// The nodes are the roots of `P_{m-1} + P_m`; the left endpoint -1 is
/// always a root and is set exactly. Interior roots are refined by Newton
/// iteration from Chebyshev-Radau initial guesses and must converge to
/// 1e-14.
pub fn build_grid(m: usize) -> Result<CollocationGrid> {
    if m < 2 {
        return Err(Error::GridBuild {
            reason: format!("need at least 2 nodes, got {m}"),
        });
    }
    let mut nodes = Vec::with_capacity(m);
    nodes.push(-1.0);
    for k in 1..m {
        let mut x = -(2.0 * std::f64::consts::PI * k as f64 / (2.0 * m as f64 - 1.0)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p_lo, dp_lo, p_hi, dp_hi) = legendre_pair(m, x);
            let r = p_lo + p_hi;
            let dr = dp_lo + dp_hi;
            let dx = r / dr;
            x -= dx;
            if dx.abs() <= 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::GridBuild {
                reason: format!("Newton iteration stalled for root {k} of {m}"),
            });
        }
        nodes.push(x);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in nodes.windows(2) {
        if w[1] - w[0] <= 1e-12 || w[1] >= 1.0 {
            return Err(Error::GridBuild {
                reason: "nodes not strictly increasing inside [-1, 1)".into(),
            });
        }
    }

    let mf = m as f64;
    let weights: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == 0 {
                2.0 / (mf * mf)
            } else {
                let (p_lo, _, _, _) = legendre_pair(m, x);
                (1.0 - x) / (mf * mf * p_lo * p_lo)
            }
        })
        .collect();

    let mut all_nodes = nodes.clone();
    all_nodes.push(1.0);
    let n_all = all_nodes.len();

    // barycentric weights over all nodes, normalized for conditioning
    let mut bary = vec![1.0f64; n_all];
    for j in 0..n_all {
        for k in 0..n_all {
            if k != j {
                bary[j] *= all_nodes[j] - all_nodes[k];
            }
        }
        bary[j] = 1.0 / bary[j];
    }
    let bmax = bary.iter().fold(0.0f64, |acc, &b| acc.max(b.abs()));
    for b in &mut bary {
        *b /= bmax;
    }

    let mut diff = DMatrix::zeros(n_all, n_all);
    for i in 0..n_all {
        let mut row_sum = 0.0;
        for j in 0..n_all {
            if i != j {
                let v = (bary[j] / bary[i]) / (all_nodes[i] - all_nodes[j]);
                diff[(i, j)] = v;
                row_sum += v;
            }
        }
        diff[(i, i)] = -row_sum;
    }

    // collocation system: rows at the m LGR nodes, unknown states at
    // columns 1..=m (the initial state is pinned)
    let sub = diff.view((0, 1), (m, m)).into_owned();
    let d_col0 = DVector::from_iterator(m, (0..m).map(|i| diff[(i, 0)]));
    let collocation_lu = sub.lu();
    if collocation_lu.determinant().abs() < 1e-300 {
        return Err(Error::GridBuild {
            reason: "collocation system singular".into(),
        });
    }

    // three interior samples per inter-node interval
    let mut refined = Vec::with_capacity(3 * m);
    for w in all_nodes.windows(2) {
        for q in 1..4 {
            let tau = w[0] + (w[1] - w[0]) * q as f64 / 4.0;
            refined.push(off_node_rows(&all_nodes, &bary, tau));
        }
    }

    Ok(CollocationGrid {
        m,
        nodes,
        weights,
        all_nodes,
        diff,
        bary,
        collocation_lu,
        d_col0,
        refined,
    })
}

/// Interpolation and derivative rows of the barycentric interpolant at an
/// off-node `tau`.
fn off_node_rows(all_nodes: &[f64], bary: &[f64], tau: f64) -> RefinedSample {
    let n = all_nodes.len();
    let mut c = vec![0.0f64; n]; // bary_j / (tau - x_j)
    let mut den = 0.0;
    for j in 0..n {
        c[j] = bary[j] / (tau - all_nodes[j]);
        den += c[j];
    }
    let interp_row: Vec<f64> = c.iter().map(|&cj| cj / den).collect();
    // p'(tau) = sum_j [c_j / (tau - x_j)] (p(tau) - v_j) / sum_j c_j
    let mut c2 = vec![0.0f64; n];
    let mut c2_sum = 0.0;
    for j in 0..n {
        c2[j] = c[j] / (tau - all_nodes[j]);
        c2_sum += c2[j];
    }
    let deriv_row: Vec<f64> = (0..n)
        .map(|j| (c2_sum * interp_row[j] - c2[j]) / den)
        .collect();
    RefinedSample {
        tau,
        interp_row,
        deriv_row,
    }
}

impl CollocationGrid {
    /// Number of LGR collocation nodes (the appended endpoint excluded).
    pub fn node_count(&self) -> usize {
        self.m
    }

    /// LGR nodes in [-1, 1), ascending, -1 included.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights matching [`Self::nodes`]. They sum to 2.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The appended endpoint node.
    pub fn endpoint(&self) -> f64 {
        1.0
    }

    /// All `m + 1` support nodes (LGR nodes plus endpoint).
    pub fn all_nodes(&self) -> &[f64] {
        &self.all_nodes
    }

    /// Differentiation matrix over [`Self::all_nodes`].
    pub fn diff_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    /// Precomputed inter-node sample functionals.
    pub fn refined_samples(&self) -> &[RefinedSample] {
        &self.refined
    }

    /// Quadrature of per-node values (length `m`).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.m);
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Barycentric interpolation of per-node values (length `m + 1`) at
    /// `tau` in [-1, 1]. Exact at the nodes.
    pub fn interpolate(&self, values: &[f64], tau: f64) -> f64 {
        assert_eq!(values.len(), self.all_nodes.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &xj) in self.all_nodes.iter().enumerate() {
            let dx = tau - xj;
            if dx == 0.0 {
                return values[j];
            }
            let t = self.bary[j] / dx;
            num += t * values[j];
            den += t;
        }
        num / den
    }

    /// Derivative of the interpolating polynomial at `tau`.
    pub fn interpolate_derivative(&self, values: &[f64], tau: f64) -> f64 {
        assert_eq!(values.len(), self.all_nodes.len());
        if let Some(i) = self.all_nodes.iter().position(|&x| x == tau) {
            return (0..values.len())
                .map(|j| self.diff[(i, j)] * values[j])
                .sum();
        }
        // off-node barycentric derivative via the interpolant value
        let p = self.interpolate(values, tau);
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &xj) in self.all_nodes.iter().enumerate() {
            let dx = tau - xj;
            let t = self.bary[j] / dx;
            num += t * (p - values[j]) / dx;
            den += t;
        }
        num / den
    }
}

/// Packed unknowns of the transcribed problem: one heading per node
/// (endpoint included) and, when the arrival time is free, the final time.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecisionVector {
    /// Headings at all `m + 1` nodes [rad].
    pub headings: Vec<f64>,
    /// Final time [TU]; `None` when the scenario fixes it.
    pub tf: Option<f64>,
}

impl DecisionVector {
    /// Constant-heading vector with the given final time.
    pub fn constant(psi: f64, node_count: usize, tf: Option<f64>) -> Self {
        Self {
            headings: vec![psi; node_count + 1],
            tf,
        }
    }
}

/// Residual vectors of the transcribed constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResiduals {
    /// Terminal position mismatch `(x(1) - xf, y(1) - yf)`.
    pub terminal: [f64; 2],
    /// Hard path-constraint values at every node including the endpoint;
    /// populated for the zone-avoidance scenario only. Feasible iff <= 0.
    pub path: Vec<f64>,
    /// Path-constraint values at the inter-node refinement points (states
    /// and headings taken from the interpolant and its tangent), used to
    /// suppress corner cutting between nodes. Zone-avoidance only.
    pub path_refined: Vec<f64>,
}

/// Full evaluation of a decision vector against a scenario.
#[derive(Debug, Clone)]
pub struct TranscriptionEval {
    /// Reconstructed states at all `m + 1` nodes.
    pub states: Vec<VehicleState>,
    /// Collocation defects at the `m` LGR nodes (x and y components).
    pub defects: Vec<[f64; 2]>,
    /// Constraint residuals.
    pub residuals: ConstraintResiduals,
    /// Objective value for the scenario.
    pub objective: f64,
    /// Final time in effect (decision value or the fixed arrival time).
    pub tf: f64,
}

/// A scenario bound to a grid, ready to evaluate decision vectors.
pub struct Transcription<'a> {
    pub grid: &'a CollocationGrid,
    pub spec: &'a ScenarioSpec,
}

impl<'a> Transcription<'a> {
    pub fn new(grid: &'a CollocationGrid, spec: &'a ScenarioSpec) -> Self {
        Self { grid, spec }
    }

    fn effective_tf(&self, dv: &DecisionVector) -> Result<f64> {
        match (self.spec.kind, dv.tf, self.spec.t_go) {
            (ScenarioKind::D, None, Some(t_go)) => Ok(t_go),
            (ScenarioKind::D, Some(_), _) => Err(Error::InvalidSpec {
                reason: "fixed-arrival scenario carries no free final time".into(),
            }),
            (_, Some(tf), _) if tf > 0.0 => Ok(tf),
            (_, Some(tf), _) => Err(Error::InvalidSpec {
                reason: format!("final time must be positive, got {tf}"),
            }),
            (_, None, _) => Err(Error::InvalidSpec {
                reason: "free-final-time scenario needs a tf entry".into(),
            }),
        }
    }

    /// Reconstruct the node states for `dv` and evaluate objective and
    /// constraint residuals in one pass.
    pub fn evaluate(&self, dv: &DecisionVector) -> Result<TranscriptionEval> {
        let grid = self.grid;
        let spec = self.spec;
        let m = grid.m;
        if dv.headings.len() != m + 1 {
            return Err(Error::InvalidSpec {
                reason: format!(
                    "decision vector has {} headings, grid wants {}",
                    dv.headings.len(),
                    m + 1
                ),
            });
        }
        let tf = self.effective_tf(dv)?;
        let half = 0.5 * tf * spec.v;

        // rhs_i = half * f(psi_i) - D_{i,0} x0  at the m collocation rows
        let mut rhs_x = DVector::zeros(m);
        let mut rhs_y = DVector::zeros(m);
        for i in 0..m {
            rhs_x[i] = half * dv.headings[i].cos() - grid.d_col0[i] * spec.x0.x;
            rhs_y[i] = half * dv.headings[i].sin() - grid.d_col0[i] * spec.x0.y;
        }
        let sol_x = grid.collocation_lu.solve(&rhs_x).ok_or_else(|| {
            Error::NumericalFailure {
                reason: "collocation solve failed".into(),
            }
        })?;
        let sol_y = grid
            .collocation_lu
            .solve(&rhs_y)
            .ok_or_else(|| Error::NumericalFailure {
                reason: "collocation solve failed".into(),
            })?;

        let mut states = Vec::with_capacity(m + 1);
        states.push(spec.x0);
        for j in 0..m {
            states.push(VehicleState::new(sol_x[j], sol_y[j]));
        }

        // defects D X - half f at the collocation rows; zero up to roundoff
        // by construction, reported as a diagnostic
        let mut defects = Vec::with_capacity(m);
        for i in 0..m {
            let mut dx = 0.0;
            let mut dy = 0.0;
            for (j, st) in states.iter().enumerate() {
                dx += grid.diff[(i, j)] * st.x;
                dy += grid.diff[(i, j)] * st.y;
            }
            defects.push([
                dx - half * dv.headings[i].cos(),
                dy - half * dv.headings[i].sin(),
            ]);
        }

        let end = states[m];
        let terminal = [end.x - spec.xf.x, end.y - spec.xf.y];

        let (path, path_refined) = if spec.kind == ScenarioKind::B {
            let mut c = Vec::with_capacity(m + 1);
            for (st, &psi) in states.iter().zip(&dv.headings) {
                c.push(constraint_c(*st, psi, &spec.ez)?);
            }
            let mut cr = Vec::with_capacity(grid.refined.len());
            for r in &grid.refined {
                let mut sx = 0.0;
                let mut sy = 0.0;
                let mut tx = 0.0;
                let mut ty = 0.0;
                for (j, st) in states.iter().enumerate() {
                    sx += r.interp_row[j] * st.x;
                    sy += r.interp_row[j] * st.y;
                    tx += r.deriv_row[j] * st.x;
                    ty += r.deriv_row[j] * st.y;
                }
                let psi = ty.atan2(tx);
                cr.push(constraint_c(VehicleState::new(sx, sy), psi, &spec.ez)?);
            }
            (c, cr)
        } else {
            (Vec::new(), Vec::new())
        };

        let objective = match spec.kind {
            ScenarioKind::A | ScenarioKind::B => tf,
            ScenarioKind::C => {
                let k = spec.k_ez.unwrap_or(0.0);
                if k == 0.0 {
                    tf
                } else {
                    tf + k * 0.5 * tf * self.penalty_quadrature(&states, dv)?
                }
            }
            ScenarioKind::D => 0.5 * tf * self.penalty_quadrature(&states, dv)?,
        };

        Ok(TranscriptionEval {
            states,
            defects,
            residuals: ConstraintResiduals {
                terminal,
                path,
                path_refined,
            },
            objective,
            tf,
        })
    }

    fn penalty_quadrature(&self, states: &[VehicleState], dv: &DecisionVector) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.grid.m {
            acc += self.grid.weights[i] * penalty_g(states[i], dv.headings[i], &self.spec.ez)?;
        }
        Ok(acc)
    }
}

/// States at all nodes plus the collocation defects for `dv`.
pub fn reconstruct_states(
    dv: &DecisionVector,
    spec: &ScenarioSpec,
    grid: &CollocationGrid,
) -> Result<(Vec<VehicleState>, Vec<[f64; 2]>)> {
    let eval = Transcription::new(grid, spec).evaluate(dv)?;
    Ok((eval.states, eval.defects))
}

/// Objective value of `dv` under the scenario's cost functional.
pub fn evaluate_objective(
    dv: &DecisionVector,
    spec: &ScenarioSpec,
    grid: &CollocationGrid,
) -> Result<f64> {
    Ok(Transcription::new(grid, spec).evaluate(dv)?.objective)
}

/// Constraint residuals of `dv`: terminal mismatch and, for the
/// zone-avoidance scenario, the per-node path-constraint values.
pub fn evaluate_constraints(
    dv: &DecisionVector,
    spec: &ScenarioSpec,
    grid: &CollocationGrid,
) -> Result<ConstraintResiduals> {
    Ok(Transcription::new(grid, spec).evaluate(dv)?.residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{scenario_a_heading, scenario_a_time};
    use crate::ez::EngagementZone;
    use crate::scenario::ScenarioSpec;
    use approx::assert_abs_diff_eq;

    fn paper_spec(kind: ScenarioKind) -> ScenarioSpec {
        let ez = EngagementZone::new(2.0).unwrap();
        let x0 = VehicleState::new(1.0, 3.0);
        let xf = VehicleState::new(-0.5, -3.0);
        match kind {
            ScenarioKind::A => ScenarioSpec::min_time(x0, xf, 1.0, ez).unwrap(),
            ScenarioKind::B => ScenarioSpec::avoid_zone(x0, xf, 1.0, ez).unwrap(),
            ScenarioKind::C => ScenarioSpec::penalized(x0, xf, 1.0, ez, 1.0).unwrap(),
            ScenarioKind::D => ScenarioSpec::fixed_arrival(x0, xf, 1.0, ez, 6.25).unwrap(),
        }
    }

    #[test]
    fn radau_two_nodes_analytic() {
        let g = build_grid(2).unwrap();
        assert_abs_diff_eq!(g.nodes()[0], -1.0);
        assert_abs_diff_eq!(g.nodes()[1], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.weights()[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g.weights()[1], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn rejects_degenerate_node_count() {
        assert!(matches!(build_grid(1), Err(Error::GridBuild { .. })));
    }

    #[test]
    fn weights_sum_to_two() {
        for m in [2usize, 5, 10, 19, 30] {
            let g = build_grid(m).unwrap();
            let sum: f64 = g.weights().iter().sum();
            assert!(
                (sum - 2.0).abs() < 1e-14,
                "m = {m}: weight sum {sum} != 2"
            );
        }
    }

    #[test]
    fn quadrature_exact_to_degree_2m_minus_2() {
        for m in [2usize, 5, 10, 19, 30] {
            let g = build_grid(m).unwrap();
            let deg = 2 * m - 2;
            // the top-degree monomial is the hardest case
            let vals: Vec<f64> = g.nodes().iter().map(|&x| x.powi(deg as i32)).collect();
            let exact = 2.0 / (deg as f64 + 1.0); // deg even
            let got = g.integrate(&vals);
            assert!(
                ((got - exact) / exact).abs() < 1e-12,
                "m = {m}: {got} vs {exact}"
            );
        }
        // headline case: degree 36 at the default node count
        let g = build_grid(19).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|&x| x.powi(36)).collect();
        assert!(((g.integrate(&vals) - 2.0 / 37.0) / (2.0 / 37.0)).abs() < 1e-12);
    }

    #[test]
    fn differentiation_exact_to_degree_m() {
        for m in [2usize, 5, 10, 19, 30] {
            let g = build_grid(m).unwrap();
            // p(x) = sum_k c_k x^k with fixed pseudo-random coefficients
            let coeffs: Vec<f64> = (0..=m)
                .map(|k| ((k * 2654435761 + 12345) % 1000) as f64 / 500.0 - 1.0)
                .collect();
            let p = |x: f64| {
                coeffs
                    .iter()
                    .rev()
                    .fold(0.0, |acc, &c| acc * x + c)
            };
            let dp = |x: f64| {
                coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c)
            };
            let vals = DVector::from_iterator(m + 1, g.all_nodes().iter().map(|&x| p(x)));
            let derivs = g.diff_matrix() * vals;
            for (i, &x) in g.all_nodes().iter().enumerate() {
                assert!(
                    (derivs[i] - dp(x)).abs() < 1e-10,
                    "m = {m}, node {x}: {} vs {}",
                    derivs[i],
                    dp(x)
                );
            }
        }
    }

    #[test]
    fn constant_heading_reconstructs_straight_line() {
        let spec = paper_spec(ScenarioKind::A);
        let psi = scenario_a_heading(spec.x0, spec.xf).unwrap();
        let tf = scenario_a_time(spec.x0, spec.xf, spec.v).unwrap();
        for m in [2usize, 5, 19] {
            let g = build_grid(m).unwrap();
            let dv = DecisionVector::constant(psi, m, Some(tf));
            let (states, defects) = reconstruct_states(&dv, &spec, &g).unwrap();
            for (i, st) in states.iter().enumerate() {
                let t = 0.5 * (g.all_nodes()[i] + 1.0) * tf;
                assert!(
                    (st.x - (spec.x0.x + spec.v * t * psi.cos())).abs() < 1e-10,
                    "m = {m}"
                );
                assert!((st.y - (spec.x0.y + spec.v * t * psi.sin())).abs() < 1e-10);
            }
            for d in &defects {
                assert!(d[0].abs() < 1e-10 && d[1].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn straight_line_terminal_residual_vanishes() {
        let spec = paper_spec(ScenarioKind::A);
        let psi = scenario_a_heading(spec.x0, spec.xf).unwrap();
        let tf = scenario_a_time(spec.x0, spec.xf, spec.v).unwrap();
        let g = build_grid(19).unwrap();
        let dv = DecisionVector::constant(psi, 19, Some(tf));
        let res = evaluate_constraints(&dv, &spec, &g).unwrap();
        assert!(res.terminal[0].abs() < 1e-12);
        assert!(res.terminal[1].abs() < 1e-12);
    }

    /// Adaptive Simpson quadrature, used as the reference integrator.
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn simple<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let mid = 0.5 * (a + b);
            let left = simple(f, a, mid);
            let right = simple(f, mid, b);
            if depth > 40 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, mid, left, tol / 2.0, depth + 1)
                    + rec(f, mid, b, right, tol / 2.0, depth + 1)
            }
        }
        rec(&f, a, b, simple(&f, a, b), tol, 0)
    }

    #[test]
    fn smooth_control_state_error_shrinks_spectrally() {
        let spec = paper_spec(ScenarioKind::A);
        let tf = 4.0;
        let psi_of = |tau: f64| 0.4 + 0.8 * (1.7 * tau).sin() - 0.3 * (2.3 * tau).cos();
        let mut last_err = f64::INFINITY;
        for m in [5usize, 9, 13, 19] {
            let g = build_grid(m).unwrap();
            let dv = DecisionVector {
                headings: g.all_nodes().iter().map(|&t| psi_of(t)).collect(),
                tf: Some(tf),
            };
            let (states, _) = reconstruct_states(&dv, &spec, &g).unwrap();
            let mut err: f64 = 0.0;
            for (i, &tau) in g.all_nodes().iter().enumerate() {
                let half = 0.5 * tf * spec.v;
                let x_ref =
                    spec.x0.x + half * simpson(|t| psi_of(t).cos(), -1.0, tau, 1e-13);
                let y_ref =
                    spec.x0.y + half * simpson(|t| psi_of(t).sin(), -1.0, tau, 1e-13);
                err = err.max((states[i].x - x_ref).abs().max((states[i].y - y_ref).abs()));
            }
            assert!(
                err < last_err || err < 1e-11,
                "m = {m}: error {err} did not shrink from {last_err}"
            );
            last_err = err;
        }
        assert!(last_err < 1e-8, "m = 19 error {last_err}");
    }

    #[test]
    fn objective_forms() {
        let g = build_grid(19).unwrap();
        // min-time objective is the final time
        let spec_a = paper_spec(ScenarioKind::A);
        let psi = scenario_a_heading(spec_a.x0, spec_a.xf).unwrap();
        let dv = DecisionVector::constant(psi, 19, Some(5.5));
        assert_abs_diff_eq!(evaluate_objective(&dv, &spec_a, &g).unwrap(), 5.5);

        // penalty objective with the trajectory fully outside the zone
        // equals the final time for any gain
        let ez = EngagementZone::new(2.0).unwrap();
        let x0 = VehicleState::new(10.0, 10.0);
        let xf = VehicleState::new(13.0, 14.0);
        let tf = scenario_a_time(x0, xf, 1.0).unwrap();
        let psi = scenario_a_heading(x0, xf).unwrap();
        for k in [0.0, 1.0, 1e3] {
            let spec_c = ScenarioSpec::penalized(x0, xf, 1.0, ez, k).unwrap();
            let dv = DecisionVector::constant(psi, 19, Some(tf));
            assert_abs_diff_eq!(
                evaluate_objective(&dv, &spec_c, &g).unwrap(),
                tf,
                epsilon = 1e-12
            );
        }

        // fixed-arrival objective along a chord clear of the zone is zero,
        // matching a dense trapezoid quadrature of the penalty
        let spec_d = ScenarioSpec::fixed_arrival(x0, xf, 1.0, ez, tf).unwrap();
        let dv = DecisionVector {
            headings: vec![psi; 20],
            tf: None,
        };
        let j = evaluate_objective(&dv, &spec_d, &g).unwrap();
        let n = 10_000;
        let mut trap = 0.0;
        for i in 0..=n {
            let t = tf * i as f64 / n as f64;
            let s = VehicleState::new(x0.x + t * psi.cos(), x0.y + t * psi.sin());
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            trap += w * penalty_g(s, psi, &ez).unwrap();
        }
        trap *= tf / n as f64;
        assert!((j - trap).abs() < 1e-6);
        assert_abs_diff_eq!(j, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zone_crossing_candidate_reports_positive_path_residual() {
        let g = build_grid(19).unwrap();
        let spec = paper_spec(ScenarioKind::B);
        let psi = scenario_a_heading(spec.x0, spec.xf).unwrap();
        let tf = scenario_a_time(spec.x0, spec.xf, spec.v).unwrap();
        let dv = DecisionVector::constant(psi, 19, Some(tf));
        let res = evaluate_constraints(&dv, &spec, &g).unwrap();
        assert_eq!(res.path.len(), 20);
        assert!(res.path.iter().any(|&c| c > 0.0), "chord must cut the zone");
    }

    #[test]
    fn geometry_invariant_under_speed_time_rescaling() {
        let g = build_grid(19).unwrap();
        let ez = EngagementZone::new(2.0).unwrap();
        let x0 = VehicleState::new(1.0, 3.0);
        let xf = VehicleState::new(-0.5, -3.0);
        let spec1 = ScenarioSpec::min_time(x0, xf, 1.0, ez).unwrap();
        let spec2 = ScenarioSpec::min_time(x0, xf, 2.0, ez).unwrap();
        let headings: Vec<f64> = g
            .all_nodes()
            .iter()
            .map(|&t| -1.8 + 0.3 * (2.0 * t).sin())
            .collect();
        let dv1 = DecisionVector {
            headings: headings.clone(),
            tf: Some(6.0),
        };
        let dv2 = DecisionVector {
            headings,
            tf: Some(3.0),
        };
        let (s1, _) = reconstruct_states(&dv1, &spec1, &g).unwrap();
        let (s2, _) = reconstruct_states(&dv2, &spec2, &g).unwrap();
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_exact_at_nodes() {
        let g = build_grid(19).unwrap();
        let vals: Vec<f64> = g.all_nodes().iter().map(|&t| (3.0 * t).sin()).collect();
        for (j, &tau) in g.all_nodes().iter().enumerate() {
            assert_eq!(g.interpolate(&vals, tau), vals[j]);
        }
    }
}
