//! Derivative-free trust-region solver for inequality-constrained problems.
//!
//! The method keeps a simplex of `n + 1` evaluated points, interpolates
//! linear models of the objective and every constraint through it, and
//! moves by solving a two-phase linear subproblem inside a shrinking box
//! trust region: first reduce the largest modeled constraint violation,
//! then minimize the modeled objective subject to that violation level.
//! Progress is measured with an exact-penalty merit function whose weight
//! only ever grows; the trust radius only ever shrinks, from `rho_begin`
//! down to `rho_end`.
//!
//! Constraints use the `g(x) >= 0` feasible convention. Equality
//! constraints are expected to be encoded by the caller as paired
//! inequalities `h + tol >= 0` and `tol - h >= 0`.

mod lp;

use lp::{solve_lp, LpError};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Constraint values above `-FEAS_TOL` count as feasible.
pub const FEAS_TOL: f64 = 1e-8;

/// Tolerance used when encoding an equality as a pair of inequalities.
pub const EQ_TOL: f64 = 1e-8;

/// Objective/constraint evaluation contract.
pub type EvalFn<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;

/// An inequality-constrained minimization problem (constraints feasible
/// iff `>= 0`).
pub struct NlpProblem<'a> {
    pub dimension: usize,
    pub objective: EvalFn<'a>,
    pub inequality_constraints: Vec<EvalFn<'a>>,
    pub initial_point: Vec<f64>,
    /// Initial trust radius.
    pub rho_begin: f64,
    /// Final trust radius; the solver stops once it would shrink below it.
    pub rho_end: f64,
    pub max_evals: usize,
}

impl<'a> NlpProblem<'a> {
    /// Problem with the default trust-radius schedule (0.5 down to 1e-6)
    /// and evaluation budget (20000).
    pub fn new(
        objective: EvalFn<'a>,
        inequality_constraints: Vec<EvalFn<'a>>,
        initial_point: Vec<f64>,
    ) -> Self {
        Self {
            dimension: initial_point.len(),
            objective,
            inequality_constraints,
            initial_point,
            rho_begin: 0.5,
            rho_end: 1e-6,
            max_evals: 20_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.initial_point.len() != self.dimension {
            return Err(Error::InvalidSpec {
                reason: "dimension must be >= 1 and match the initial point".into(),
            });
        }
        if !(self.rho_end > 0.0 && self.rho_end < self.rho_begin) {
            return Err(Error::InvalidSpec {
                reason: "need 0 < rho_end < rho_begin".into(),
            });
        }
        if self.max_evals < self.dimension + 2 {
            return Err(Error::InvalidSpec {
                reason: "max_evals must be at least dimension + 2".into(),
            });
        }
        Ok(())
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveCode {
    /// Trust radius reached `rho_end` with a feasible incumbent.
    Converged,
    /// Evaluation budget exhausted.
    MaxEvals,
    /// Trust radius exhausted without reaching feasibility.
    Infeasible,
    /// Models degenerated beyond recovery.
    NumericalFailure,
}

/// Outcome bookkeeping for a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub code: SolveCode,
    pub evals: usize,
    pub final_rho: f64,
    pub max_constraint_violation: f64,
}

/// Internal milestones, observable for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveEvent {
    /// The trust radius was reduced to the given value.
    RhoReduced(f64),
    /// A new incumbent (returned-point candidate) was accepted.
    Incumbent { objective: f64, violation: f64 },
}

#[derive(Debug, Clone)]
struct Sample {
    x: Vec<f64>,
    f: f64,
    cons: Vec<f64>,
    viol: f64,
}

/// Incumbent ordering: a feasible point beats an infeasible one; two
/// feasible points compare on the objective; two infeasible points must
/// not regress in violation.
fn is_better(new: &Sample, best: &Sample) -> bool {
    let nf = new.viol <= FEAS_TOL;
    let bf = best.viol <= FEAS_TOL;
    match (nf, bf) {
        (true, true) => new.f < best.f,
        (true, false) => true,
        (false, true) => false,
        (false, false) => {
            new.viol < best.viol || (new.viol <= best.viol && new.f < best.f)
        }
    }
}

struct Evaluator<'p, 'a> {
    problem: &'p NlpProblem<'a>,
    evals: usize,
}

const BIG: f64 = 1e30;

impl Evaluator<'_, '_> {
    fn eval(&mut self, x: &[f64]) -> Sample {
        self.evals += 1;
        let mut f = (self.problem.objective)(x);
        if !f.is_finite() {
            f = BIG;
        }
        let cons: Vec<f64> = self
            .problem
            .inequality_constraints
            .iter()
            .map(|c| {
                let v = c(x);
                if v.is_finite() {
                    v
                } else {
                    -BIG
                }
            })
            .collect();
        let viol = cons.iter().fold(0.0f64, |acc, &c| acc.max(-c));
        Sample {
            x: x.to_vec(),
            f,
            cons,
            viol,
        }
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.problem.max_evals
    }
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Minimize from the problem's own initial point.
pub fn solve(p: &NlpProblem) -> Result<(Vec<f64>, SolveStatus)> {
    solve_observed(p, &p.initial_point.clone(), &mut |_| {})
}

/// Minimize from an alternative starting point.
pub fn solve_from(p: &NlpProblem, x0: &[f64]) -> Result<(Vec<f64>, SolveStatus)> {
    solve_observed(p, x0, &mut |_| {})
}

/// Minimize with an event observer.
pub fn solve_observed(
    p: &NlpProblem,
    x0: &[f64],
    observer: &mut dyn FnMut(SolveEvent),
) -> Result<(Vec<f64>, SolveStatus)> {
    let (best, status) = solve_core(p, x0, observer)?;
    Ok((best.x, status))
}

fn solve_core(
    p: &NlpProblem,
    x0: &[f64],
    observer: &mut dyn FnMut(SolveEvent),
) -> Result<(Sample, SolveStatus)> {
    p.validate()?;
    let n = p.dimension;
    if x0.len() != n {
        return Err(Error::InvalidSpec {
            reason: "starting point dimension mismatch".into(),
        });
    }
    let mc = p.inequality_constraints.len();
    let mut ev = Evaluator {
        problem: p,
        evals: 0,
    };

    // starting sample; recover from a non-finite start with deterministic
    // perturbations
    let mut start = ev.eval(x0);
    if start.f >= BIG || start.viol >= BIG {
        let mut found = false;
        for attempt in 1..=10 {
            let mut x = x0.to_vec();
            let k = (attempt - 1) % n;
            let sign = if attempt % 2 == 0 { -1.0 } else { 1.0 };
            x[k] += sign * p.rho_begin * 0.1 * attempt as f64;
            start = ev.eval(&x);
            if start.f < BIG && start.viol < BIG {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::NumericalFailure {
                reason: "objective or constraints not finite near the start".into(),
            });
        }
    }

    let mut rho = p.rho_begin;
    let mut mu: f64 = 0.0;
    let merit = |s: &Sample, mu: f64| s.f + mu * s.viol;

    // initial simplex: start plus one coordinate offset per dimension
    let mut simplex: Vec<Sample> = Vec::with_capacity(n + 1);
    simplex.push(start);
    let mut best = simplex[0].clone();
    observer(SolveEvent::Incumbent {
        objective: best.f,
        violation: best.viol,
    });
    for j in 0..n {
        if ev.exhausted() {
            return Ok((
                best.clone(),
                SolveStatus {
                    code: SolveCode::MaxEvals,
                    evals: ev.evals,
                    final_rho: rho,
                    max_constraint_violation: best.viol,
                },
            ));
        }
        let mut x = simplex[0].x.clone();
        x[j] += rho;
        let s = ev.eval(&x);
        if is_better(&s, &best) {
            best = s.clone();
            observer(SolveEvent::Incumbent {
                objective: best.f,
                violation: best.viol,
            });
        }
        simplex.push(s);
    }

    let mut fails = 0usize;
    let mut lp_failures = 0usize;
    let mut rebuilt_this_rho = false;

    let finish = |code: SolveCode, ev: &Evaluator, rho: f64, best: &Sample| {
        (
            best.clone(),
            SolveStatus {
                code,
                evals: ev.evals,
                final_rho: rho,
                max_constraint_violation: best.viol,
            },
        )
    };

    loop {
        if ev.exhausted() {
            return Ok(finish(SolveCode::MaxEvals, &ev, rho, &best));
        }

        // keep the merit-best vertex at index 0 as the model base
        let base_idx = (0..=n)
            .min_by(|&a, &b| {
                merit(&simplex[a], mu)
                    .partial_cmp(&merit(&simplex[b], mu))
                    .unwrap()
            })
            .unwrap();
        simplex.swap(0, base_idx);

        // geometry step: pull the farthest vertex back to the current scale
        let (far_j, far_d) = (1..=n)
            .map(|j| (j, dist_inf(&simplex[j].x, &simplex[0].x)))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if far_d > 2.1 * rho {
            let mut x = simplex[0].x.clone();
            for k in 0..n {
                x[k] += rho * (simplex[far_j].x[k] - simplex[0].x[k]) / far_d;
            }
            let s = ev.eval(&x);
            if is_better(&s, &best) {
                best = s.clone();
                observer(SolveEvent::Incumbent {
                    objective: best.f,
                    violation: best.viol,
                });
            }
            simplex[far_j] = s;
            continue;
        }

        // linear models through the simplex around the base; displacement
        // rows are normalized to unit length so the poisedness gate below
        // measures angular degeneracy independent of vertex scales
        let base = simplex[0].clone();
        let mut s_mat = DMatrix::zeros(n, n);
        let mut rhs = DMatrix::zeros(n, 1 + mc);
        let mut row_scale = vec![0.0f64; n];
        for j in 1..=n {
            let norm = dist_inf(&simplex[j].x, &base.x).max(1e-300);
            row_scale[j - 1] = norm;
            for k in 0..n {
                s_mat[(j - 1, k)] = (simplex[j].x[k] - base.x[k]) / norm;
            }
            rhs[(j - 1, 0)] = (simplex[j].f - base.f) / norm;
            for (ci, (cv, bv)) in simplex[j].cons.iter().zip(&base.cons).enumerate() {
                rhs[(j - 1, 1 + ci)] = (cv - bv) / norm;
            }
        }
        let lu = s_mat.clone().lu();
        let well_poised = lu.determinant().abs() > 1e-10;
        let solved = if well_poised { lu.solve(&rhs) } else { None };
        let grads = match solved {
            Some(g) if g.iter().all(|v| v.is_finite() && v.abs() < 1e13) => {
                rebuilt_this_rho = false;
                g
            }
            _ => {
                // degenerate simplex: rebuild around the base once per
                // radius; a second degeneration means this radius is done
                if rebuilt_this_rho {
                    if shrink(&mut rho, p.rho_end, observer) {
                        let code = closing_code(&best);
                        return Ok(finish(code, &ev, rho, &best));
                    }
                    fails = 0;
                    rebuilt_this_rho = false;
                    continue;
                }
                rebuilt_this_rho = true;
                for (j, s) in (1..=n).zip({
                    let mut fresh = Vec::with_capacity(n);
                    for k in 0..n {
                        if ev.exhausted() {
                            return Ok(finish(SolveCode::MaxEvals, &ev, rho, &best));
                        }
                        let mut x = base.x.clone();
                        x[k] += rho;
                        fresh.push(ev.eval(&x));
                    }
                    fresh
                }) {
                    if is_better(&s, &best) {
                        best = s.clone();
                        observer(SolveEvent::Incumbent {
                            objective: best.f,
                            violation: best.viol,
                        });
                    }
                    simplex[j] = s;
                }
                continue;
            }
        };
        let gf: Vec<f64> = (0..n).map(|k| grads[(k, 0)]).collect();
        let gc: Vec<Vec<f64>> = (0..mc)
            .map(|ci| (0..n).map(|k| grads[(k, 1 + ci)]).collect())
            .collect();

        let m0 = base.viol;
        let lo = vec![-rho; n];
        let hi = vec![rho; n];

        // phase 1: smallest achievable model violation inside the box
        let t_star = if mc == 0 || m0 <= 0.0 {
            0.0
        } else {
            let mut c1 = vec![0.0; n + 1];
            c1[n] = 1.0;
            let rows: Vec<(Vec<f64>, f64)> = (0..mc)
                .map(|i| {
                    let mut a = gc[i].clone();
                    a.push(1.0);
                    (a, -base.cons[i])
                })
                .collect();
            let mut lo1 = lo.clone();
            lo1.push(0.0);
            let mut hi1 = hi.clone();
            hi1.push(m0);
            match solve_lp(&c1, &rows, &lo1, &hi1) {
                Ok(sol) => sol[n].max(0.0),
                Err(_) => {
                    lp_failures += 1;
                    m0
                }
            }
        };

        // phase 2: minimize the modeled objective at that violation level
        let rows2: Vec<(Vec<f64>, f64)> = (0..mc)
            .map(|i| {
                (
                    gc[i].clone(),
                    -base.cons[i] - t_star * (1.0 + 1e-6) - 1e-9,
                )
            })
            .collect();
        let step = match solve_lp(&gf, &rows2, &lo, &hi) {
            Ok(d) => {
                lp_failures = 0;
                d
            }
            Err(LpError::Infeasible) | Err(LpError::Unbounded) | Err(LpError::Numerical(_)) => {
                lp_failures += 1;
                vec![0.0; n]
            }
        };
        // persistent subproblem trouble means the models are out of scale;
        // resolve it by shrinking rather than giving up
        if lp_failures > 2 {
            if shrink(&mut rho, p.rho_end, observer) {
                let code = closing_code(&best);
                return Ok(finish(code, &ev, rho, &best));
            }
            fails = 0;
            lp_failures = 0;
            rebuilt_this_rho = false;
            continue;
        }

        let step_norm = step.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
        let pf_red: f64 = -gf.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
        let t_d = (0..mc).fold(0.0f64, |acc, i| {
            let model = base.cons[i] + gc[i].iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
            acc.max(-model)
        });
        let pm_red = (m0 - t_d).max(0.0);

        if pf_red < 0.0 {
            if pm_red <= 1e-13 * (1.0 + m0) {
                if shrink(&mut rho, p.rho_end, observer) {
                    let code = closing_code(&best);
                    return Ok(finish(code, &ev, rho, &best));
                }
                fails = 0;
                rebuilt_this_rho = false;
                continue;
            }
            mu = (mu.max(1.5 * (-pf_red) / pm_red)).min(1e12);
        }
        let pred = pf_red + mu * pm_red;
        let pred_floor = 1e-13 * (1.0 + base.f.abs() + mu * m0);
        if pred <= pred_floor || step_norm <= 0.05 * rho {
            if shrink(&mut rho, p.rho_end, observer) {
                let code = closing_code(&best);
                return Ok(finish(code, &ev, rho, &best));
            }
            fails = 0;
            rebuilt_this_rho = false;
            continue;
        }

        let mut x_new = base.x.clone();
        for k in 0..n {
            x_new[k] += step[k];
        }
        let cand = ev.eval(&x_new);
        let (cand_f, cand_viol) = (cand.f, cand.viol);
        if is_better(&cand, &best) {
            best = cand.clone();
            observer(SolveEvent::Incumbent {
                objective: best.f,
                violation: best.viol,
            });
        }
        let actual_red = merit(&base, mu) - merit(&cand, mu);

        // vertex replacement: write the step in the basis of the current
        // displacements and evict a vertex carrying a large coefficient,
        // preferring vertices worse than the newcomer. Replacing vertex j
        // scales the simplex volume by |lambda_j|, so this cannot collapse
        // the geometry the way worst-merit eviction can.
        let d_vec =
            nalgebra::DVector::from_iterator(n, (0..n).map(|k| cand.x[k] - base.x[k]));
        let lam: Option<Vec<f64>> = s_mat
            .transpose()
            .lu()
            .solve(&d_vec)
            .map(|w| (0..n).map(|j| w[j] / row_scale[j]).collect());
        if let Some(lam) = lam {
            let cand_merit = merit(&cand, mu);
            let score = |j: usize| {
                lam[j - 1].abs()
                    * if merit(&simplex[j], mu) > cand_merit {
                        3.0
                    } else {
                        1.0
                    }
            };
            let victim = (1..=n)
                .max_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap())
                .unwrap();
            if lam[victim - 1].abs() > 1e-8 {
                simplex[victim] = cand;
            }
        }

        if actual_red >= 0.1 * pred {
            fails = 0;
        } else {
            // the merit weight must dominate observed objective-for-
            // violation trades, or the simplex drifts infeasible
            if cand_viol > base.viol + 1e-15 && cand_f < base.f {
                mu = (mu.max(1.5 * (base.f - cand_f) / (cand_viol - base.viol))).min(1e12);
            }
            fails += 1;
            // allow roughly one sweep of vertex turnover before giving up
            // on the current radius
            if fails >= 3.max(n) {
                if shrink(&mut rho, p.rho_end, observer) {
                    let code = closing_code(&best);
                    return Ok(finish(code, &ev, rho, &best));
                }
                fails = 0;
                rebuilt_this_rho = false;
            }
        }
    }
}

fn closing_code(best: &Sample) -> SolveCode {
    if best.viol <= FEAS_TOL {
        SolveCode::Converged
    } else {
        SolveCode::Infeasible
    }
}

/// Halve the trust radius, snapping to `rho_end`. Returns true when the
/// radius was already at `rho_end`, i.e. the solve is finished.
fn shrink(rho: &mut f64, rho_end: f64, observer: &mut dyn FnMut(SolveEvent)) -> bool {
    if *rho <= rho_end * (1.0 + 1e-9) {
        *rho = rho_end;
        return true;
    }
    *rho *= 0.5;
    if *rho <= 1.5 * rho_end {
        *rho = rho_end;
    }
    observer(SolveEvent::RhoReduced(*rho));
    false
}

/// Best result over `k` runs: the first from the problem's own starting
/// point, the rest from uniformly jittered copies of it. Deterministic for
/// a fixed seed.
pub fn multistart(
    p: &NlpProblem,
    k: usize,
    jitter: f64,
    seed: u64,
) -> Result<(Vec<f64>, SolveStatus)> {
    if k == 0 {
        return Err(Error::InvalidSpec {
            reason: "multistart needs at least one run".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Sample, SolveStatus)> = None;
    let mut failures = 0usize;
    for run in 0..k {
        let x0: Vec<f64> = if run == 0 {
            p.initial_point.clone()
        } else {
            p.initial_point
                .iter()
                .map(|&v| v + rng.gen_range(-jitter..=jitter))
                .collect()
        };
        match solve_core(p, &x0, &mut |_| {}) {
            Ok((sample, status)) => {
                let replace = match &best {
                    None => true,
                    Some((b, _)) => is_better(&sample, b),
                };
                if replace {
                    best = Some((sample, status));
                }
            }
            Err(_) => failures += 1,
        }
    }
    if failures == k {
        return Err(Error::AllRunsFailed);
    }
    let (sample, status) = best.ok_or(Error::AllRunsFailed)?;
    Ok((sample.x, status))
}
