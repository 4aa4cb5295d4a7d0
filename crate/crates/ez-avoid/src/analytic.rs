//! Closed-form strategies and first-order-condition oracles.
//!
//! The unconstrained minimum-time problem has a fully analytic solution
//! (constant heading along the chord). The boundary-riding heading for the
//! hard-constrained problem is available in closed form via a half-angle
//! substitution. For the penalty formulation the necessary conditions
//! (costate rates, stationarity) are implemented directly so that numeric
//! trajectories can be cross-checked against them.
//!
//! The published simplified control expression for the penalty formulation
//! does not satisfy its own stationarity condition on general states, so
//! [`closed_form_control_c`] always cross-checks the candidates and falls
//! back to a bracketing root search of the stationarity residual.

use std::f64::consts::PI;

use crate::ez::{
    aspect_angle, distance, penalty_g, rho_max, wrap_angle, EngagementZone, VehicleState, EPS_D,
};
use crate::{Error, Result};

/// Adjoint pair for the planar position states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostatePair {
    pub p_x: f64,
    pub p_y: f64,
}

impl CostatePair {
    pub fn new(p_x: f64, p_y: f64) -> Self {
        Self { p_x, p_y }
    }

    fn norm(&self) -> f64 {
        self.p_x.hypot(self.p_y)
    }
}

/// Both headings that keep the vehicle on the zone boundary at a given
/// state, together with the shared scalar `sigma1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryHeadingRoots {
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub sigma1: f64,
}

/// Constant optimal heading of the unconstrained minimum-time problem:
/// the four-quadrant angle of the chord from `x0` to `xf`.
pub fn scenario_a_heading(x0: VehicleState, xf: VehicleState) -> Result<f64> {
    let dx = xf.x - x0.x;
    let dy = xf.y - x0.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateBoundary);
    }
    Ok(wrap_angle(dy.atan2(dx)))
}

/// Arrival time of the unconstrained minimum-time problem: chord length
/// over speed.
pub fn scenario_a_time(x0: VehicleState, xf: VehicleState, v: f64) -> Result<f64> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::NonpositiveSpeed { v });
    }
    Ok((xf.x - x0.x).hypot(xf.y - x0.y) / v)
}

/// Both boundary-riding headings at state `s`.
///
/// The boundary condition `rho_max(xi) = d` reduces, via the half-angle
/// substitution `tau = tan(psi/2)`, to the quadratic
/// `(sigma1 - x) tau^2 + 2 y tau + (sigma1 + x) = 0` with
/// `sigma1 = (2 d^2 - r_max d) / r_max`. Both roots are returned; each
/// satisfies `x cos psi + y sin psi + sigma1 = 0` to within 1e-9.
///
/// When the quadratic degenerates (`sigma1 == x`) one root moves to
/// `psi = pi` and the other follows the remaining linear equation.
pub fn boundary_heading_roots(
    s: VehicleState,
    ez: &EngagementZone,
) -> Result<BoundaryHeadingRoots> {
    let d = distance(s);
    if d <= EPS_D {
        return Err(Error::OriginSingularity { d, eps: EPS_D });
    }
    let r = ez.r_max;
    let sigma1 = (2.0 * d * d - r * d) / r;
    let den = sigma1 - s.x;
    let disc_raw = s.y * s.y - (sigma1 - s.x) * (sigma1 + s.x);
    if disc_raw < -1e-12 * d * d {
        return Err(Error::NoBoundaryHeading { disc: disc_raw });
    }
    let disc = disc_raw.max(0.0);
    let tiny = 1e-14 * (d + r);

    let (psi_plus, psi_minus) = if den.abs() <= tiny {
        if s.y.abs() <= tiny {
            // both roots collapse onto the half-angle pole
            (PI, PI)
        } else {
            // leading coefficient vanishes: 2 y tau + (sigma1 + x) = 0,
            // with the second root at tau -> inf, i.e. psi = pi
            (2.0 * (-(sigma1 + s.x) / (2.0 * s.y)).atan(), PI)
        }
    } else if disc == 0.0 {
        let psi = 2.0 * (-s.y / den).atan();
        (psi, psi)
    } else {
        let sq = disc.sqrt();
        let q = -(s.y + sq.copysign(s.y));
        let tau_a = q / den; // root with -sign(y) * sqrt(disc)
        let tau_b = (sigma1 + s.x) / q; // the other root
        let (tau_plus, tau_minus) = if s.y < 0.0 {
            (tau_a, tau_b)
        } else {
            (tau_b, tau_a)
        };
        (2.0 * tau_plus.atan(), 2.0 * tau_minus.atan())
    };

    for psi in [psi_plus, psi_minus] {
        let res = s.x * psi.cos() + s.y * psi.sin() + sigma1;
        if res.abs() > 1e-9 * (d + r) {
            return Err(Error::NumericalFailure {
                reason: format!("boundary root residual {res:e} at psi = {psi}"),
            });
        }
    }

    Ok(BoundaryHeadingRoots {
        psi_plus,
        psi_minus,
        sigma1,
    })
}

/// Pick the boundary root whose velocity vector best aligns with the given
/// travel direction (positive inner product), breaking exact ties toward
/// `psi_plus`. Fails when both roots are orthogonal to the direction.
pub fn select_boundary_root(roots: &BoundaryHeadingRoots, travel_direction: f64) -> Result<f64> {
    let ip_plus = (roots.psi_plus - travel_direction).cos();
    let ip_minus = (roots.psi_minus - travel_direction).cos();
    if ip_plus.abs() < 1e-12 && ip_minus.abs() < 1e-12 {
        return Err(Error::AmbiguousRoot);
    }
    if ip_plus >= ip_minus {
        Ok(roots.psi_plus)
    } else {
        Ok(roots.psi_minus)
    }
}

/// Stationarity residual of the penalty-formulation Hamiltonian on an
/// interior (inside-zone) arc:
/// `-p_x v sin psi + p_y v cos psi + r_max/(2 d^2) (x sin psi - y cos psi)`.
/// Zero at an optimal interior heading.
pub fn stationarity_residual_c(
    s: VehicleState,
    psi: f64,
    p: CostatePair,
    v: f64,
    ez: &EngagementZone,
) -> Result<f64> {
    let d2 = s.x * s.x + s.y * s.y;
    if d2.sqrt() <= EPS_D {
        return Err(Error::OriginSingularity {
            d: d2.sqrt(),
            eps: EPS_D,
        });
    }
    let kin = -p.p_x * v * psi.sin() + p.p_y * v * psi.cos();
    let zone = ez.r_max / (2.0 * d2) * (s.x * psi.sin() - s.y * psi.cos());
    Ok(kin + zone)
}

/// Find a heading that zeroes [`stationarity_residual_c`] by bracketing sign
/// changes on a uniform scan of (-pi, pi] and bisecting each bracket.
///
/// When several roots exist the one best aligned with the costate direction
/// is returned (for vanishing costates: the one pointing away from the zone
/// origin). If the residual is identically zero every heading is stationary
/// and the same alignment rule picks the result directly.
pub fn stationary_heading_root_search(
    s: VehicleState,
    p: CostatePair,
    v: f64,
    ez: &EngagementZone,
) -> Result<f64> {
    const SCAN: usize = 720;
    let f = |psi: f64| stationarity_residual_c(s, psi, p, v, ez);
    // probe for a degenerate (identically zero) residual
    let mut max_abs: f64 = 0.0;
    let mut values = Vec::with_capacity(SCAN + 1);
    for k in 0..=SCAN {
        let psi = -PI + (k as f64) * (2.0 * PI / SCAN as f64);
        let val = f(psi)?;
        max_abs = max_abs.max(val.abs());
        values.push((psi, val));
    }

    let score = |psi: f64| {
        if p.norm() > 1e-12 {
            p.p_x * psi.cos() + p.p_y * psi.sin()
        } else {
            s.x * psi.cos() + s.y * psi.sin()
        }
    };

    if max_abs < 1e-13 {
        let psi = if p.norm() > 1e-12 {
            p.p_y.atan2(p.p_x)
        } else {
            s.y.atan2(s.x)
        };
        return Ok(wrap_angle(psi));
    }

    let mut roots: Vec<f64> = Vec::new();
    for w in values.windows(2) {
        let (a, fa) = w[0];
        let (b, fb) = w[1];
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    if values.last().map(|&(_, v)| v) == Some(0.0) {
        roots.push(PI);
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    roots
        .into_iter()
        .map(|psi| (psi, score(psi)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(psi, _)| wrap_angle(psi))
        .ok_or(Error::NumericalFailure {
            reason: "stationarity root search found no bracket".into(),
        })
}

/// Which expression produced the heading returned by
/// [`closed_form_control_c`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlSource {
    /// The simplified published expression.
    Simplified,
    /// The unsimplified published expression.
    Unsimplified,
    /// Bracketing root search of the stationarity residual.
    RootSearch,
}

/// Result of the closed-form interior-arc control evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ControlC {
    /// The heading to use; always cross-checked against the stationarity
    /// residual.
    pub heading: f64,
    /// Stationarity residual at `heading`.
    pub residual: f64,
    pub source: ControlSource,
    /// Set when neither published expression satisfied stationarity to
    /// 1e-6 and the root-search fallback was used.
    pub discrepancy: bool,
    /// Best residual over the candidates of the simplified expression.
    pub simplified_residual: f64,
    /// Best residual over the candidates of the unsimplified expression.
    pub unsimplified_residual: f64,
}

/// Interior-arc optimal heading for the penalty formulation.
///
/// Evaluates both published arccosine expressions (the unsimplified and the
/// simplified one), cross-checks every candidate against
/// [`stationarity_residual_c`], and returns the best candidate if its
/// residual is within 1e-6. Otherwise a discrepancy is flagged (via the
/// returned record and a `log::warn`) and the bracketing root search is
/// used instead. Among near-tied candidates the heading best aligned with
/// the costate direction wins.
pub fn closed_form_control_c(
    s: VehicleState,
    p: CostatePair,
    v: f64,
    ez: &EngagementZone,
) -> Result<ControlC> {
    let d2 = s.x * s.x + s.y * s.y;
    if d2.sqrt() <= EPS_D {
        return Err(Error::OriginSingularity {
            d: d2.sqrt(),
            eps: EPS_D,
        });
    }
    let r = ez.r_max;
    let p2 = p.p_x * p.p_x + p.p_y * p.p_y;
    let xp = s.x * p.p_x + s.y * p.p_y;

    // unsimplified form: r x / (2 d^2) - p_x v over
    //   v^2 |p|^2 + r / (4 d^2) - v r (x.p) / d^2
    let num_u = r * s.x / (2.0 * d2) - p.p_x * v;
    let den_u = v * v * p2 + r / (4.0 * d2) - v * r * xp / d2;
    // simplified form: 2 r x - 4 p_x d^2 over
    //   4 v^2 d^2 |p|^2 + r^2 - 4 v r (x.p)
    let num_s = 2.0 * r * s.x - 4.0 * p.p_x * d2;
    let den_s = 4.0 * v * v * d2 * p2 + r * r - 4.0 * v * r * xp;

    let mut last_bad_arg = f64::NAN;
    let mut candidates: Vec<(f64, ControlSource)> = Vec::new();
    for (num, den, source) in [
        (num_s, den_s, ControlSource::Simplified),
        (num_u, den_u, ControlSource::Unsimplified),
    ] {
        if den == 0.0 {
            continue;
        }
        let arg = num / den;
        if arg.abs() > 1.0 + 1e-12 {
            last_bad_arg = arg;
            continue;
        }
        let base = arg.clamp(-1.0, 1.0).acos();
        candidates.push((base, source));
        candidates.push((-base, source));
    }

    let align = |psi: f64| {
        if p.norm() > 1e-12 {
            p.p_x * psi.cos() + p.p_y * psi.sin()
        } else {
            s.x * psi.cos() + s.y * psi.sin()
        }
    };

    let mut best: Option<(f64, f64, ControlSource)> = None;
    let mut best_simplified = f64::INFINITY;
    let mut best_unsimplified = f64::INFINITY;
    for (psi, source) in candidates {
        let res = stationarity_residual_c(s, psi, p, v, ez)?.abs();
        match source {
            ControlSource::Simplified => best_simplified = best_simplified.min(res),
            ControlSource::Unsimplified => best_unsimplified = best_unsimplified.min(res),
            ControlSource::RootSearch => {}
        }
        let replace = match best {
            None => true,
            Some((bres, bpsi, _)) => {
                res < bres - 1e-9 || (res < bres + 1e-9 && align(psi) > align(bpsi))
            }
        };
        if replace {
            best = Some((res, psi, source));
        }
    }

    match best {
        Some((res, psi, source)) if res <= 1e-6 => Ok(ControlC {
            heading: wrap_angle(psi),
            residual: res,
            source,
            discrepancy: false,
            simplified_residual: best_simplified,
            unsimplified_residual: best_unsimplified,
        }),
        Some((res, _, _)) => {
            log::warn!(
                "published interior-control expressions miss stationarity \
                 (best residual {res:e}); falling back to root search"
            );
            let psi = stationary_heading_root_search(s, p, v, ez)?;
            let residual = stationarity_residual_c(s, psi, p, v, ez)?;
            Ok(ControlC {
                heading: psi,
                residual,
                source: ControlSource::RootSearch,
                discrepancy: true,
                simplified_residual: best_simplified,
                unsimplified_residual: best_unsimplified,
            })
        }
        None => {
            log::warn!(
                "published interior-control expressions unusable at this state \
                 (arccos argument {last_bad_arg})"
            );
            Err(Error::ArccosDomain { arg: last_bad_arg })
        }
    }
}

/// Costate rates on an inside-zone arc of the penalty formulation. Outside
/// the zone the running cost has no state gradient and the rates vanish.
///
/// Inside, with `w = d - x cos psi - y sin psi`:
///
/// ```text
/// p_x' = r x w / d^4 - r/(2 d^2) (x/d - cos psi)
/// p_y' = r y w / d^4 - r/(2 d^2) (y/d - sin psi)
/// ```
pub fn costate_rates_c(s: VehicleState, psi: f64, ez: &EngagementZone) -> Result<(f64, f64)> {
    let xi = aspect_angle(s, psi)?;
    let d = distance(s);
    if d > rho_max(xi, ez) {
        return Ok((0.0, 0.0));
    }
    let r = ez.r_max;
    let d2 = d * d;
    let d4 = d2 * d2;
    let w = d - s.x * psi.cos() - s.y * psi.sin();
    let px_dot = r * s.x * w / d4 - r / (2.0 * d2) * (s.x / d - psi.cos());
    let py_dot = r * s.y * w / d4 - r / (2.0 * d2) * (s.y / d - psi.sin());
    Ok((px_dot, py_dot))
}

/// Problem variant label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ScenarioKind {
    A,
    B,
    C,
    D,
}

/// Hamiltonian value for the given scenario.
///
/// * A: `p . f`
/// * B: `p . f + mu c`, with the complementarity rules `mu = 0` when
///   `c < 0` and `mu <= 0` when the constraint is active.
/// * C: `p . f + k_ez g + 1` — the running cost is `k_ez g + 1` so that the
///   Hamiltonian is consistent with the cost `t_f + k_ez * integral(g) dt`.
/// * D: `p . f + g`.
///
/// `mu` is ignored for A, C and D; `k_ez` is ignored except for C.
#[allow(clippy::too_many_arguments)]
pub fn hamiltonian(
    scenario: ScenarioKind,
    s: VehicleState,
    psi: f64,
    p: CostatePair,
    mu: f64,
    v: f64,
    ez: &EngagementZone,
    k_ez: f64,
) -> Result<f64> {
    let kinematic = p.p_x * v * psi.cos() + p.p_y * v * psi.sin();
    match scenario {
        ScenarioKind::A => Ok(kinematic),
        ScenarioKind::B => {
            let c = crate::ez::constraint_c(s, psi, ez)?;
            let active_tol = 1e-9 * (1.0 + ez.r_max);
            if mu > 0.0 || (c < -active_tol && mu != 0.0) {
                return Err(Error::InvalidMultiplier { mu, c });
            }
            Ok(kinematic + mu * c)
        }
        ScenarioKind::C => {
            let g = penalty_g(s, psi, ez)?;
            Ok(kinematic + k_ez * g + 1.0)
        }
        ScenarioKind::D => {
            let g = penalty_g(s, psi, ez)?;
            Ok(kinematic + g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ez::constraint_c;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ez2() -> EngagementZone {
        EngagementZone::new(2.0).unwrap()
    }

    #[test]
    fn heading_examples() {
        let o = VehicleState::new(0.0, 0.0);
        assert_abs_diff_eq!(
            scenario_a_heading(o, VehicleState::new(1.0, 0.0)).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            scenario_a_heading(o, VehicleState::new(0.0, -1.0)).unwrap(),
            -PI / 2.0
        );
        let psi =
            scenario_a_heading(VehicleState::new(1.0, 3.0), VehicleState::new(-0.5, -3.0))
                .unwrap();
        assert_abs_diff_eq!(psi, (-6.0f64).atan2(-1.5), epsilon = 1e-15);
        assert_abs_diff_eq!(psi, -1.8158, epsilon = 1e-4);
        assert!(matches!(
            scenario_a_heading(o, o),
            Err(Error::DegenerateBoundary)
        ));
    }

    #[test]
    fn time_examples() {
        let o = VehicleState::new(0.0, 0.0);
        assert_abs_diff_eq!(
            scenario_a_time(o, VehicleState::new(3.0, 4.0), 1.0).unwrap(),
            5.0
        );
        assert_abs_diff_eq!(scenario_a_time(o, o, 2.0).unwrap(), 0.0);
        let t = scenario_a_time(VehicleState::new(1.0, 3.0), VehicleState::new(-0.5, -3.0), 1.0)
            .unwrap();
        assert_abs_diff_eq!(t, 38.25f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(t, 6.1847, epsilon = 1e-4);
        assert!(matches!(
            scenario_a_time(o, VehicleState::new(1.0, 0.0), 0.0),
            Err(Error::NonpositiveSpeed { .. })
        ));
    }

    proptest! {
        #[test]
        fn heading_translation_invariant_rotation_equivariant(
            x0 in -5.0f64..5.0, y0 in -5.0f64..5.0,
            dx in 0.1f64..5.0, dy in -5.0f64..5.0,
            tx in -3.0f64..3.0, ty in -3.0f64..3.0,
            rot in -3.0f64..3.0,
        ) {
            let a = VehicleState::new(x0, y0);
            let b = VehicleState::new(x0 + dx, y0 + dy);
            let psi = scenario_a_heading(a, b).unwrap();
            let shifted = scenario_a_heading(
                VehicleState::new(a.x + tx, a.y + ty),
                VehicleState::new(b.x + tx, b.y + ty),
            ).unwrap();
            prop_assert!((wrap_angle(psi - shifted)).abs() < 1e-12);
            let rotate = |s: VehicleState| VehicleState::new(
                s.x * rot.cos() - s.y * rot.sin(),
                s.x * rot.sin() + s.y * rot.cos(),
            );
            let rotated = scenario_a_heading(rotate(a), rotate(b)).unwrap();
            prop_assert!(wrap_angle(rotated - psi - rot).abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_roots_symmetric_point() {
        // s = (r_max/2, 0): sigma1 = 0 and the roots solve cos psi = 0
        let ez = ez2();
        let roots = boundary_heading_roots(VehicleState::new(1.0, 0.0), &ez).unwrap();
        assert_abs_diff_eq!(roots.sigma1, 0.0, epsilon = 1e-15);
        let mut pair = [roots.psi_plus, roots.psi_minus];
        pair.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(pair[0], -PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair[1], PI / 2.0, epsilon = 1e-12);

        let ez3 = EngagementZone::new(3.0).unwrap();
        let roots = boundary_heading_roots(VehicleState::new(1.5, 0.0), &ez3).unwrap();
        assert_abs_diff_eq!(roots.sigma1, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn boundary_roots_residuals_on_random_states() {
        let ez = ez2();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let d = rng.gen_range(0.05..=1.0) * ez.r_max;
            let phi = rng.gen_range(-PI..PI);
            let s = VehicleState::new(d * phi.cos(), d * phi.sin());
            let roots = boundary_heading_roots(s, &ez).unwrap();
            for psi in [roots.psi_plus, roots.psi_minus] {
                let xi = aspect_angle(s, psi).unwrap();
                let res = (rho_max(xi, &ez) - distance(s)).abs();
                assert!(res < 1e-9 * ez.r_max, "residual {res:e} at d = {d}");
            }
        }
    }

    #[test]
    fn boundary_roots_outside_reach_fail() {
        let ez = ez2();
        assert!(matches!(
            boundary_heading_roots(VehicleState::new(3.0, 0.0), &ez),
            Err(Error::NoBoundaryHeading { .. })
        ));
    }

    #[test]
    fn boundary_root_degenerate_full_reach() {
        // at (r_max, 0) only the head-on heading keeps rho_max = d
        let ez = ez2();
        let roots = boundary_heading_roots(VehicleState::new(2.0, 0.0), &ez).unwrap();
        assert_abs_diff_eq!(roots.psi_plus, PI, epsilon = 1e-9);
        assert_abs_diff_eq!(roots.psi_minus, PI, epsilon = 1e-9);
    }

    #[test]
    fn root_selection() {
        let roots = BoundaryHeadingRoots {
            psi_plus: PI / 2.0,
            psi_minus: -PI / 2.0,
            sigma1: 0.0,
        };
        assert_abs_diff_eq!(
            select_boundary_root(&roots, PI / 2.0).unwrap(),
            PI / 2.0
        );
        assert_abs_diff_eq!(
            select_boundary_root(&roots, -PI / 2.0).unwrap(),
            -PI / 2.0
        );
        assert!(matches!(
            select_boundary_root(&roots, 0.0),
            Err(Error::AmbiguousRoot)
        ));
    }

    #[test]
    fn stationarity_far_field_and_zero_costates() {
        let ez = ez2();
        // far state: the zone term is bounded by r_max/(2 d), so the
        // kinematic root psi = atan2(p_y, p_x) becomes stationary
        let s = VehicleState::new(1e9, 1e9);
        let p = CostatePair::new(0.3, -0.8);
        let psi = p.p_y.atan2(p.p_x);
        let res = stationarity_residual_c(s, psi, p, 1.0, &ez).unwrap();
        assert!(res.abs() < 1e-8, "res = {res:e}");
        // p = 0, s = (1, 0): residual reduces to (r/2) sin psi
        let s = VehicleState::new(1.0, 0.0);
        let p0 = CostatePair::new(0.0, 0.0);
        for psi in [0.0, PI] {
            assert_abs_diff_eq!(
                stationarity_residual_c(s, psi, p0, 1.0, &ez).unwrap(),
                0.0,
                epsilon = 1e-15
            );
        }
        assert_abs_diff_eq!(
            stationarity_residual_c(s, 0.5, p0, 1.0, &ez).unwrap(),
            ez.r_max / 2.0 * 0.5f64.sin(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn root_search_zeroes_residual_on_random_states() {
        let ez = ez2();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let s = VehicleState::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if distance(s) < 0.05 {
                continue;
            }
            let p = CostatePair::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let v = rng.gen_range(0.2..3.0);
            let psi = stationary_heading_root_search(s, p, v, &ez).unwrap();
            let res = stationarity_residual_c(s, psi, p, v, &ez).unwrap();
            assert!(res.abs() < 1e-10, "residual {res:e}");
        }
    }

    #[test]
    fn argmin_of_hamiltonian_is_stationary() {
        // costates chosen so the global minimizer sits strictly inside the
        // zone, away from the penalty switch
        let ez = ez2();
        let s = VehicleState::new(0.4, 0.3);
        let p = CostatePair::new(2.1, 2.2);
        let v = 1.0;
        let mut best = (f64::INFINITY, 0.0);
        let n = 4_000_000usize;
        let mut psi = -PI;
        let step = 2.0 * PI / n as f64;
        for _ in 0..=n {
            let h = hamiltonian(ScenarioKind::C, s, psi, p, 0.0, v, &ez, 1.0).unwrap();
            if h < best.0 {
                best = (h, psi);
            }
            psi += step;
        }
        assert!(
            penalty_g(s, best.1, &ez).unwrap() > 0.0,
            "argmin left the interior branch"
        );
        let res = stationarity_residual_c(s, best.1, p, v, &ez).unwrap();
        // grid resolution ~1.6e-6 rad; residual slope is O(1)
        assert!(res.abs() < 1e-5, "residual {res:e} at argmin {}", best.1);
    }

    #[test]
    fn closed_form_control_cases() {
        let ez = ez2();
        // p = 0, s = (1, 0): the simplified expression happens to hold
        let c = closed_form_control_c(
            VehicleState::new(1.0, 0.0),
            CostatePair::new(0.0, 0.0),
            1.0,
            &ez,
        )
        .unwrap();
        assert!(c.residual.abs() < 1e-12);
        assert_abs_diff_eq!(c.heading, 0.0, epsilon = 1e-12);
        assert!(!c.discrepancy);

        // far field: falls back if needed, heading matches atan2(p_y, p_x)
        let p = CostatePair::new(0.5, 0.5);
        let c = closed_form_control_c(VehicleState::new(2e5, -1e5), p, 1.0, &ez).unwrap();
        assert!(
            wrap_angle(c.heading - p.p_y.atan2(p.p_x)).abs() < 1e-4,
            "heading {} vs {}",
            c.heading,
            p.p_y.atan2(p.p_x)
        );
        assert!(c.residual.abs() < 1e-10);
    }

    #[test]
    fn closed_form_control_never_silent_on_random_states() {
        let ez = ez2();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut flagged = 0usize;
        for _ in 0..200 {
            let s = VehicleState::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if distance(s) < 0.05 {
                continue;
            }
            let p = CostatePair::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            match closed_form_control_c(s, p, 1.0, &ez) {
                Ok(c) => {
                    assert!(c.residual.abs() < 1e-6 || c.discrepancy);
                    if c.discrepancy {
                        flagged += 1;
                        // the fallback heading must satisfy stationarity
                        assert!(c.residual.abs() < 1e-10);
                    }
                }
                Err(Error::ArccosDomain { .. }) => flagged += 1,
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        // the published expressions do not hold in general
        assert!(flagged > 0, "expected at least one flagged discrepancy");
    }

    fn random_inside_state(
        rng: &mut ChaCha8Rng,
        ez: &EngagementZone,
    ) -> (VehicleState, f64) {
        loop {
            let s = VehicleState::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let psi = rng.gen_range(-PI..PI);
            if distance(s) < 0.1 {
                continue;
            }
            if let Ok(g) = penalty_g(s, psi, ez) {
                if g > 0.05 {
                    return (s, psi);
                }
            }
        }
    }

    #[test]
    fn costate_rates_match_finite_differences() {
        let ez = ez2();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = CostatePair::new(0.0, 0.0);
        let h = 1e-6;
        for _ in 0..50 {
            let (s, psi) = random_inside_state(&mut rng, &ez);
            let (px_dot, py_dot) = costate_rates_c(s, psi, &ez).unwrap();
            let hc = |x: f64, y: f64| {
                hamiltonian(
                    ScenarioKind::C,
                    VehicleState::new(x, y),
                    psi,
                    p,
                    0.0,
                    1.0,
                    &ez,
                    1.0,
                )
                .unwrap()
            };
            let fd_x = -(hc(s.x + h, s.y) - hc(s.x - h, s.y)) / (2.0 * h);
            let fd_y = -(hc(s.x, s.y + h) - hc(s.x, s.y - h)) / (2.0 * h);
            let scale = px_dot.abs().max(py_dot.abs()).max(1e-6);
            assert!(
                (px_dot - fd_x).abs() / scale < 1e-5,
                "px {px_dot} vs fd {fd_x}"
            );
            assert!(
                (py_dot - fd_y).abs() / scale < 1e-5,
                "py {py_dot} vs fd {fd_y}"
            );
        }
    }

    #[test]
    fn costate_rates_outside_zone_vanish() {
        let ez = ez2();
        let (px_dot, py_dot) =
            costate_rates_c(VehicleState::new(5.0, 5.0), 0.7, &ez).unwrap();
        assert_eq!((px_dot, py_dot), (0.0, 0.0));
    }

    #[test]
    fn costate_rate_symmetry_on_axis() {
        let ez = ez2();
        let (_, py_dot) = costate_rates_c(VehicleState::new(0.5, 0.0), PI, &ez).unwrap();
        assert_abs_diff_eq!(py_dot, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_values() {
        let ez = ez2();
        let p = CostatePair::new(1.0, 0.0);
        let far = VehicleState::new(9.0, 9.0);
        // A: p . f
        assert_abs_diff_eq!(
            hamiltonian(ScenarioKind::A, far, 0.0, p, 0.0, 1.0, &ez, 0.0).unwrap(),
            1.0
        );
        // B with inactive constraint equals A
        let ha = hamiltonian(ScenarioKind::A, far, 0.3, p, 0.0, 1.0, &ez, 0.0).unwrap();
        let hb = hamiltonian(ScenarioKind::B, far, 0.3, p, 0.0, 1.0, &ez, 0.0).unwrap();
        assert_abs_diff_eq!(ha, hb, epsilon = 1e-15);
        // inactive constraint with nonzero multiplier is rejected
        assert!(matches!(
            hamiltonian(ScenarioKind::B, far, 0.3, p, -0.5, 1.0, &ez, 0.0),
            Err(Error::InvalidMultiplier { .. })
        ));
        // C inside the zone with zero costates: k g + 1 with g = 3
        let h = hamiltonian(
            ScenarioKind::C,
            VehicleState::new(0.5, 0.0),
            PI,
            CostatePair::new(0.0, 0.0),
            0.0,
            1.0,
            &ez,
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(h, 4.0, epsilon = 1e-12);
        // D drops the unit time cost
        let hd = hamiltonian(
            ScenarioKind::D,
            VehicleState::new(0.5, 0.0),
            PI,
            CostatePair::new(0.0, 0.0),
            0.0,
            1.0,
            &ez,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(hd, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn outside_zone_conditions_collapse_to_min_time() {
        let ez = ez2();
        let p = CostatePair::new(0.4, -0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = VehicleState::new(rng.gen_range(2.5..6.0), rng.gen_range(2.5..6.0));
            let psi = rng.gen_range(-PI..PI);
            assert!(constraint_c(s, psi, &ez).unwrap() < 0.0);
            assert_eq!(costate_rates_c(s, psi, &ez).unwrap(), (0.0, 0.0));
            let hc = hamiltonian(ScenarioKind::C, s, psi, p, 0.0, 1.0, &ez, 3.0).unwrap();
            let ha = hamiltonian(ScenarioKind::A, s, psi, p, 0.0, 1.0, &ez, 0.0).unwrap();
            // outside the zone the two Hamiltonians differ by the unit time
            // cost only, so they share minimizers
            assert_abs_diff_eq!(hc - ha, 1.0, epsilon = 1e-15);
        }
    }
}
