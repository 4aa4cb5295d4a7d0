//! Engagement-zone geometry.
//!
//! The keepout region is a cardioid anchored at the origin whose extent
//! depends on the vehicle's aspect angle: a vehicle heading straight at the
//! origin sees the full reach `r_max`, a vehicle heading directly away sees
//! zero. The zone orientation is taken as the worst case for the vehicle
//! (always pointed along the line of sight), so a trajectory that clears
//! [`rho_max`] clears every orientation of the general model.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::{Error, Result};

/// States closer than this to the zone origin have no line-of-sight angle.
pub const EPS_D: f64 = 1e-9;

/// Wrap an angle to the half-open interval (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Cardioid engagement zone. The minimum range is identically zero and the
/// origin is fixed at (0, 0); both are kept as fields only so that reports
/// carry the full geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementZone {
    /// Maximum possible range of the zone [DU].
    pub r_max: f64,
    /// Minimum range [DU]; identically zero in this model.
    pub r_min: f64,
    /// Zone origin [DU]; identically (0, 0) in this model.
    pub origin: [f64; 2],
}

impl EngagementZone {
    /// Build a zone with the given maximum range. Fails unless `r_max` is
    /// finite and strictly positive.
    pub fn new(r_max: f64) -> Result<Self> {
        if !r_max.is_finite() || r_max <= 0.0 {
            return Err(Error::NonpositiveRange { r_max });
        }
        Ok(Self {
            r_max,
            r_min: 0.0,
            origin: [0.0, 0.0],
        })
    }
}

/// Planar vehicle position [DU].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Range of the vehicle from the zone origin.
pub fn distance(s: VehicleState) -> f64 {
    s.x.hypot(s.y)
}

/// Four-quadrant line-of-sight angle from the zone origin to the vehicle,
/// in (-pi, pi]. Undefined within [`EPS_D`] of the origin.
pub fn los_angle(s: VehicleState) -> Result<f64> {
    let d = distance(s);
    if d <= EPS_D {
        return Err(Error::OriginSingularity { d, eps: EPS_D });
    }
    Ok(wrap_angle(s.y.atan2(s.x)))
}

/// Aspect angle: the vehicle's heading relative to the line of sight toward
/// the origin, `psi - lambda - pi`, wrapped to (-pi, pi]. Zero means the
/// velocity vector points straight at the origin.
pub fn aspect_angle(s: VehicleState, psi: f64) -> Result<f64> {
    let lambda = los_angle(s)?;
    Ok(wrap_angle(psi - lambda - PI))
}

/// General cardioid radius at zone angle `theta`, for a vehicle with
/// line-of-sight angle `lambda` and aspect angle `xi`. Maximal (equal to
/// [`rho_max`]) when `theta == lambda`.
pub fn rho_general(theta: f64, lambda: f64, xi: f64, ez: &EngagementZone) -> f64 {
    0.5 * ez.r_max * (0.5 * (xi.cos() + 1.0)) * (1.0 + (0.5 * PI - lambda + theta).sin())
}

/// Worst-case (orientation-aligned) zone radius at aspect angle `xi`:
/// `(r_max / 2) (cos xi + 1)`. Even in `xi`, ranges over [0, r_max].
pub fn rho_max(xi: f64, ez: &EngagementZone) -> f64 {
    0.5 * ez.r_max * (xi.cos() + 1.0)
}

/// Hard path-constraint value `rho_max(xi) - d`. Feasible iff <= 0.
pub fn constraint_c(s: VehicleState, psi: f64, ez: &EngagementZone) -> Result<f64> {
    let xi = aspect_angle(s, psi)?;
    Ok(rho_max(xi, ez) - distance(s))
}

/// Proximity penalty: `rho_max(xi)/d - 1` inside the zone (`d <= rho_max`),
/// exactly zero outside. Continuous across the boundary.
pub fn penalty_g(s: VehicleState, psi: f64, ez: &EngagementZone) -> Result<f64> {
    let xi = aspect_angle(s, psi)?;
    let d = distance(s);
    let rho = rho_max(xi, ez);
    if d <= rho {
        Ok(rho / d - 1.0)
    } else {
        Ok(0.0)
    }
}
