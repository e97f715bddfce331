//! Level sets of the time-to-go.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::characteristics::{numeric_retro, switch_tau, up_anchors};
use crate::error::{domain, Result};
use crate::synthesis::{family_of, value, Family};
use crate::{BoundaryPoint, Manifold, Params, State};

/// Largest `|value - tau|` accepted for a propagated sample.
pub const LEVEL_TOL: f64 = 1e-6;
const RETRO_STEP: f64 = 1e-3;
const SWITCH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsochronePoint {
    /// Angle for circle anchors, side coordinate or cone angle for the square.
    pub param: f64,
    pub state: State,
    pub family: Family,
    pub anchor: BoundaryPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Isochrone {
    pub tau: f64,
    pub points: Vec<IsochronePoint>,
}

/// `n` points of `[a, b]`, endpoints included or not as flagged.
fn spread(a: f64, a_closed: bool, b: f64, b_closed: bool, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| {
            let f = match (a_closed, b_closed) {
                (true, true) => k as f64 / (n - 1) as f64,
                (true, false) => k as f64 / n as f64,
                (false, true) => (k + 1) as f64 / n as f64,
                (false, false) => (k as f64 + 0.5) / n as f64,
            };
            a + (b - a) * f
        })
        .collect()
}

/// The six-branch level set of the circle at `alpha = 1`, sampled with
/// `n_samples` angles per branch. Branch boundaries sit at `pi/2`,
/// `pi - atan(tau)`, `3pi/2` and `2pi - atan(tau)`.
pub fn isochrone_circle(params: &Params, tau: f64, n_samples: usize) -> Result<Isochrone> {
    if !params.is_unit_alpha() {
        return Err(domain(format!("six-branch level sets need alpha = 1, got {}", params.alpha())));
    }
    if params.l() > 1.0 {
        return Err(domain(format!("six-branch level sets need l <= alpha, got l = {}", params.l())));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(domain(format!("tau must be non-negative, got {tau}")));
    }
    if n_samples < 2 {
        return Err(domain("at least two samples per branch are required"));
    }
    let l = params.l();
    let phi = tau.atan();
    let half = 0.5 * tau * tau;
    let branches: [(f64, bool, f64, bool, Family); 6] = [
        (0.0, false, FRAC_PI_2, true, Family::CircleUpper),
        (FRAC_PI_2, false, PI - phi, false, Family::CircleUpper),
        (PI - phi, true, PI, false, Family::CircleUpperSwitched),
        (PI, false, 1.5 * PI, true, Family::CircleLower),
        (1.5 * PI, false, 2.0 * PI - phi, false, Family::CircleLower),
        (2.0 * PI - phi, true, 2.0 * PI, false, Family::CircleLowerSwitched),
    ];
    let mut points = Vec::with_capacity(6 * n_samples);
    for (idx, &(a, ac, b, bc, family)) in branches.iter().enumerate() {
        if b <= a {
            continue;
        }
        for theta in spread(a, ac, b, bc, n_samples) {
            let (s, c) = theta.sin_cos();
            let t = s / c;
            let base = l * (c - tau * s);
            let state = match idx {
                0 | 1 => State::new(base - half, l * s + tau),
                2 => State::new(base + half + t * t + 2.0 * tau * t, l * s - 2.0 * t - tau),
                3 | 4 => State::new(base + half, l * s - tau),
                _ => State::new(base - half - t * t - 2.0 * tau * t, l * s + 2.0 * t + tau),
            };
            points.push(IsochronePoint {
                param: theta,
                state,
                family,
                anchor: BoundaryPoint::CircleTheta(theta),
            });
        }
    }
    Ok(Isochrone { tau, points })
}

/// Propagates each anchor to retrograde time `tau` without any filtering.
pub fn propagate_anchors(
    m: &Manifold,
    params: &Params,
    tau: f64,
    anchors: &[BoundaryPoint],
) -> Result<Vec<IsochronePoint>> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(domain(format!("tau must be non-negative, got {tau}")));
    }
    anchors
        .iter()
        .map(|b| {
            let (state, _) = numeric_retro(m, b, params, tau, RETRO_STEP)?;
            // At the switch instant itself the post-switch family is reported.
            let switched = tau > 0.0 && switch_tau(b).is_some_and(|ts| tau >= ts - SWITCH_EPS);
            Ok(IsochronePoint { param: b.param(), state, family: family_of(b, switched), anchor: *b })
        })
        .collect()
}

/// Level set for any target and `alpha`, from `n_samples` anchors per UP
/// interval (corner cones included). Propagated states whose value differs
/// from `tau` by more than [`LEVEL_TOL`] are dropped: their characteristic
/// has already been overtaken by a faster one.
pub fn isochrone_generic(m: &Manifold, params: &Params, tau: f64, n_samples: usize) -> Result<Isochrone> {
    if n_samples < 1 {
        return Err(domain("at least one anchor per interval is required"));
    }
    let anchors = up_anchors(m, params, n_samples);
    let points = propagate_anchors(m, params, tau, &anchors)?
        .into_iter()
        .filter(|p| value(m, params, &p.state).is_ok_and(|v| (v - tau).abs() <= LEVEL_TOL))
        .collect();
    Ok(Isochrone { tau, points })
}
