//! Brute-force minimum time over bang-bang policies with at most one switch.
//!
//! Independent of the synthesis: it only uses the plant, the closed target
//! set and exact first-hit times of constant-control arcs. A policy is
//! `u0` until `t_switch`, then `-u0` until the state first touches the closed
//! target. Switch times are scanned on a grid and refined locally.

use crate::error::{domain, Error, Result};
use crate::synthesis::{value, Locus};
use crate::{Manifold, Params, State};

/// Tolerance for "touching" the closed target.
const TOUCH_TOL: f64 = 1e-12;

/// Bang-bang policy: `u0` on `[0, t_switch)`, `-u0` afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyCandidate {
    pub u0: f64,
    pub t_switch: f64,
    pub t_final: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Coarse switch-time step.
    pub step: f64,
    pub horizon: f64,
    pub refine_tol: f64,
    /// Also scan two-switch policies (falsification probe; slow).
    pub two_switch: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { step: 1e-2, horizon: 20.0, refine_tol: 1e-4, two_switch: false }
    }
}

/// State after time `t` under constant control `u`.
fn flow(s: &State, u: f64, alpha: f64, t: f64) -> State {
    let a = alpha * u;
    State::new(s.x1 + s.x2 * t + 0.5 * a * t * t, s.x2 + a * t)
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * t + k)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &k)| i as f64 * k).collect()
}

/// Real roots of the polynomial (coefficients lowest first) in `[a, b]`,
/// ascending. Critical points split the interval into monotone pieces, each
/// bisected; critical points where the polynomial nearly vanishes count as
/// (double) roots.
fn poly_roots(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    if c.len() == 2 {
        let r = -c[0] / c[1];
        return if r >= a && r <= b { vec![r] } else { Vec::new() };
    }
    let crit = poly_roots(&poly_deriv(&c), a, b);
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(a);
    knots.extend(crit.iter().copied().filter(|&t| t > a && t < b));
    knots.push(b);
    let scale = c.iter().fold(0.0f64, |m, k| m.max(k.abs())).max(1.0);
    let mut out = Vec::new();
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (flo, fhi) = (poly_eval(&c, lo), poly_eval(&c, hi));
        if flo.abs() <= TOUCH_TOL * scale {
            out.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        let (mut l, mut h) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (l + h);
            if m <= l || m >= h {
                break;
            }
            if poly_eval(&c, m).signum() == flo.signum() {
                l = m;
            } else {
                h = m;
            }
        }
        out.push(h);
    }
    if let Some(&last) = knots.last() {
        if poly_eval(&c, last).abs() <= TOUCH_TOL * scale {
            out.push(last);
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out.dedup();
    out
}

fn in_target(m: &Manifold, s: &State) -> bool {
    match m {
        Manifold::Circle { l } => s.x1 * s.x1 + s.x2 * s.x2 <= l * l * (1.0 + TOUCH_TOL),
        Manifold::Square => s.x1.abs().max(s.x2.abs()) <= 1.0 + TOUCH_TOL,
    }
}

/// Earliest `t` in `[0, horizon]` at which the constant-control arc from `s`
/// touches the closed target.
pub fn first_hit(m: &Manifold, params: &Params, s: &State, u: f64, horizon: f64) -> Option<f64> {
    if horizon < 0.0 {
        return None;
    }
    if in_target(m, s) {
        return Some(0.0);
    }
    let a = params.alpha() * u;
    // x1(t) = p0 + p1 t + p2 t^2, x2(t) = q0 + q1 t.
    let p = [s.x1, s.x2, 0.5 * a];
    let q = [s.x2, a];
    let mut times = match m {
        Manifold::Circle { l } => {
            let r2 = [
                p[0] * p[0] + q[0] * q[0] - l * l,
                2.0 * p[0] * p[1] + 2.0 * q[0] * q[1],
                p[1] * p[1] + 2.0 * p[0] * p[2] + q[1] * q[1],
                2.0 * p[1] * p[2],
                p[2] * p[2],
            ];
            let mut t = poly_roots(&r2, 0.0, horizon);
            t.extend(poly_roots(&poly_deriv(&r2), 0.0, horizon));
            t
        }
        Manifold::Square => {
            let mut t = Vec::new();
            for e in [-1.0, 1.0] {
                t.extend(poly_roots(&[p[0] - e, p[1], p[2]], 0.0, horizon));
                t.extend(poly_roots(&[q[0] - e, q[1]], 0.0, horizon));
            }
            t.extend(poly_roots(&[p[1], 2.0 * p[2]], 0.0, horizon));
            t
        }
    };
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    times.into_iter().find(|&t| in_target(m, &flow(s, u, params.alpha(), t)))
}

/// Total time of the one-switch policy, or infinity if it misses.
fn one_switch_time(m: &Manifold, params: &Params, s0: &State, u0: f64, ts: f64, horizon: f64) -> f64 {
    let s1 = flow(s0, u0, params.alpha(), ts);
    match first_hit(m, params, &s1, -u0, horizon - ts) {
        Some(t) => ts + t,
        None => f64::INFINITY,
    }
}

/// Best policy found by the grid scan and local refinement.
pub fn oracle_best(m: &Manifold, params: &Params, s0: &State, cfg: &OracleConfig) -> Result<PolicyCandidate> {
    if !(cfg.step > 0.0 && cfg.horizon > 0.0 && cfg.refine_tol > 0.0) {
        return Err(domain("oracle step, horizon and refine_tol must be positive"));
    }
    if m.signed_distance(s0) < -TOUCH_TOL {
        return Err(Error::AlreadyTerminated(s0.x1, s0.x2));
    }
    let h = cfg.horizon;
    let mut best = PolicyCandidate { u0: 1.0, t_switch: f64::INFINITY, t_final: f64::INFINITY };
    if in_target(m, s0) {
        return Ok(PolicyCandidate { u0: 1.0, t_switch: 0.0, t_final: 0.0 });
    }
    for u0 in [-1.0, 1.0] {
        let direct = first_hit(m, params, s0, u0, h).unwrap_or(f64::INFINITY);
        if direct < best.t_final {
            best = PolicyCandidate { u0, t_switch: direct, t_final: direct };
        }
        // A switch after the direct hit cannot help.
        let limit = direct.min(h);
        let n = (limit / cfg.step).floor() as usize;
        let grid: Vec<(f64, f64)> = (1..=n)
            .map(|k| {
                let ts = k as f64 * cfg.step;
                (ts, one_switch_time(m, params, s0, u0, ts, h))
            })
            .collect();
        // Refine around the three best grid points.
        let mut order: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].1.is_finite()).collect();
        order.sort_by(|&i, &j| grid[i].1.partial_cmp(&grid[j].1).unwrap());
        for &i in order.iter().take(3) {
            let (mut center, mut val) = grid[i];
            let mut half = cfg.step;
            while half >= cfg.refine_tol * 0.1 {
                let lo = (center - half).max(0.0);
                let hi = (center + half).min(limit);
                for j in 0..=20 {
                    let ts = lo + (hi - lo) * j as f64 / 20.0;
                    let v = one_switch_time(m, params, s0, u0, ts, h);
                    if v < val {
                        val = v;
                        center = ts;
                    }
                }
                half *= 0.2;
            }
            if val < best.t_final {
                best = PolicyCandidate { u0, t_switch: center, t_final: val };
            }
        }
        if cfg.two_switch {
            let coarse = 5.0 * cfg.step;
            let n1 = (limit / coarse).floor() as usize;
            for i in 1..=n1 {
                let t1 = i as f64 * coarse;
                let s1 = flow(s0, u0, params.alpha(), t1);
                if in_target(m, &s1) {
                    break;
                }
                let lim2 = first_hit(m, params, &s1, -u0, h - t1).unwrap_or(h - t1);
                let n2 = (lim2 / coarse).floor() as usize;
                for k in 1..=n2 {
                    let t2 = k as f64 * coarse;
                    let s2 = flow(&s1, -u0, params.alpha(), t2);
                    if let Some(t3) = first_hit(m, params, &s2, u0, h - t1 - t2) {
                        let total = t1 + t2 + t3;
                        if total < best.t_final {
                            best = PolicyCandidate { u0, t_switch: t1, t_final: total };
                        }
                    }
                }
            }
        }
    }
    if best.t_final.is_finite() {
        Ok(best)
    } else {
        Err(Error::HorizonExceeded(h))
    }
}

/// Minimal accepted final time.
pub fn oracle_min_time(m: &Manifold, params: &Params, s0: &State, cfg: &OracleConfig) -> Result<f64> {
    oracle_best(m, params, s0, cfg).map(|c| c.t_final)
}

/// Why a grid state is left out of the error summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    /// Strictly inside the target.
    Interior,
    /// On the manifold but not on the UP; the closed-target oracle reports 0
    /// while the time to reach the UP is positive.
    NonUsableBoundary,
    /// Within the band around a value-jump locus.
    Band,
    /// Both methods agree the time-to-go exceeds the oracle horizon.
    BeyondHorizon,
}

impl Exclusion {
    pub fn as_str(self) -> &'static str {
        match self {
            Exclusion::Interior => "interior",
            Exclusion::NonUsableBoundary => "non-usable-boundary",
            Exclusion::Band => "band",
            Exclusion::BeyondHorizon => "beyond-horizon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub state: State,
    pub oracle: Option<f64>,
    pub synthesis: Option<f64>,
    pub delta: Option<f64>,
    pub excluded: Option<Exclusion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
    pub max_error: f64,
    pub mean_error: f64,
    pub compared: usize,
}

/// `n x n` grid on `[-extent, extent]^2`, row-major in `x2` then `x1`.
pub fn square_grid(n: usize, extent: f64) -> Vec<State> {
    let n = n.max(2);
    let c = |k: usize| -extent + 2.0 * extent * k as f64 / (n - 1) as f64;
    (0..n).flat_map(|j| (0..n).map(move |i| State::new(c(i), c(j)))).collect()
}

/// Oracle against synthesis on the given states. States within `band` of a
/// locus point are reported but kept out of the summary.
pub fn oracle_grid_report(
    m: &Manifold,
    params: &Params,
    states: &[State],
    cfg: &OracleConfig,
    loci: &[Locus],
    band: f64,
) -> GridReport {
    let mut rows = Vec::with_capacity(states.len());
    let (mut max_error, mut sum, mut compared) = (0.0f64, 0.0, 0usize);
    for s in states {
        let d = m.signed_distance(s);
        if d < -TOUCH_TOL {
            rows.push(GridRow {
                state: *s,
                oracle: None,
                synthesis: None,
                delta: None,
                excluded: Some(Exclusion::Interior),
            });
            continue;
        }
        let oracle_res = oracle_min_time(m, params, s, cfg);
        let beyond = matches!(oracle_res, Err(Error::HorizonExceeded(_)));
        let oracle = oracle_res.ok();
        let synthesis = value(m, params, s).ok();
        let delta = match (oracle, synthesis) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        let excluded = if d.abs() <= TOUCH_TOL
            && m.classify_state(s, params) != crate::RegionClass::Up
            && synthesis != Some(0.0)
        {
            Some(Exclusion::NonUsableBoundary)
        } else if loci.iter().any(|l| l.distance(s) <= band) {
            Some(Exclusion::Band)
        } else if beyond && synthesis.is_some_and(|v| v >= cfg.horizon - cfg.refine_tol) {
            Some(Exclusion::BeyondHorizon)
        } else {
            None
        };
        if excluded.is_none() {
            let e = delta.unwrap_or(f64::INFINITY);
            max_error = max_error.max(e);
            sum += e;
            compared += 1;
        }
        rows.push(GridRow { state: *s, oracle, synthesis, delta, excluded });
    }
    let mean_error = if compared > 0 { sum / compared as f64 } else { 0.0 };
    GridReport { rows, max_error, mean_error, compared }
}
