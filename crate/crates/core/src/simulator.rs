//! Closed-loop rollouts of the synthesized feedback.

use crate::error::{domain, Error, Result};
use crate::model::dynamics;
use crate::synthesis::{feedback_fast, near_jump, value};
use crate::{BoundaryPoint, Control, Manifold, Params, State};

/// Accuracy of the located target crossing, in signed distance.
pub const EVENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: State,
    /// Control applied from this sample to the next.
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedUp { point: BoundaryPoint, t_f: f64 },
    MaxTimeExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub termination: Termination,
    pub dt: f64,
}

impl Trajectory {
    /// Number of control sign changes between consecutive samples.
    pub fn switch_count(&self) -> usize {
        self.samples.windows(2).filter(|w| w[0].u != w[1].u).count()
    }

    pub fn final_time(&self) -> Option<f64> {
        match self.termination {
            Termination::ReachedUp { t_f, .. } => Some(t_f),
            Termination::MaxTimeExceeded => None,
        }
    }
}

fn rk4(s: &State, u: Control, params: &Params, h: f64) -> State {
    let f = |x: &State| {
        let d = dynamics(x, u, params);
        State::new(d.dx1, d.dx2)
    };
    let k1 = f(s);
    let k2 = f(&(*s + k1 * (0.5 * h)));
    let k3 = f(&(*s + k2 * (0.5 * h)));
    let k4 = f(&(*s + k3 * h));
    *s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Policy output: control now and, optionally, the state at which it switches.
pub type PolicyStep = (Control, Option<State>);

/// Rolls out the synthesized feedback from `s0`.
pub fn simulate(m: &Manifold, params: &Params, s0: &State, dt: f64, t_max: f64) -> Result<Trajectory> {
    simulate_with(m, params, s0, dt, t_max, |s| {
        let r = feedback_fast(m, params, s)?;
        Ok((r.u, r.switch_state))
    })
}

/// Rolls out an arbitrary state-feedback policy. Steps are shortened so that
/// they end exactly on the announced switch state and on the target.
pub fn simulate_with<F>(
    m: &Manifold,
    params: &Params,
    s0: &State,
    dt: f64,
    t_max: f64,
    mut policy: F,
) -> Result<Trajectory>
where
    F: FnMut(&State) -> Result<PolicyStep>,
{
    if !(dt > 0.0 && t_max > 0.0) {
        return Err(domain(format!("dt and t_max must be positive, got {dt} and {t_max}")));
    }
    let d0 = m.signed_distance(s0);
    if d0 < -EVENT_TOL {
        return Err(Error::AlreadyTerminated(s0.x1, s0.x2));
    }
    if d0.abs() <= EVENT_TOL && m.classify_state(s0, params) == crate::RegionClass::Up {
        let point = m.locate(s0).ok_or_else(|| domain("state on the manifold has no anchor"))?;
        let (u, _) = policy(s0).unwrap_or((Control::plus(), None));
        return Ok(Trajectory {
            samples: vec![TrajectorySample { t: 0.0, state: *s0, u: u.value() }],
            termination: Termination::ReachedUp { point, t_f: 0.0 },
            dt,
        });
    }

    let mut samples = Vec::with_capacity((t_max / dt).min(1e6) as usize + 2);
    let mut s = *s0;
    let mut t = 0.0;
    loop {
        let (u, sw) = policy(&s)?;
        samples.push(TrajectorySample { t, state: s, u: u.value() });
        if t >= t_max {
            return Ok(Trajectory { samples, termination: Termination::MaxTimeExceeded, dt });
        }
        let mut h = dt.min(t_max - t);
        if let Some(sw) = sw {
            // x2 is monotone on a constant-control arc; bisect the switch time.
            let gap = |tau: f64| rk4(&s, u, params, tau).x2 - sw.x2;
            let g0 = gap(0.0);
            if g0 != 0.0 && gap(h).signum() != g0.signum() {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if gap(mid).signum() == g0.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                h = hi;
            }
        }
        let next = rk4(&s, u, params, h);
        if m.signed_distance(&next) <= EVENT_TOL {
            let (mut lo, mut hi) = (0.0, h);
            let mut end = next;
            for _ in 0..200 {
                if m.signed_distance(&end).abs() <= EVENT_TOL {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let sm = rk4(&s, u, params, mid);
                if m.signed_distance(&sm) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                    end = sm;
                }
                if hi - lo <= f64::EPSILON * hi.max(1.0) {
                    break;
                }
            }
            let t_f = t + hi;
            samples.push(TrajectorySample { t: t_f, state: end, u: u.value() });
            let point = m.locate(&end).ok_or_else(|| domain("terminal state has no anchor"))?;
            return Ok(Trajectory { samples, termination: Termination::ReachedUp { point, t_f }, dt });
        }
        s = next;
        t += h;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutReport {
    pub reached: bool,
    /// Largest `|value(sample) - (t_f - t)|` over the checked samples.
    pub max_deviation: f64,
    pub checked: usize,
    pub threshold: f64,
    pub violation: bool,
}

/// Checks that the value falls at unit rate along the rollout. Samples near a
/// value jump (within `5 dt`) are skipped. A rollout that never reached the UP
/// is a violation.
pub fn verify_rollout(traj: &Trajectory, m: &Manifold, params: &Params) -> RolloutReport {
    let threshold = 5.0 * traj.dt;
    let Termination::ReachedUp { t_f, .. } = traj.termination else {
        return RolloutReport {
            reached: false,
            max_deviation: f64::INFINITY,
            checked: 0,
            threshold,
            violation: true,
        };
    };
    let mut max_deviation: f64 = 0.0;
    let mut checked = 0;
    for smp in &traj.samples {
        if near_jump(m, params, &smp.state, threshold, threshold) {
            continue;
        }
        let Ok(v) = value(m, params, &smp.state) else { continue };
        max_deviation = max_deviation.max((v - (t_f - smp.t)).abs());
        checked += 1;
    }
    RolloutReport { reached: true, max_deviation, checked, threshold, violation: max_deviation > threshold }
}
