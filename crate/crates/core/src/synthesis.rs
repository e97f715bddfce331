//! State feedback by inverting the characteristic families.
//!
//! Every optimal trajectory ends on the usable part and is one of a handful of
//! one- or two-arc families anchored there. The value at a state is the
//! smallest retrograde time among the family members passing through it; the
//! control is that member's current arc. Families come in centrally symmetric
//! pairs, so only the upper-half families are solved directly and the others
//! are obtained through `s -> -s`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::characteristics::{characteristic, up_anchors};
use crate::error::{domain, Error, Result};
use crate::manifold::{circle_theta_bar, RegionClass};
use crate::{BoundaryPoint, Control, Corner, Manifold, Params, Side, State};

/// Distance under which a state counts as sitting on its switch point.
pub const SWITCH_TOL: f64 = 1e-9;
/// Offset used to probe for a value jump around a queried state.
pub const JUMP_PROBE: f64 = 1e-9;
/// Value gap across [`JUMP_PROBE`] that marks a jump.
pub const JUMP_MIN: f64 = 1e-6;
const EDGE_TOL: f64 = 1e-12;
const SCAN_POINTS: usize = 512;

/// Characteristic family, named after its anchor set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Circle, `theta` in the upper UP, final arc `u = -1`.
    CircleUpper,
    /// Circle, `theta` in `(pi/2, pi)`, `u = +1` then `u = -1`.
    CircleUpperSwitched,
    CircleLower,
    CircleLowerSwitched,
    AB,
    BC,
    CD,
    AD,
    /// Riding the switching curve into corner `A` with `u = -1`.
    CornerA,
    /// `u = +1` up to the switching curve, then into `A`.
    CornerASwitched,
    CornerC,
    CornerCSwitched,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::CircleUpper => "circle-upper",
            Family::CircleUpperSwitched => "circle-upper-switched",
            Family::CircleLower => "circle-lower",
            Family::CircleLowerSwitched => "circle-lower-switched",
            Family::AB => "AB",
            Family::BC => "BC",
            Family::CD => "CD",
            Family::AD => "AD",
            Family::CornerA => "A",
            Family::CornerASwitched => "A-switched",
            Family::CornerC => "C",
            Family::CornerCSwitched => "C-switched",
        }
    }

    /// Family of the centrally mirrored trajectories.
    pub fn mirror(self) -> Family {
        match self {
            Family::CircleUpper => Family::CircleLower,
            Family::CircleLower => Family::CircleUpper,
            Family::CircleUpperSwitched => Family::CircleLowerSwitched,
            Family::CircleLowerSwitched => Family::CircleUpperSwitched,
            Family::AB => Family::CD,
            Family::CD => Family::AB,
            Family::BC => Family::AD,
            Family::AD => Family::BC,
            Family::CornerA => Family::CornerC,
            Family::CornerC => Family::CornerA,
            Family::CornerASwitched => Family::CornerCSwitched,
            Family::CornerCSwitched => Family::CornerASwitched,
        }
    }

    pub fn is_switched(self) -> bool {
        matches!(
            self,
            Family::CircleUpperSwitched
                | Family::CircleLowerSwitched
                | Family::CornerASwitched
                | Family::CornerCSwitched
        )
    }

    fn is_upper(self) -> bool {
        matches!(
            self,
            Family::CircleUpper
                | Family::CircleUpperSwitched
                | Family::AB
                | Family::AD
                | Family::CornerA
                | Family::CornerASwitched
        )
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One family member through the queried state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub family: Family,
    pub tau: f64,
    pub anchor: BoundaryPoint,
    /// Control on the arc containing the state.
    pub u: Control,
    /// Upcoming switch of a two-arc member.
    pub switch_point: Option<State>,
    /// The state lies on the switching curve itself.
    pub at_switch: bool,
}

impl Candidate {
    fn mirrored(&self) -> Candidate {
        Candidate {
            family: self.family.mirror(),
            tau: self.tau,
            anchor: self.anchor.antipode(),
            u: -self.u,
            switch_point: self.switch_point.map(|p| -p),
            at_switch: self.at_switch,
        }
    }
}

/// Outcome of a feedback query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisResult {
    pub u: Control,
    pub time_to_go: f64,
    pub terminal_point: BoundaryPoint,
    pub switch_state: Option<State>,
    pub discontinuity_flag: bool,
    pub family: Family,
}

/// `C(w)` of the switched upper circle family: the constant `x1 - x2^2/2` of
/// the `u = +1` arc leading to the switch of the anchor with `tan(theta)^2 = w`.
fn switched_circle_constant(l: f64, w: f64) -> f64 {
    let q = (1.0 + w).sqrt();
    -l * q - w - 0.5 * l * l * w / (q * q) - l * w / q
}

fn solve_switched_circle(l: f64, k: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while switched_circle_constant(l, hi) > k {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if switched_circle_constant(l, mid) > k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn circle_upper_closed(l: f64, s: &State, out: &mut Vec<Candidate>) {
    let theta_lo = circle_theta_bar(l, 1.0).unwrap_or(0.0);

    // Single u = -1 arc: x1 + x2^2/2 = l*cos + l^2*sin^2/2.
    let k = s.x1 + 0.5 * s.x2 * s.x2;
    let disc = 1.0 + l * l - 2.0 * k;
    if disc >= -EDGE_TOL {
        let r = disc.max(0.0).sqrt();
        let roots = [(1.0 + r) / l, (1.0 - r) / l];
        let n_roots = if r == 0.0 { 1 } else { 2 };
        for &c in &roots[..n_roots] {
            if c.abs() > 1.0 + EDGE_TOL {
                continue;
            }
            let theta = c.clamp(-1.0, 1.0).acos();
            if theta < theta_lo - EDGE_TOL {
                continue;
            }
            let theta = theta.max(theta_lo);
            let tau = s.x2 - l * theta.sin();
            if tau < -EDGE_TOL {
                continue;
            }
            let tau = tau.max(0.0);
            let mut at_switch = false;
            if theta > FRAC_PI_2 {
                let ts = -theta.tan();
                if tau > ts + EDGE_TOL {
                    continue;
                }
                at_switch = tau > 0.0 && (ts - tau).abs() <= SWITCH_TOL;
            }
            out.push(Candidate {
                family: Family::CircleUpper,
                tau,
                anchor: BoundaryPoint::CircleTheta(theta),
                u: Control::minus(),
                switch_point: None,
                at_switch,
            });
        }
    }

    // u = +1 up to the switch, then the u = -1 arc of an anchor in (pi/2, pi).
    let kp = s.x1 - 0.5 * s.x2 * s.x2;
    if kp <= -l + EDGE_TOL {
        let w = solve_switched_circle(l, kp);
        let sigma = w.sqrt();
        let q = (1.0 + w).sqrt();
        let x2s = l * sigma / q + sigma;
        let x1s = -l * q - 0.5 * w;
        if s.x2 <= x2s + EDGE_TOL {
            let tau = sigma + (x2s - s.x2).max(0.0);
            out.push(Candidate {
                family: Family::CircleUpperSwitched,
                tau,
                anchor: BoundaryPoint::CircleTheta(PI - sigma.atan()),
                u: Control::plus(),
                switch_point: Some(State::new(x1s, x2s)),
                at_switch: (x2s - s.x2).abs() <= SWITCH_TOL,
            });
        }
    }
}

fn square_upper_closed(s: &State, out: &mut Vec<Candidate>) {
    let (x1, x2) = (s.x1, s.x2);

    // AD: (s2 - tau - tau^2/2, 1 + tau), u = -1.
    let s2 = x1 + 0.5 * x2 * x2 - 0.5;
    let tau = x2 - 1.0;
    if tau >= -EDGE_TOL && (-1.0 - EDGE_TOL..=1.0 + EDGE_TOL).contains(&s2) {
        out.push(Candidate {
            family: Family::AD,
            tau: tau.max(0.0),
            anchor: BoundaryPoint::SquareSide { side: Side::AD, s: s2.clamp(-1.0, 1.0) },
            u: Control::minus(),
            switch_point: None,
            at_switch: false,
        });
    }

    // AB: (-1 - s3*tau + tau^2/2, s3 - tau), u = +1.
    let q = x2 * x2 - 2.0 * x1 - 2.0;
    if q >= -EDGE_TOL {
        let s3 = q.max(0.0).sqrt();
        let tau = s3 - x2;
        if s3 <= 1.0 + EDGE_TOL && tau >= -EDGE_TOL {
            out.push(Candidate {
                family: Family::AB,
                tau: tau.max(0.0),
                anchor: BoundaryPoint::SquareSide { side: Side::AB, s: s3.min(1.0) },
                u: Control::plus(),
                switch_point: None,
                at_switch: false,
            });
        }
    }

    // On the switching curve of A, riding it down with u = -1.
    let g = x1 + 0.5 * x2 * x2 + 0.5;
    if g.abs() <= EDGE_TOL && x2 >= 1.0 - EDGE_TOL {
        let tau = (x2 - 1.0).max(0.0);
        out.push(Candidate {
            family: Family::CornerA,
            tau,
            anchor: BoundaryPoint::SquareCorner { corner: Corner::A, theta: PI - tau.atan() },
            u: Control::minus(),
            switch_point: None,
            at_switch: tau > 0.0,
        });
    }

    // u = +1 up to the switching curve of A, then into A.
    let w = 0.5 * x2 * x2 - x1 - 0.5;
    if w >= 1.0 - EDGE_TOL {
        let sigma = (w.max(1.0).sqrt() - 1.0).max(0.0);
        let x2s = 1.0 + sigma;
        let x1s = -1.0 - sigma - 0.5 * sigma * sigma;
        if x2 <= x2s + EDGE_TOL {
            out.push(Candidate {
                family: Family::CornerASwitched,
                tau: sigma + (x2s - x2).max(0.0),
                anchor: BoundaryPoint::SquareCorner { corner: Corner::A, theta: PI - sigma.atan() },
                u: Control::plus(),
                switch_point: Some(State::new(x1s, x2s)),
                at_switch: (x2s - x2).abs() <= SWITCH_TOL,
            });
        }
    }
}

/// A one-parameter set of arcs used by the numeric inversion.
struct ArcFamily {
    family: Family,
    lo: f64,
    hi: f64,
    post: bool,
    anchor: fn(f64) -> BoundaryPoint,
}

fn upper_arc_families(m: &Manifold, params: &Params) -> Vec<ArcFamily> {
    match m {
        Manifold::Circle { l } => {
            let lo = circle_theta_bar(*l, params.alpha()).unwrap_or(0.0);
            vec![
                ArcFamily {
                    family: Family::CircleUpper,
                    lo,
                    hi: PI,
                    post: false,
                    anchor: BoundaryPoint::CircleTheta,
                },
                ArcFamily {
                    family: Family::CircleUpperSwitched,
                    lo: FRAC_PI_2.max(lo),
                    hi: PI,
                    post: true,
                    anchor: BoundaryPoint::CircleTheta,
                },
            ]
        }
        Manifold::Square => vec![
            ArcFamily {
                family: Family::AD,
                lo: -1.0,
                hi: 1.0,
                post: false,
                anchor: |s| BoundaryPoint::SquareSide { side: Side::AD, s },
            },
            ArcFamily {
                family: Family::AB,
                lo: 0.0,
                hi: 1.0,
                post: false,
                anchor: |s| BoundaryPoint::SquareSide { side: Side::AB, s },
            },
            ArcFamily {
                family: Family::CornerASwitched,
                lo: FRAC_PI_2,
                hi: PI,
                post: true,
                anchor: |theta| BoundaryPoint::SquareCorner { corner: Corner::A, theta },
            },
        ],
    }
}

/// Arc of the family member anchored at parameter `p`, if that member exists.
fn family_arc(m: &Manifold, params: &Params, fam: &ArcFamily, p: f64) -> Option<crate::CharacteristicArc> {
    let ch = characteristic(m, &(fam.anchor)(p), params).ok()?;
    if fam.post {
        ch.switch_tau?;
        ch.arcs.last().copied().filter(|a| a.tau_start > 0.0 || ch.arcs.len() == 1)
    } else {
        ch.arcs.first().copied().filter(|a| a.tau_start == 0.0 && ch.switch_tau != Some(0.0))
    }
}

/// Upper-half candidates for any `alpha`: roots of the parabola-constant
/// mismatch over each anchor parameter range, by scan and bisection.
pub fn numeric_upper_candidates(m: &Manifold, params: &Params, s: &State) -> Vec<Candidate> {
    let alpha = params.alpha();
    let mut out = Vec::new();
    for fam in upper_arc_families(m, params) {
        let residual = |p: f64| -> Option<f64> {
            let arc = family_arc(m, params, &fam, p)?;
            let k_state = crate::characteristics::parabola_constant(s, arc.control, alpha);
            Some(arc.parabola_constant() - k_state)
        };
        // Closed ends are used as they are; open ends are pulled inside.
        let inset = 1e-12 * (fam.hi - fam.lo).max(1.0);
        let a = if residual(fam.lo).is_some() { fam.lo } else { fam.lo + inset };
        let b = if residual(fam.hi).is_some() { fam.hi } else { fam.hi - inset };
        let grid: Vec<(f64, Option<f64>)> = (0..=SCAN_POINTS)
            .map(|i| {
                let p = a + (b - a) * i as f64 / SCAN_POINTS as f64;
                (p, residual(p))
            })
            .collect();
        let mut roots = Vec::new();
        for w in grid.windows(2) {
            let ((pa, ra), (pb, rb)) = (w[0], w[1]);
            let (Some(ra), Some(rb)) = (ra, rb) else { continue };
            if ra == 0.0 {
                roots.push(pa);
                continue;
            }
            if ra.signum() == rb.signum() {
                continue;
            }
            let (mut lo, mut hi, mut rlo) = (pa, pb, ra);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                match residual(mid) {
                    Some(r) if r.signum() == rlo.signum() => {
                        lo = mid;
                        rlo = r;
                    }
                    Some(_) => hi = mid,
                    None => break,
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        let scale = 1.0 + s.x1.abs() + s.x2 * s.x2 / alpha;
        for &(pe, re) in [grid[0], grid[SCAN_POINTS]].iter() {
            if re.is_some_and(|r| r.abs() <= EDGE_TOL * scale) && !roots.contains(&pe) {
                roots.push(pe);
            }
        }
        for p in roots {
            let Some(arc) = family_arc(m, params, &fam, p) else { continue };
            let v = -arc.control.value() * alpha;
            let tau = arc.tau_start + (s.x2 - arc.start_state.x2) / v;
            if tau < arc.tau_start - 1e-9 || tau > arc.tau_end + 1e-9 {
                continue;
            }
            let tau = tau.max(arc.tau_start);
            let gap = (arc.start_state.x2 - s.x2).abs();
            let (switch_point, at_switch) = if fam.post {
                (Some(arc.start_state), gap <= SWITCH_TOL)
            } else {
                (None, arc.tau_end.is_finite() && (arc.tau_end - tau).abs() * alpha <= SWITCH_TOL)
            };
            out.push(Candidate {
                family: fam.family,
                tau,
                anchor: arc.origin,
                u: arc.control,
                switch_point,
                at_switch,
            });
        }
    }
    // Riding the corner's switching curve: every cone normal shares this arc.
    if let Manifold::Square = m {
        let k = s.x1 + 0.5 * s.x2 * s.x2 / alpha;
        let ka = -1.0 + 0.5 / alpha;
        if (k - ka).abs() <= EDGE_TOL && s.x2 >= 1.0 - EDGE_TOL {
            let tau = ((s.x2 - 1.0) / alpha).max(0.0);
            out.push(Candidate {
                family: Family::CornerA,
                tau,
                anchor: BoundaryPoint::SquareCorner { corner: Corner::A, theta: PI - tau.atan() },
                u: Control::minus(),
                switch_point: None,
                at_switch: tau > 0.0,
            });
        }
    }
    out
}

fn upper_candidates(m: &Manifold, params: &Params, s: &State) -> Vec<Candidate> {
    if params.is_unit_alpha() {
        let mut out = Vec::with_capacity(4);
        match m {
            Manifold::Circle { l } => circle_upper_closed(*l, s, &mut out),
            Manifold::Square => square_upper_closed(s, &mut out),
        }
        out
    } else {
        numeric_upper_candidates(m, params, s)
    }
}

/// Every family member through `s`, upper families first.
pub fn candidates(m: &Manifold, params: &Params, s: &State) -> Vec<Candidate> {
    let mut out = upper_candidates(m, params, s);
    out.extend(upper_candidates(m, params, &-*s).iter().map(Candidate::mirrored));
    out
}

fn in_upper_half(s: &State) -> bool {
    s.x2 > 0.0 || (s.x2 == 0.0 && s.x1 < 0.0)
}

/// Minimal-time candidate. Ties go to a member already on its switching
/// curve, then to the families of the half-plane containing `s`, so the
/// choice is equivariant under `s -> -s`.
fn select(s: &State, cands: &[Candidate]) -> Option<Candidate> {
    let best = cands.iter().map(|c| c.tau).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let upper = in_upper_half(s);
    let tied = cands.iter().filter(|c| c.tau - best <= EDGE_TOL);
    tied.min_by_key(|c| (!c.at_switch, c.family.is_upper() != upper)).copied()
}

fn check_outside(m: &Manifold, s: &State) -> Result<()> {
    if !s.is_finite() {
        return Err(domain(format!("state must be finite, got ({}, {})", s.x1, s.x2)));
    }
    if m.signed_distance(s) < -EDGE_TOL {
        return Err(Error::AlreadyTerminated(s.x1, s.x2));
    }
    Ok(())
}

/// Zero-time result for a state on the UP.
fn on_usable_part(m: &Manifold, params: &Params, s: &State) -> Option<SynthesisResult> {
    if m.signed_distance(s).abs() > EDGE_TOL || m.classify_state(s, params) != RegionClass::Up {
        return None;
    }
    let b = m.locate(s)?;
    let ch = characteristic(m, &b, params).ok()?;
    let family = family_of(&b, false);
    Some(SynthesisResult {
        u: ch.arcs[0].control,
        time_to_go: 0.0,
        terminal_point: b,
        switch_state: None,
        discontinuity_flag: false,
        family,
    })
}

fn resolve(m: &Manifold, params: &Params, s: &State) -> Result<SynthesisResult> {
    check_outside(m, s)?;
    if let Some(r) = on_usable_part(m, params, s) {
        return Ok(r);
    }
    let cands = candidates(m, params, s);
    let c = select(s, &cands).ok_or(Error::NoFamily(s.x1, s.x2))?;
    let (u, switch_state) = match (c.at_switch, c.switch_point) {
        // Already on the switching curve: take the post-switch arc.
        (true, Some(_)) => (-c.u, Some(*s)),
        (true, None) => (c.u, Some(*s)),
        (false, sp) => (c.u, sp),
    };
    Ok(SynthesisResult {
        u,
        time_to_go: c.tau,
        terminal_point: c.anchor,
        switch_state,
        discontinuity_flag: false,
        family: c.family,
    })
}

/// Optimal control, time-to-go and terminal point at `s`.
///
/// States on a value-jump locus get the lower envelope and a raised
/// `discontinuity_flag`.
pub fn feedback(m: &Manifold, params: &Params, s: &State) -> Result<SynthesisResult> {
    let mut r = resolve(m, params, s)?;
    r.discontinuity_flag = near_jump(m, params, s, JUMP_PROBE, JUMP_MIN);
    Ok(r)
}

/// Feedback without the jump probe; used inside closed-loop rollouts.
pub fn feedback_fast(m: &Manifold, params: &Params, s: &State) -> Result<SynthesisResult> {
    resolve(m, params, s)
}

/// Minimum time-to-go from `s` to the UP.
pub fn value(m: &Manifold, params: &Params, s: &State) -> Result<f64> {
    resolve(m, params, s).map(|r| r.time_to_go)
}

/// True when the value differs by more than `gap` between `s` and one of its
/// four axis neighbours at distance `radius`.
pub fn near_jump(m: &Manifold, params: &Params, s: &State, radius: f64, gap: f64) -> bool {
    let Ok(v0) = value(m, params, s) else { return false };
    let offsets = [(radius, 0.0), (-radius, 0.0), (0.0, radius), (0.0, -radius)];
    offsets.iter().any(|&(d1, d2)| {
        value(m, params, &State::new(s.x1 + d1, s.x2 + d2)).is_ok_and(|v| (v - v0).abs() > gap)
    })
}

/// Classical minimum-time law for the point target at the origin (`alpha = 1`).
pub fn point_target_reference(s: &State) -> Result<Control> {
    if s.x1 == 0.0 && s.x2 == 0.0 {
        return Err(Error::AlreadyTerminated(0.0, 0.0));
    }
    let curve = -0.5 * s.x2 * s.x2.abs();
    Ok(if s.x1 > curve || (s.x1 == curve && s.x2 > 0.0) { Control::minus() } else { Control::plus() })
}

/// Which switching line: (c)/(d) on the circle, through `A`/`C` on the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Circle, anchored at `(-l, 0)`.
    Upper,
    /// Circle, anchored at `(l, 0)`.
    Lower,
    A,
    C,
}

impl Branch {
    pub fn id(self) -> &'static str {
        match self {
            Branch::Upper => "c",
            Branch::Lower => "d",
            Branch::A => "A",
            Branch::C => "C",
        }
    }
}

/// Locus of control switches anchored at a BUP point or a corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingCurve {
    pub branch: Branch,
    pub anchor: State,
    /// Angle range for the circle, `x2` range for the square (open at infinity).
    pub param_range: (f64, f64),
    l: f64,
    alpha: f64,
}

impl SwitchingCurve {
    /// Curve point: the switch state of the anchor with normal angle `theta`
    /// (circle) or the point at height `x2` (square).
    pub fn point(&self, p: f64) -> Result<State> {
        let (lo, hi) = self.param_range;
        let inside = match self.branch {
            Branch::Upper | Branch::Lower => p > lo && p <= hi,
            Branch::A | Branch::C => p >= lo && p <= hi,
        };
        if !inside || !p.is_finite() {
            return Err(domain(format!(
                "parameter {p} outside the range [{lo}, {hi}] of switching curve {}",
                self.branch.id()
            )));
        }
        let (l, alpha) = (self.l, self.alpha);
        Ok(match self.branch {
            Branch::Upper => circle_switch_point(l, alpha, p),
            Branch::Lower => -circle_switch_point(l, alpha, p - PI),
            Branch::A => State::new(-1.0 - (p * p - 1.0) / (2.0 * alpha), p),
            Branch::C => State::new(1.0 + (p * p - 1.0) / (2.0 * alpha), p),
        })
    }

    /// The curve as a graph: `x2(x1)` for the circle lines, `x1(x2)` for the
    /// square ones. Circle graphs are only available for `alpha = 1`.
    pub fn explicit(&self, x: f64) -> Option<f64> {
        let l = self.l;
        let upper = |x1: f64| -> Option<f64> {
            if x1 > -l {
                return None;
            }
            let r = (l * l + 1.0 - 2.0 * x1).sqrt();
            let inner = l * l - x1 - l * r;
            Some(2f64.sqrt() * r / (r - l) * inner.max(0.0).sqrt())
        };
        match self.branch {
            Branch::Upper if self.alpha == 1.0 => upper(x),
            Branch::Lower if self.alpha == 1.0 => upper(-x).map(|v| -v),
            Branch::A if x >= 1.0 => Some(-1.0 - (x * x - 1.0) / (2.0 * self.alpha)),
            Branch::C if x <= -1.0 => Some(1.0 + (x * x - 1.0) / (2.0 * self.alpha)),
            _ => None,
        }
    }

    /// `n + 1` points from the anchor outwards until `|x2|` reaches `extent`.
    pub fn sample(&self, n: usize, extent: f64) -> Vec<State> {
        let n = n.max(1);
        (0..=n)
            .map(|k| {
                let f = k as f64 / n as f64;
                match self.branch {
                    Branch::Upper | Branch::Lower => {
                        // Uniform in tan(theta) so the far end is not starved.
                        let sigma = extent * f;
                        let theta = PI - sigma.atan();
                        let p = circle_switch_point(self.l, self.alpha, theta);
                        if self.branch == Branch::Upper {
                            p
                        } else {
                            -p
                        }
                    }
                    Branch::A => {
                        let x2 = 1.0 + (extent - 1.0).max(0.0) * f;
                        State::new(-1.0 - (x2 * x2 - 1.0) / (2.0 * self.alpha), x2)
                    }
                    Branch::C => {
                        let x2 = -1.0 - (extent - 1.0).max(0.0) * f;
                        State::new(1.0 + (x2 * x2 - 1.0) / (2.0 * self.alpha), x2)
                    }
                }
            })
            .collect()
    }
}

/// Switch state of the upper circle anchor `theta` in `(pi/2, pi]`.
fn circle_switch_point(l: f64, alpha: f64, theta: f64) -> State {
    let (s, c) = theta.sin_cos();
    let sigma = if theta >= PI { 0.0 } else { -s / c };
    State::new(l * c - l * s * sigma - 0.5 * alpha * sigma * sigma, l * s + alpha * sigma)
}

/// Circle switching line (c) (`Upper`) or (d) (`Lower`).
pub fn switching_curve_circle(params: &Params, branch: Branch) -> Result<SwitchingCurve> {
    let l = params.l();
    let (anchor, param_range) = match branch {
        Branch::Upper => (State::new(-l, 0.0), (FRAC_PI_2, PI)),
        Branch::Lower => (State::new(l, 0.0), (3.0 * FRAC_PI_2, 2.0 * PI)),
        _ => return Err(domain("circle switching lines are Upper (c) or Lower (d)")),
    };
    Ok(SwitchingCurve { branch, anchor, param_range, l, alpha: params.alpha() })
}

/// Square switching curve through corner `A` or `C`.
pub fn switching_curve_square(params: &Params, branch: Branch) -> Result<SwitchingCurve> {
    let (anchor, param_range) = match branch {
        Branch::A => (State::new(-1.0, 1.0), (1.0, f64::INFINITY)),
        Branch::C => (State::new(1.0, -1.0), (f64::NEG_INFINITY, -1.0)),
        _ => return Err(domain("square switching curves are A or C")),
    };
    Ok(SwitchingCurve { branch, anchor, param_range, l: 1.0, alpha: params.alpha() })
}

pub fn switching_curves(m: &Manifold, params: &Params) -> Vec<SwitchingCurve> {
    let out = match m {
        Manifold::Circle { l } => {
            let p = Params::new(params.alpha(), *l).expect("valid circle radius");
            [switching_curve_circle(&p, Branch::Upper), switching_curve_circle(&p, Branch::Lower)]
        }
        Manifold::Square => {
            [switching_curve_square(params, Branch::A), switching_curve_square(params, Branch::C)]
        }
    };
    out.into_iter().map(|c| c.expect("fixed branch")).collect()
}

/// Named list of phase-plane points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub id: String,
    pub points: Vec<State>,
}

/// Trajectories that graze a non-usable point and terminate later on the UP.
///
/// Square: the `u = +1` parabola through `B` ending in `A` and its mirror
/// through `D`. Circle with `l > alpha`: the `u = -1` parabola tangent at
/// `theta_bar`, continued to switching line (d) and then into the UP, and its
/// mirror. Sampled with `n` points per piece up to `|x2| = extent`.
pub fn touch_and_go_curves(m: &Manifold, params: &Params, n: usize, extent: f64) -> Vec<Polyline> {
    let alpha = params.alpha();
    let n = n.max(2);
    let upper = match m {
        Manifold::Square => {
            // x1 - x2^2/(2 alpha) = -1 - 1/(2 alpha), from x2 = -extent up to A.
            // B is kept as an exact vertex between the two halves.
            let k = -1.0 - 0.5 / alpha;
            let lo = -extent.max(1.0);
            let at = |x2: f64| State::new(k + x2 * x2 / (2.0 * alpha), x2);
            let mut pts: Vec<State> = (0..n).map(|i| at(lo + (-1.0 - lo) * i as f64 / n as f64)).collect();
            pts.push(State::new(-1.0, -1.0));
            pts.extend((1..=n).map(|i| at(-1.0 + 2.0 * i as f64 / n as f64)));
            Polyline { id: "B".into(), points: pts }
        }
        Manifold::Circle { l } => {
            let Some(tb) = circle_theta_bar(*l, alpha) else { return Vec::new() };
            let touch = State::new(l * tb.cos(), l * tb.sin());
            let k = touch.x1 + touch.x2 * touch.x2 / (2.0 * alpha);
            let on_parabola = |x2: f64| State::new(k - x2 * x2 / (2.0 * alpha), x2);
            let mut pts: Vec<State> = (0..=n)
                .map(|i| {
                    let x2 = extent.max(touch.x2) + (touch.x2 - extent.max(touch.x2)) * i as f64 / n as f64;
                    on_parabola(x2)
                })
                .collect();
            // Continue past the touch point to switching line (d).
            let pl = Params::new(alpha, *l).expect("valid radius");
            let d = switching_curve_circle(&pl, Branch::Lower).expect("lower branch");
            let resid = |theta: f64| {
                let p = d.point(theta).expect("in range");
                p.x1 + p.x2 * p.x2 / (2.0 * alpha) - k
            };
            let (a, b) = (1.5 * PI + 1e-9, 2.0 * PI);
            let mut hit = None;
            let steps = 4096;
            // Scan from the anchor end, where the line has the largest x2.
            for i in 0..steps {
                let t1 = b - (b - a) * i as f64 / steps as f64;
                let t0 = b - (b - a) * (i + 1) as f64 / steps as f64;
                let (r1, r0) = (resid(t1), resid(t0));
                if r1 == 0.0 || r1.signum() != r0.signum() {
                    let (mut lo, mut hi) = (t0, t1);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if resid(mid).signum() == r0.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    hit = Some(0.5 * (lo + hi));
                    break;
                }
            }
            let end_x2 = match hit {
                Some(theta) => d.point(theta).expect("in range").x2,
                None => -touch.x2,
            };
            pts.extend((1..=n).map(|i| on_parabola(touch.x2 + (end_x2 - touch.x2) * i as f64 / n as f64)));
            if let Some(theta) = hit {
                // u = +1 arc of the anchor whose line was reached, down to the circle.
                let anchor = theta;
                let sw = d.point(anchor).expect("in range");
                let end = State::new(l * anchor.cos(), l * anchor.sin());
                pts.extend((1..=n).map(|i| {
                    let x2 = sw.x2 + (end.x2 - sw.x2) * i as f64 / n as f64;
                    State::new(end.x1 + (x2 * x2 - end.x2 * end.x2) / (2.0 * alpha), x2)
                }));
            }
            Polyline { id: "touch-upper".into(), points: pts }
        }
    };
    let lower_id = match m {
        Manifold::Square => "D",
        Manifold::Circle { .. } => "touch-lower",
    };
    let lower = Polyline { id: lower_id.into(), points: upper.points.iter().map(|p| -*p).collect() };
    vec![upper, lower]
}

/// Scan settings for [`discontinuity_loci`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LociOptions {
    /// Half-width of the square window `[-extent, extent]^2`.
    pub extent: f64,
    /// Spacing of scan lines and of samples along them.
    pub step: f64,
    /// Final bracket width of the jump bisection.
    pub tol: f64,
    /// Noise floor for the value change across the final bracket.
    pub min_jump: f64,
}

impl Default for LociOptions {
    fn default() -> Self {
        Self { extent: 5.0, step: 0.025, tol: 1e-10, min_jump: 1e-9 }
    }
}

/// Point on a value-jump locus with the families on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocusPoint {
    pub state: State,
    /// `V(high side) - V(low side)` across the final bisection bracket.
    pub jump: f64,
    pub low_family: Family,
    pub high_family: Family,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Locus {
    /// `'a'` or `'b'`; `b` is the central image of `a`.
    pub id: char,
    pub points: Vec<LocusPoint>,
}

impl Locus {
    pub fn polyline(&self) -> Polyline {
        Polyline { id: self.id.to_string(), points: self.points.iter().map(|p| p.state).collect() }
    }

    /// Distance to the nearest sampled point.
    pub fn distance(&self, s: &State) -> f64 {
        self.points.iter().map(|p| p.state.dist(s)).fold(f64::INFINITY, f64::min)
    }
}

/// Curves (a) and (b) where the value is not continuous (or, at `l = alpha`,
/// where it keeps its value but loses Lipschitz continuity).
///
/// Horizontal and vertical lines are scanned. A step is bisected when the
/// value changes by more than ten times the local Lipschitz estimate, or when
/// the minimizing family changes across it. The bisection keeps the half with
/// the larger value change down to `tol`, and the point is kept if the change
/// across the final bracket still exceeds ten times the Lipschitz estimate
/// times the bracket width.
pub fn discontinuity_loci(m: &Manifold, params: &Params, opts: &LociOptions) -> Vec<Locus> {
    let n = (2.0 * opts.extent / opts.step).round().max(1.0) as usize;
    let coord = |k: usize| -opts.extent + opts.step * k as f64;
    let eval = |s: &State| resolve(m, params, s).ok().map(|r| (r.time_to_go, r.family));
    let mut found: Vec<LocusPoint> = Vec::new();

    for axis in 0..2 {
        for row in 0..=n {
            let at = |k: usize| {
                if axis == 0 {
                    State::new(coord(k), coord(row))
                } else {
                    State::new(coord(row), coord(k))
                }
            };
            let vals: Vec<Option<(f64, Family)>> = (0..=n).map(|k| eval(&at(k))).collect();
            let v = |k: usize| vals[k].map(|x| x.0);
            for j in 0..n {
                let (Some((va, fa)), Some((vb, fb))) = (vals[j], vals[j + 1]) else { continue };
                let dv = (vb - va).abs();
                let mut slope: f64 = 1.0;
                if j > 0 {
                    if let Some(vp) = v(j - 1) {
                        slope = slope.max((va - vp).abs() / opts.step);
                    }
                }
                if j + 2 <= n {
                    if let Some(vn) = v(j + 2) {
                        slope = slope.max((vn - vb).abs() / opts.step);
                    }
                }
                if dv <= 10.0 * slope * opts.step && fa == fb {
                    continue;
                }
                if let Some(p) = bisect_jump(m, params, at(j), at(j + 1), va, vb, slope, opts) {
                    found.push(p);
                }
            }
        }
    }

    // Orientation of the jump: the `a` locus has its high side towards +x1.
    let mut a_points: Vec<LocusPoint> =
        found.into_iter().filter(|p| jump_normal_is_a(m, params, &p.state)).collect();
    a_points.sort_by(|p, q| (p.state.x2, p.state.x1).partial_cmp(&(q.state.x2, q.state.x1)).expect("finite"));
    a_points.dedup_by(|p, q| p.state.dist(&q.state) < 1e-6);
    let b_points = a_points
        .iter()
        .map(|p| LocusPoint {
            state: -p.state,
            jump: p.jump,
            low_family: p.low_family.mirror(),
            high_family: p.high_family.mirror(),
        })
        .collect();
    vec![Locus { id: 'a', points: a_points }, Locus { id: 'b', points: b_points }]
}

#[allow(clippy::too_many_arguments)]
fn bisect_jump(
    m: &Manifold,
    params: &Params,
    mut a: State,
    mut b: State,
    mut va: f64,
    mut vb: f64,
    slope: f64,
    opts: &LociOptions,
) -> Option<LocusPoint> {
    while a.dist(&b) > opts.tol {
        let mid = (a + b) * 0.5;
        if mid == a || mid == b {
            break;
        }
        let vm = value(m, params, &mid).ok()?;
        if (vm - va).abs() >= (vb - vm).abs() {
            b = mid;
            vb = vm;
        } else {
            a = mid;
            va = vm;
        }
    }
    let jump = (vb - va).abs();
    if jump < opts.min_jump || jump <= 10.0 * slope * a.dist(&b) {
        return None;
    }
    let fa = resolve(m, params, &a).ok()?.family;
    let fb = resolve(m, params, &b).ok()?.family;
    let (low_family, high_family) = if va <= vb { (fa, fb) } else { (fb, fa) };
    Some(LocusPoint { state: (a + b) * 0.5, jump, low_family, high_family })
}

/// Sign convention separating (a) from (b): the value rises towards +x1, or
/// for a locus parallel to the x1 axis, towards -x2.
fn jump_normal_is_a(m: &Manifold, params: &Params, s: &State) -> bool {
    let h = 1e-7;
    let probe = |d1: f64, d2: f64| value(m, params, &State::new(s.x1 + d1, s.x2 + d2)).ok();
    if let (Some(r), Some(l)) = (probe(h, 0.0), probe(-h, 0.0)) {
        if (r - l).abs() > JUMP_MIN {
            return r > l;
        }
    }
    match (probe(0.0, h), probe(0.0, -h)) {
        (Some(u), Some(d)) => d > u,
        _ => false,
    }
}

/// Dense anchors of the UP, for callers that sweep whole characteristic fans.
pub fn fan_anchors(m: &Manifold, params: &Params, per_interval: usize) -> Vec<BoundaryPoint> {
    up_anchors(m, params, per_interval)
}

/// Family of the characteristic from `anchor`, before or after its switch.
pub fn family_of(anchor: &BoundaryPoint, switched: bool) -> Family {
    let f = match *anchor {
        BoundaryPoint::CircleTheta(t) if t < PI => Family::CircleUpper,
        BoundaryPoint::CircleTheta(_) => Family::CircleLower,
        BoundaryPoint::SquareSide { side: Side::AB, .. } => Family::AB,
        BoundaryPoint::SquareSide { side: Side::BC, .. } => Family::BC,
        BoundaryPoint::SquareSide { side: Side::CD, .. } => Family::CD,
        BoundaryPoint::SquareSide { side: Side::AD, .. } => Family::AD,
        BoundaryPoint::SquareCorner { corner: Corner::A, .. } => Family::CornerA,
        BoundaryPoint::SquareCorner { corner: Corner::C, .. } => Family::CornerC,
    };
    match (f, switched) {
        (Family::CircleUpper, true) => Family::CircleUpperSwitched,
        (Family::CircleLower, true) => Family::CircleLowerSwitched,
        (Family::CornerA, true) => Family::CornerASwitched,
        (Family::CornerC, true) => Family::CornerCSwitched,
        (f, _) => f,
    }
}
