//! Terminal costates and retrograde propagation of optimal trajectories from
//! the usable part.
//!
//! Retrograde time `tau` runs backward from termination. Along a
//! characteristic the retrograde system is
//!
//! ```text
//! x1' = -x2,   x2' = alpha * sign(lambda2),   lambda1' = 0,   lambda2' = lambda1
//! ```
//!
//! for both targets. The physical (forward-time) control is
//! `u = -sign(lambda2)`, so every arc is a parabola `x1 - u*x2^2/(2*alpha) = const`.
//! `lambda2` is affine in `tau`, giving at most one switch, at `tau = -tan(theta)`
//! for anchors whose normal angle `theta` has `sin(theta)*cos(theta) < 0`.

use crate::error::{domain, Error, Result};
use crate::manifold::{BoundaryPoint, Corner, Manifold, RegionClass, Side};
use crate::model::{Control, Params, State};
use crate::scalar::Scalar;

/// Adjoint vector; the gradient of the time-to-go with respect to the state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Costate<T> {
    pub lambda1: T,
    pub lambda2: T,
}

impl<T: Scalar> Costate<T> {
    pub fn new(lambda1: T, lambda2: T) -> Self {
        Self { lambda1, lambda2 }
    }
}

/// `1 + lambda1*x2 + lambda2*alpha*u`.
pub fn hamiltonian<T: Scalar>(s: &State<T>, c: &Costate<T>, u: Control<T>, params: &Params<T>) -> T {
    T::one() + c.lambda1 * s.x2 + c.lambda2 * params.alpha() * u.value()
}

/// Hamiltonian minimized over the control: `1 + lambda1*x2 - alpha*|lambda2|`.
pub fn optimal_hamiltonian<T: Scalar>(s: &State<T>, c: &Costate<T>, params: &Params<T>) -> T {
    T::one() + c.lambda1 * s.x2 - params.alpha() * c.lambda2.abs()
}

/// `u* = -sign(lambda2)`. A zero `lambda2` is a switching instant and is
/// reported as [`Error::SingularInstant`]; callers take the control of the
/// adjacent arc.
pub fn optimal_control<T: Scalar>(c: &Costate<T>) -> Result<Control<T>> {
    if c.lambda2 > T::zero() {
        Ok(Control::minus())
    } else if c.lambda2 < T::zero() {
        Ok(Control::plus())
    } else {
        Err(Error::SingularInstant)
    }
}

/// Costate at termination, `a * n` with `a > 0` fixed by `H* = 0`.
///
/// Circle anchors must lie in the open UP. Square sides use the side normal,
/// corner cones the cone normal; the closed cone intervals are accepted.
pub fn terminal_costate<T: Scalar>(
    m: &Manifold<T>,
    b: &BoundaryPoint<T>,
    params: &Params<T>,
) -> Result<Costate<T>> {
    let alpha = params.alpha();
    let s = m.boundary_state(b)?;
    let n = m.outward_normal(b)?;
    if let BoundaryPoint::CircleTheta(_) = b {
        if m.classify(b, params)? != RegionClass::Up {
            return Err(Error::NoCharacteristic(b.to_string()));
        }
    }
    // H*(tau = 0) = 1 + a*(n1*x2 - alpha*|n2|) = 0.
    let rate = n.min_rate(&s, alpha);
    if !(rate < T::zero()) {
        return Err(Error::NoCharacteristic(b.to_string()));
    }
    let a = -T::one() / rate;
    if !(a.is_finite() && a > T::zero()) {
        return Err(Error::NoCharacteristic(b.to_string()));
    }
    Ok(Costate::new(a * n.n1, a * n.n2))
}

/// Retrograde time of the control switch, if the anchor has one.
///
/// Circle angles in `(pi/2, pi)` and `(3pi/2, 2pi)` and corner cones switch at
/// `-tan(theta)`; a cone edge with a vertical normal never switches, the
/// horizontal edge switches immediately (`tau = 0`). Square sides never switch.
pub fn switch_tau<T: Scalar>(b: &BoundaryPoint<T>) -> Option<T> {
    let theta = match *b {
        BoundaryPoint::SquareSide { .. } => return None,
        BoundaryPoint::CircleTheta(theta) => theta,
        BoundaryPoint::SquareCorner { theta, .. } => theta,
    };
    let (s, c) = theta.sin_cos();
    // lambda2(tau) is proportional to sin + tau*cos; the root is positive when
    // sin and cos have opposite signs.
    let half = T::FRAC_PI_2();
    let pi = T::PI();
    let on_axis_vertical = (theta - half).abs() <= T::epsilon() * T::lit(8.0)
        || (theta - (pi + half)).abs() <= T::epsilon() * T::lit(8.0);
    if on_axis_vertical {
        return None;
    }
    if let BoundaryPoint::SquareCorner { corner, .. } = *b {
        let edge = match corner {
            Corner::A => pi,
            Corner::C => T::two_pi(),
        };
        if (theta - edge).abs() <= T::epsilon() * T::lit(8.0) {
            return Some(T::zero());
        }
    }
    if s * c < T::zero() {
        Some(-s / c)
    } else {
        None
    }
}

/// Costate at retrograde time `tau`: `lambda1` constant, `lambda2` affine.
pub fn costate_retro<T: Scalar>(
    m: &Manifold<T>,
    b: &BoundaryPoint<T>,
    params: &Params<T>,
    tau: T,
) -> Result<Costate<T>> {
    if !(tau >= T::zero()) {
        return Err(domain(format!("retrograde time must be non-negative, got {tau}")));
    }
    let c0 = terminal_costate(m, b, params)?;
    Ok(Costate::new(c0.lambda1, c0.lambda2 + c0.lambda1 * tau))
}

/// Constant-control piece of a characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicArc<T> {
    pub origin: BoundaryPoint<T>,
    /// Forward-time control on the arc.
    pub control: Control<T>,
    pub tau_start: T,
    /// `+inf` for the final (unbounded) arc.
    pub tau_end: T,
    pub start_state: State<T>,
    alpha: T,
}

impl<T: Scalar> CharacteristicArc<T> {
    /// Constant-acceleration kinematics along the arc, any `alpha`.
    pub fn state_at(&self, tau: T) -> State<T> {
        let d = tau - self.tau_start;
        let v = -self.control.value() * self.alpha;
        let s0 = self.start_state;
        State::new(s0.x1 - s0.x2 * d - T::lit(0.5) * v * d * d, s0.x2 + v * d)
    }

    /// Conserved quantity `x1 - u*x2^2/(2*alpha)` of the arc's parabola.
    pub fn parabola_constant(&self) -> T {
        parabola_constant(&self.start_state, self.control, self.alpha)
    }

    pub fn contains_tau(&self, tau: T) -> bool {
        tau >= self.tau_start && tau <= self.tau_end
    }
}

/// `x1 - u*x2^2/(2*alpha)`, constant along any arc with forward control `u`.
pub fn parabola_constant<T: Scalar>(s: &State<T>, u: Control<T>, alpha: T) -> T {
    s.x1 - u.value() * s.x2 * s.x2 / (T::lit(2.0) * alpha)
}

/// A full characteristic: one or two arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic<T> {
    pub arcs: Vec<CharacteristicArc<T>>,
    pub switch_tau: Option<T>,
    pub terminal_costate: Costate<T>,
}

impl<T: Scalar> Characteristic<T> {
    pub fn arc_at(&self, tau: T) -> &CharacteristicArc<T> {
        self.arcs
            .iter()
            .find(|a| tau <= a.tau_end)
            .unwrap_or_else(|| self.arcs.last().expect("at least one arc"))
    }

    pub fn state_at(&self, tau: T) -> State<T> {
        self.arc_at(tau).state_at(tau)
    }
}

/// Sign of `lambda2` strictly inside `[ta, tb]`.
fn interior_sign<T: Scalar>(c0: &Costate<T>, ta: T, tb: T) -> T {
    let mid = if tb.is_finite() { T::lit(0.5) * (ta + tb) } else { ta + T::one() };
    let v = c0.lambda2 + c0.lambda1 * mid;
    if v != T::zero() {
        v.sign0()
    } else {
        c0.lambda1.sign0()
    }
}

/// Builds the arcs of the characteristic anchored at `b`.
pub fn characteristic<T: Scalar>(
    m: &Manifold<T>,
    b: &BoundaryPoint<T>,
    params: &Params<T>,
) -> Result<Characteristic<T>> {
    let c0 = terminal_costate(m, b, params)?;
    let start = m.boundary_state(b)?;
    let alpha = params.alpha();
    let sw = switch_tau(b);
    let mut arcs = Vec::with_capacity(2);
    let first_end = sw.unwrap_or_else(T::infinity);
    if first_end > T::zero() {
        let sigma = interior_sign(&c0, T::zero(), first_end);
        arcs.push(CharacteristicArc {
            origin: *b,
            control: Control::bang(-sigma),
            tau_start: T::zero(),
            tau_end: first_end,
            start_state: start,
            alpha,
        });
    }
    if let Some(ts) = sw {
        let sigma = interior_sign(&c0, ts, T::infinity());
        let start_state = arcs.last().map(|a| a.state_at(ts)).unwrap_or(start);
        arcs.push(CharacteristicArc {
            origin: *b,
            control: Control::bang(-sigma),
            tau_start: ts,
            tau_end: T::infinity(),
            start_state,
            alpha,
        });
    }
    Ok(Characteristic { arcs, switch_tau: sw, terminal_costate: c0 })
}

/// Phase-plane point at retrograde time `tau`, from the explicit per-family
/// formulas (valid for `alpha = 1` only).
pub fn closed_form_state<T: Scalar>(
    m: &Manifold<T>,
    b: &BoundaryPoint<T>,
    params: &Params<T>,
    tau: T,
) -> Result<State<T>> {
    if !params.is_unit_alpha() {
        return Err(Error::ClosedFormUnavailable(params.alpha().to_f64().unwrap_or(f64::NAN)));
    }
    if !(tau >= T::zero()) {
        return Err(domain(format!("retrograde time must be non-negative, got {tau}")));
    }
    // Validates the anchor (UP membership, kinds).
    terminal_costate(m, b, params)?;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let one = T::one();
    let pi = T::PI();
    let sw = switch_tau(b);
    let before_switch = sw.is_none_or(|ts| tau <= ts);
    Ok(match (m, *b) {
        (Manifold::Circle { l }, BoundaryPoint::CircleTheta(theta)) => {
            let l = *l;
            let (s, c) = theta.sin_cos();
            let t = s / c;
            if theta < pi {
                if before_switch {
                    State::new(l * c - l * tau * s - half * tau * tau, l * s + tau)
                } else {
                    State::new(
                        l * (c - tau * s) + t * t + half * tau * tau + two * tau * t,
                        l * s - two * t - tau,
                    )
                }
            } else if before_switch {
                State::new(l * c - tau * l * s + half * tau * tau, l * s - tau)
            } else {
                State::new(l * c - t * t - half * tau * tau - (l * s + two * t) * tau, l * s + two * t + tau)
            }
        }
        (Manifold::Square, BoundaryPoint::SquareSide { side, s }) => match side {
            Side::AB => State::new(-one - s * tau + half * tau * tau, s - tau),
            Side::BC => State::new(s + tau + half * tau * tau, -one - tau),
            Side::CD => State::new(one - s * tau - half * tau * tau, s + tau),
            Side::AD => State::new(s - tau - half * tau * tau, one + tau),
        },
        (Manifold::Square, BoundaryPoint::SquareCorner { corner, theta }) => {
            let t = theta.tan();
            match (corner, before_switch) {
                (Corner::A, true) => State::new(-one - tau - half * tau * tau, one + tau),
                (Corner::A, false) => {
                    State::new(-one - tau + two * tau * t + half * tau * tau + t * t, one - two * t - tau)
                }
                (Corner::C, true) => State::new(one + tau + half * tau * tau, -one - tau),
                (Corner::C, false) => {
                    State::new(one + tau - two * tau * t - half * tau * tau - t * t, -one + two * t + tau)
                }
            }
        }
        _ => return Err(domain(format!("boundary point {b} does not belong to the manifold"))),
    })
}

#[derive(Clone, Copy)]
struct Augmented<T> {
    x1: T,
    x2: T,
    l1: T,
    l2: T,
}

impl<T: Scalar> Augmented<T> {
    fn axpy(&self, h: T, d: &Augmented<T>) -> Self {
        Augmented {
            x1: self.x1 + h * d.x1,
            x2: self.x2 + h * d.x2,
            l1: self.l1 + h * d.l1,
            l2: self.l2 + h * d.l2,
        }
    }
}

/// Integrates the retrograde state-costate system with classical RK4.
///
/// The step is split exactly at the switch time, and on each side the sign of
/// `lambda2` is frozen at its interior value, so the discontinuous right-hand
/// side is never straddled.
pub fn numeric_retro<T: Scalar>(
    m: &Manifold<T>,
    b: &BoundaryPoint<T>,
    params: &Params<T>,
    tau: T,
    step: T,
) -> Result<(State<T>, Costate<T>)> {
    if !(step > T::zero()) {
        return Err(domain(format!("step must be positive, got {step}")));
    }
    if !(tau >= T::zero()) {
        return Err(domain(format!("retrograde time must be non-negative, got {tau}")));
    }
    let c0 = terminal_costate(m, b, params)?;
    let s0 = m.boundary_state(b)?;
    let alpha = params.alpha();
    let mut y = Augmented { x1: s0.x1, x2: s0.x2, l1: c0.lambda1, l2: c0.lambda2 };

    let mut cuts = vec![T::zero()];
    if let Some(ts) = switch_tau(b) {
        if ts > T::zero() && ts < tau {
            cuts.push(ts);
        }
    }
    cuts.push(tau);

    for w in cuts.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let len = tb - ta;
        if len <= T::zero() {
            continue;
        }
        let sigma = interior_sign(&c0, ta, tb);
        let rhs = |z: &Augmented<T>| Augmented { x1: -z.x2, x2: alpha * sigma, l1: T::zero(), l2: z.l1 };
        let n = (len / step).ceil().to_usize().unwrap_or(1).max(1);
        let h = len / T::lit(n as f64);
        let half = T::lit(0.5);
        let sixth = T::one() / T::lit(6.0);
        let two = T::lit(2.0);
        for _ in 0..n {
            let k1 = rhs(&y);
            let k2 = rhs(&y.axpy(half * h, &k1));
            let k3 = rhs(&y.axpy(half * h, &k2));
            let k4 = rhs(&y.axpy(h, &k3));
            y = Augmented {
                x1: y.x1 + h * sixth * (k1.x1 + two * k2.x1 + two * k3.x1 + k4.x1),
                x2: y.x2 + h * sixth * (k1.x2 + two * k2.x2 + two * k3.x2 + k4.x2),
                l1: y.l1 + h * sixth * (k1.l1 + two * k2.l1 + two * k3.l1 + k4.l1),
                l2: y.l2 + h * sixth * (k1.l2 + two * k2.l2 + two * k3.l2 + k4.l2),
            };
        }
    }
    Ok((State::new(y.x1, y.x2), Costate::new(y.l1, y.l2)))
}

/// One row of a characteristic fan export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample<T> {
    pub anchor: BoundaryPoint<T>,
    pub tau: T,
    pub state: State<T>,
    pub costate: Costate<T>,
    pub control: Control<T>,
}

/// Samples the characteristics of the given anchors on a retrograde-time grid.
/// The control column is the arc control at each sample (left limit at a switch).
pub fn flow_field<T: Scalar>(
    m: &Manifold<T>,
    params: &Params<T>,
    anchors: &[BoundaryPoint<T>],
    taus: &[T],
) -> Result<Vec<FlowSample<T>>> {
    let mut out = Vec::with_capacity(anchors.len() * taus.len());
    for b in anchors {
        let ch = characteristic(m, b, params)?;
        for &tau in taus {
            let arc = ch.arc_at(tau);
            let c = ch.terminal_costate;
            out.push(FlowSample {
                anchor: *b,
                tau,
                state: arc.state_at(tau),
                costate: Costate::new(c.lambda1, c.lambda2 + c.lambda1 * tau),
                control: arc.control,
            });
        }
    }
    Ok(out)
}

/// Dense anchors covering every UP interval, `per_interval` each, strictly
/// inside open ends and on closed ends.
pub fn up_anchors<T: Scalar>(
    m: &Manifold<T>,
    params: &Params<T>,
    per_interval: usize,
) -> Vec<BoundaryPoint<T>> {
    use crate::manifold::Segment;
    let n = per_interval.max(1);
    let mut out = Vec::new();
    for iv in m.up_intervals(params) {
        for k in 0..n {
            let frac = if n == 1 {
                T::lit(0.5)
            } else {
                match (iv.lo_closed, iv.hi_closed) {
                    (true, true) => T::lit(k as f64 / (n - 1) as f64),
                    (true, false) => T::lit(k as f64 / n as f64),
                    (false, true) => T::lit((k + 1) as f64 / n as f64),
                    (false, false) => T::lit((k as f64 + 0.5) / n as f64),
                }
            };
            let p = iv.lo + (iv.hi - iv.lo) * frac;
            let b = match iv.segment {
                Segment::Circle => Some(BoundaryPoint::CircleTheta(p)),
                Segment::Side(side) => BoundaryPoint::square_side(side, p).ok(),
                Segment::Corner(corner) => Some(BoundaryPoint::SquareCorner { corner, theta: p }),
            };
            if let Some(b) = b {
                if terminal_costate(m, &b, params).is_ok() {
                    out.push(b);
                }
            }
        }
    }
    out
}
