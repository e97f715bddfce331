//! Terminal manifolds (circle of radius `l`, unit square `ABCD`), their outward
//! normals and the usable-part classification.
//!
//! Square labelling: `A = (-1, 1)`, `B = (-1, -1)`, `C = (1, -1)`, `D = (1, 1)`.
//! Side parameters follow the terminal-state parametrization used by the
//! trajectory families: `AB: x = (-1, s)`, `BC: x = (s, -1)`, `CD: x = (1, s)`,
//! `AD: x = (s, 1)`, each restricted to the portion from which optimal
//! trajectories terminate.

use std::fmt;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{Params, State};
use crate::scalar::Scalar;

/// Band on `min_u <n, f>` inside which a boundary point counts as BUP.
pub const BUP_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn bup_tol<T: Scalar>() -> T {
    T::lit(BUP_TOL).max(T::epsilon() * T::lit(16.0))
}

/// Wraps an angle into `[0, 2*pi)`.
pub fn wrap_angle<T: Scalar>(theta: T) -> T {
    let tau = T::two_pi();
    let mut t = theta % tau;
    if t < T::zero() {
        t = t + tau;
    }
    if t >= tau {
        t = T::zero();
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manifold<T> {
    Circle {
        l: T,
    },
    /// The fixed set `|x1| <= 1, |x2| <= 1`.
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    AB,
    BC,
    CD,
    AD,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::AB, Side::BC, Side::CD, Side::AD];

    pub fn name(self) -> &'static str {
        match self {
            Side::AB => "AB",
            Side::BC => "BC",
            Side::CD => "CD",
            Side::AD => "AD",
        }
    }

    /// Parameter range `(lo, lo_closed, hi, hi_closed)` of the terminating portion.
    pub fn range<T: Scalar>(self) -> (T, bool, T, bool) {
        let (one, zero) = (T::one(), T::zero());
        match self {
            Side::AB => (zero, false, one, true),
            Side::BC => (-one, false, one, true),
            Side::CD => (-one, true, zero, false),
            Side::AD => (-one, true, one, false),
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::AB => Side::CD,
            Side::BC => Side::AD,
            Side::CD => Side::AB,
            Side::AD => Side::BC,
        }
    }
}

/// Vertices that carry a cone of terminal normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Corner {
    A,
    C,
}

impl Corner {
    pub fn name(self) -> &'static str {
        match self {
            Corner::A => "A",
            Corner::C => "C",
        }
    }

    /// Closed cone-angle interval.
    pub fn cone<T: Scalar>(self) -> (T, T) {
        let pi = T::PI();
        let half = T::FRAC_PI_2();
        match self {
            Corner::A => (half, pi),
            Corner::C => (pi + half, T::two_pi()),
        }
    }

    pub fn vertex<T: Scalar>(self) -> State<T> {
        match self {
            Corner::A => State::new(-T::one(), T::one()),
            Corner::C => State::new(T::one(), -T::one()),
        }
    }

    pub fn opposite(self) -> Corner {
        match self {
            Corner::A => Corner::C,
            Corner::C => Corner::A,
        }
    }
}

/// Any of the four square vertices; only `A` and `C` can anchor trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    A,
    B,
    C,
    D,
}

impl Vertex {
    pub fn state<T: Scalar>(self) -> State<T> {
        let one = T::one();
        match self {
            Vertex::A => State::new(-one, one),
            Vertex::B => State::new(-one, -one),
            Vertex::C => State::new(one, -one),
            Vertex::D => State::new(one, one),
        }
    }

    /// Outward normals of the two sides meeting at the vertex.
    fn edge_normals<T: Scalar>(self) -> [Normal<T>; 2] {
        let (one, zero) = (T::one(), T::zero());
        let left = Normal { n1: -one, n2: zero };
        let down = Normal { n1: zero, n2: -one };
        let right = Normal { n1: one, n2: zero };
        let up = Normal { n1: zero, n2: one };
        match self {
            Vertex::A => [left, up],
            Vertex::B => [left, down],
            Vertex::C => [down, right],
            Vertex::D => [right, up],
        }
    }
}

impl std::str::FromStr for Vertex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Vertex::A),
            "B" => Ok(Vertex::B),
            "C" => Ok(Vertex::C),
            "D" => Ok(Vertex::D),
            other => Err(domain(format!("unknown vertex '{other}'"))),
        }
    }
}

/// Point on a terminal manifold together with its parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint<T> {
    /// Circle angle in `[0, 2*pi)`.
    CircleTheta(T),
    SquareSide {
        side: Side,
        s: T,
    },
    /// Square vertex `A` or `C` with a normal-cone angle.
    SquareCorner {
        corner: Corner,
        theta: T,
    },
}

impl<T: Scalar> BoundaryPoint<T> {
    pub fn circle(theta: T) -> Self {
        BoundaryPoint::CircleTheta(wrap_angle(theta))
    }

    pub fn square_side(side: Side, s: T) -> Result<Self> {
        let (lo, lo_closed, hi, hi_closed) = side.range::<T>();
        let ok_lo = if lo_closed { s >= lo } else { s > lo };
        let ok_hi = if hi_closed { s <= hi } else { s < hi };
        if !(ok_lo && ok_hi) {
            return Err(domain(format!("side parameter {s} outside the range of {}", side.name())));
        }
        Ok(BoundaryPoint::SquareSide { side, s })
    }

    /// Cone anchor at a vertex; `B` and `D` are rejected.
    pub fn corner_cone(vertex: Vertex, theta: T) -> Result<Self> {
        let corner = match vertex {
            Vertex::A => Corner::A,
            Vertex::C => Corner::C,
            Vertex::B | Vertex::D => {
                return Err(domain(format!("vertex {vertex:?} carries no terminal cone")))
            }
        };
        let (lo, hi) = corner.cone::<T>();
        if !(theta >= lo && theta <= hi) {
            return Err(domain(format!(
                "cone angle {theta} outside [{lo}, {hi}] at corner {}",
                corner.name()
            )));
        }
        Ok(BoundaryPoint::SquareCorner { corner, theta })
    }

    /// Image under the central map `x -> -x`.
    pub fn antipode(&self) -> Self {
        match *self {
            BoundaryPoint::CircleTheta(theta) => BoundaryPoint::circle(theta + T::PI()),
            BoundaryPoint::SquareSide { side, s } => {
                BoundaryPoint::SquareSide { side: side.opposite(), s: -s }
            }
            BoundaryPoint::SquareCorner { corner, theta } => BoundaryPoint::SquareCorner {
                corner: corner.opposite(),
                theta: match corner {
                    Corner::A => theta + T::PI(),
                    Corner::C => theta - T::PI(),
                },
            },
        }
    }

    /// Label used in CSV output.
    pub fn kind(&self) -> &'static str {
        match self {
            BoundaryPoint::CircleTheta(_) => "circle",
            BoundaryPoint::SquareSide { side, .. } => side.name(),
            BoundaryPoint::SquareCorner { corner, .. } => corner.name(),
        }
    }

    /// Scalar parameter (angle, side coordinate or cone angle).
    pub fn param(&self) -> T {
        match *self {
            BoundaryPoint::CircleTheta(t) => t,
            BoundaryPoint::SquareSide { s, .. } => s,
            BoundaryPoint::SquareCorner { theta, .. } => theta,
        }
    }

    /// Angle of the terminal normal, where one is attached to the parameter.
    pub fn normal_angle(&self) -> Option<T> {
        match *self {
            BoundaryPoint::CircleTheta(t) => Some(t),
            BoundaryPoint::SquareCorner { theta, .. } => Some(theta),
            BoundaryPoint::SquareSide { .. } => None,
        }
    }
}

impl<T: Scalar> fmt::Display for BoundaryPoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::CircleTheta(t) => write!(f, "circle(theta={t})"),
            BoundaryPoint::SquareSide { side, s } => write!(f, "{}(s={s})", side.name()),
            BoundaryPoint::SquareCorner { corner, theta } => {
                write!(f, "{}(theta={theta})", corner.name())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionClass {
    /// Usable part: penetration can be enforced.
    #[serde(rename = "UP")]
    Up,
    /// Boundary of the usable part.
    #[serde(rename = "BUP")]
    Bup,
    /// Non-usable part.
    #[serde(rename = "NUP")]
    Nup,
}

impl RegionClass {
    fn from_rate<T: Scalar>(rate: T) -> Self {
        if rate.abs() <= bup_tol() {
            RegionClass::Bup
        } else if rate < T::zero() {
            RegionClass::Up
        } else {
            RegionClass::Nup
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionClass::Up => "UP",
            RegionClass::Bup => "BUP",
            RegionClass::Nup => "NUP",
        }
    }
}

impl fmt::Display for RegionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal<T> {
    pub n1: T,
    pub n2: T,
}

impl<T: Scalar> Normal<T> {
    pub fn from_angle(theta: T) -> Self {
        Normal { n1: theta.cos(), n2: theta.sin() }
    }

    /// `min over |u| <= 1 of <n, (x2, alpha*u)>`.
    pub fn min_rate(&self, s: &State<T>, alpha: T) -> T {
        self.n1 * s.x2 - alpha * self.n2.abs()
    }
}

/// Which boundary parameter an interval refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Segment {
    Circle,
    Side(Side),
    Corner(Corner),
}

impl Segment {
    pub fn name(self) -> &'static str {
        match self {
            Segment::Circle => "circle",
            Segment::Side(s) => s.name(),
            Segment::Corner(c) => c.name(),
        }
    }
}

/// Interval of a boundary parameter with open/closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamInterval<T> {
    pub segment: Segment,
    pub lo: T,
    pub lo_closed: bool,
    pub hi: T,
    pub hi_closed: bool,
}

impl<T: Scalar> ParamInterval<T> {
    pub fn contains(&self, p: T) -> bool {
        let ok_lo = if self.lo_closed { p >= self.lo } else { p > self.lo };
        let ok_hi = if self.hi_closed { p <= self.hi } else { p < self.hi };
        ok_lo && ok_hi
    }

    pub fn contains_point(&self, b: &BoundaryPoint<T>) -> bool {
        let seg = match b {
            BoundaryPoint::CircleTheta(_) => Segment::Circle,
            BoundaryPoint::SquareSide { side, .. } => Segment::Side(*side),
            BoundaryPoint::SquareCorner { corner, .. } => Segment::Corner(*corner),
        };
        seg == self.segment && self.contains(b.param())
    }
}

/// One row of a boundary sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample<T> {
    pub kind: &'static str,
    pub param: T,
    pub state: State<T>,
    pub normal: Normal<T>,
    pub class: RegionClass,
}

impl<T: Scalar> Manifold<T> {
    pub fn circle(l: T) -> Result<Self> {
        if !(l.is_finite() && l > T::zero()) {
            return Err(domain(format!("circle radius must be positive, got {l}")));
        }
        Ok(Manifold::Circle { l })
    }

    pub fn square() -> Self {
        Manifold::Square
    }

    /// Circle of radius `params.l()` or the unit square.
    pub fn for_target(kind: crate::model::TargetKind, params: &Params<T>) -> Self {
        match kind {
            crate::model::TargetKind::Circle => Manifold::Circle { l: params.l() },
            crate::model::TargetKind::Square => Manifold::Square,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Manifold::Circle { .. } => "circle",
            Manifold::Square => "square",
        }
    }

    fn mismatch(&self, b: &BoundaryPoint<T>) -> Error {
        domain(format!("boundary point {b} does not belong to the {} manifold", self.name()))
    }

    pub fn boundary_state(&self, b: &BoundaryPoint<T>) -> Result<State<T>> {
        let one = T::one();
        match (self, *b) {
            (Manifold::Circle { l }, BoundaryPoint::CircleTheta(theta)) => {
                Ok(State::new(*l * theta.cos(), *l * theta.sin()))
            }
            (Manifold::Square, BoundaryPoint::SquareSide { side, s }) => Ok(match side {
                Side::AB => State::new(-one, s),
                Side::BC => State::new(s, -one),
                Side::CD => State::new(one, s),
                Side::AD => State::new(s, one),
            }),
            (Manifold::Square, BoundaryPoint::SquareCorner { corner, .. }) => Ok(corner.vertex()),
            _ => Err(self.mismatch(b)),
        }
    }

    pub fn outward_normal(&self, b: &BoundaryPoint<T>) -> Result<Normal<T>> {
        let (one, zero) = (T::one(), T::zero());
        match (self, *b) {
            (Manifold::Circle { .. }, BoundaryPoint::CircleTheta(theta)) => Ok(Normal::from_angle(theta)),
            (Manifold::Square, BoundaryPoint::SquareSide { side, .. }) => Ok(match side {
                Side::AB => Normal { n1: -one, n2: zero },
                Side::BC => Normal { n1: zero, n2: -one },
                Side::CD => Normal { n1: one, n2: zero },
                Side::AD => Normal { n1: zero, n2: one },
            }),
            (Manifold::Square, BoundaryPoint::SquareCorner { theta, .. }) => Ok(Normal::from_angle(theta)),
            _ => Err(self.mismatch(b)),
        }
    }

    /// `min_u <n, f(x, u)>` at the boundary point.
    pub fn penetration_rate(&self, b: &BoundaryPoint<T>, params: &Params<T>) -> Result<T> {
        let s = self.boundary_state(b)?;
        let n = self.outward_normal(b)?;
        Ok(n.min_rate(&s, params.alpha()))
    }

    pub fn classify(&self, b: &BoundaryPoint<T>, params: &Params<T>) -> Result<RegionClass> {
        Ok(RegionClass::from_rate(self.penetration_rate(b, params)?))
    }

    /// Boundary-parameter intervals making up the usable part.
    pub fn up_intervals(&self, params: &Params<T>) -> Vec<ParamInterval<T>> {
        let pi = T::PI();
        match self {
            Manifold::Circle { l } => {
                let theta_bar = circle_theta_bar(*l, params.alpha()).unwrap_or(T::zero());
                let open = |lo: T, hi: T| ParamInterval {
                    segment: Segment::Circle,
                    lo,
                    lo_closed: false,
                    hi,
                    hi_closed: false,
                };
                vec![open(theta_bar, pi), open(pi + theta_bar, T::two_pi())]
            }
            Manifold::Square => {
                let mut out: Vec<ParamInterval<T>> = Side::ALL
                    .iter()
                    .map(|&side| {
                        let (lo, lo_closed, hi, hi_closed) = side.range::<T>();
                        ParamInterval { segment: Segment::Side(side), lo, lo_closed, hi, hi_closed }
                    })
                    .collect();
                for corner in [Corner::A, Corner::C] {
                    let (lo, hi) = corner.cone::<T>();
                    out.push(ParamInterval {
                        segment: Segment::Corner(corner),
                        lo,
                        lo_closed: true,
                        hi,
                        hi_closed: true,
                    });
                }
                out
            }
        }
    }

    /// Closed-set membership; the boundary counts as contained.
    pub fn contains(&self, s: &State<T>) -> bool {
        match self {
            Manifold::Circle { l } => s.x1 * s.x1 + s.x2 * s.x2 <= *l * *l,
            Manifold::Square => s.x1.abs() <= T::one() && s.x2.abs() <= T::one(),
        }
    }

    /// `r - l` for the circle, `max(|x1|, |x2|) - 1` for the square.
    pub fn signed_distance(&self, s: &State<T>) -> T {
        match self {
            Manifold::Circle { l } => s.norm() - *l,
            Manifold::Square => s.x1.abs().max(s.x2.abs()) - T::one(),
        }
    }

    /// Classification of an arbitrary state lying on the manifold. Square
    /// vertices require penetration for every normal of their cone, which
    /// places `A` and `C` in the UP and `B` and `D` in the NUP.
    pub fn classify_state(&self, s: &State<T>, params: &Params<T>) -> RegionClass {
        let alpha = params.alpha();
        match self {
            Manifold::Circle { .. } => {
                let theta = s.x2.atan2(s.x1);
                RegionClass::from_rate(Normal::from_angle(theta).min_rate(s, alpha))
            }
            Manifold::Square => {
                let one = T::one();
                let eps = bup_tol::<T>();
                let on_x = (s.x1.abs() - one).abs() <= eps;
                let on_y = (s.x2.abs() - one).abs() <= eps;
                if on_x && on_y {
                    let v = match (s.x1 < T::zero(), s.x2 < T::zero()) {
                        (true, false) => Vertex::A,
                        (true, true) => Vertex::B,
                        (false, true) => Vertex::C,
                        (false, false) => Vertex::D,
                    };
                    RegionClass::from_rate(vertex_rate(v, alpha))
                } else {
                    let n = if on_x {
                        Normal { n1: s.x1.signum(), n2: T::zero() }
                    } else {
                        Normal { n1: T::zero(), n2: s.x2.signum() }
                    };
                    RegionClass::from_rate(n.min_rate(s, alpha))
                }
            }
        }
    }

    /// Terminal boundary point for a state on the manifold, when it can anchor
    /// a characteristic. Corners map to the cone angle bisecting the cone.
    pub fn locate(&self, s: &State<T>) -> Option<BoundaryPoint<T>> {
        match self {
            Manifold::Circle { .. } => Some(BoundaryPoint::circle(s.x2.atan2(s.x1))),
            Manifold::Square => {
                let one = T::one();
                let eps = T::lit(1e-9);
                let on_left = (s.x1 + one).abs() <= eps;
                let on_right = (s.x1 - one).abs() <= eps;
                let on_top = (s.x2 - one).abs() <= eps;
                let on_bottom = (s.x2 + one).abs() <= eps;
                let q = T::FRAC_PI_4();
                if on_left && on_top {
                    BoundaryPoint::corner_cone(Vertex::A, T::PI() - q).ok()
                } else if on_right && on_bottom {
                    BoundaryPoint::corner_cone(Vertex::C, T::two_pi() - q).ok()
                } else if on_left {
                    BoundaryPoint::square_side(Side::AB, s.x2).ok()
                } else if on_right {
                    BoundaryPoint::square_side(Side::CD, s.x2).ok()
                } else if on_bottom {
                    BoundaryPoint::square_side(Side::BC, s.x1).ok()
                } else if on_top {
                    BoundaryPoint::square_side(Side::AD, s.x1).ok()
                } else {
                    None
                }
            }
        }
    }

    /// Sweep of the whole manifold. The circle is sampled at `n` uniform angles
    /// plus every BUP angle; each square side at `n + 1` points including the
    /// vertices.
    pub fn sample_boundary(&self, params: &Params<T>, n: usize) -> Vec<BoundarySample<T>> {
        let n = n.max(1);
        match self {
            Manifold::Circle { l } => {
                let mut thetas: Vec<T> =
                    (0..n).map(|k| T::two_pi() * T::lit(k as f64) / T::lit(n as f64)).collect();
                thetas.extend(circle_bup_angles(*l, params.alpha()));
                thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
                thetas.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-12));
                thetas
                    .into_iter()
                    .map(|theta| {
                        let b = BoundaryPoint::CircleTheta(theta);
                        let state = self.boundary_state(&b).expect("circle point");
                        let normal = Normal::from_angle(theta);
                        BoundarySample {
                            kind: "circle",
                            param: theta,
                            state,
                            normal,
                            class: RegionClass::from_rate(normal.min_rate(&state, params.alpha())),
                        }
                    })
                    .collect()
            }
            Manifold::Square => {
                let one = T::one();
                let mut out = Vec::with_capacity(4 * (n + 1));
                for side in Side::ALL {
                    for k in 0..=n {
                        let p = -one + T::lit(2.0 * k as f64 / n as f64);
                        let (state, normal) = match side {
                            Side::AB => (State::new(-one, p), Normal { n1: -one, n2: T::zero() }),
                            Side::BC => (State::new(p, -one), Normal { n1: T::zero(), n2: -one }),
                            Side::CD => (State::new(one, p), Normal { n1: one, n2: T::zero() }),
                            Side::AD => (State::new(p, one), Normal { n1: T::zero(), n2: one }),
                        };
                        out.push(BoundarySample {
                            kind: side.name(),
                            param: p,
                            state,
                            normal,
                            class: self.classify_state(&state, params),
                        });
                    }
                }
                out
            }
        }
    }
}

/// `theta_bar = acos(alpha / l)` when the circle has a non-usable part (`l > alpha`).
pub fn circle_theta_bar<T: Scalar>(l: T, alpha: T) -> Option<T> {
    if l > alpha {
        Some((alpha / l).acos())
    } else {
        None
    }
}

/// BUP angles of the circle in increasing order.
pub fn circle_bup_angles<T: Scalar>(l: T, alpha: T) -> Vec<T> {
    let pi = T::PI();
    match circle_theta_bar(l, alpha) {
        Some(tb) => vec![T::zero(), tb, pi, pi + tb],
        None => vec![T::zero(), pi],
    }
}

/// `min_u max_{n in cone} <n, f(vertex, u)>`; the cone is spanned by the two
/// adjacent side normals, so the inner max is attained at an edge normal.
fn vertex_rate<T: Scalar>(v: Vertex, alpha: T) -> T {
    let s = v.state::<T>();
    let [na, nb] = v.edge_normals::<T>();
    // <n, f> = n1*x2 + n2*alpha*u, affine in u.
    let g = |n: &Normal<T>, u: T| n.n1 * s.x2 + n.n2 * alpha * u;
    let worst = |u: T| g(&na, u).max(g(&nb, u));
    let mut best = worst(-T::one()).min(worst(T::one()));
    let slope = (na.n2 - nb.n2) * alpha;
    if slope != T::zero() {
        let u = (nb.n1 - na.n1) * s.x2 / slope;
        if u.abs() <= T::one() {
            best = best.min(worst(u));
        }
    }
    best
}
