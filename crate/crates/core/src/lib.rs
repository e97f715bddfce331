//! Time-optimal state-feedback synthesis for the double integrator
//! `x1' = x2, x2' = alpha*u, |u| <= 1`, driven to a circular or square
//! tolerance set.
//!
//! The closed-form layers ([`model`], [`manifold`], [`characteristics`]) are
//! generic over [`Scalar`] (`f32` or `f64`). The synthesis, level-set,
//! simulation and verification layers work in `f64`; the aliases below name
//! the `f64` instantiations used there.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod error;
pub mod isochrone;
pub mod manifold;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod simulator;
pub mod synthesis;

pub use error::{Error, Result};
pub use manifold::{Corner, RegionClass, Segment, Side, Vertex};
pub use model::TargetKind;
pub use scalar::Scalar;

pub type Params = model::Params<f64>;
pub type State = model::State<f64>;
pub type Control = model::Control<f64>;
pub type Manifold = manifold::Manifold<f64>;
pub type BoundaryPoint = manifold::BoundaryPoint<f64>;
pub type Normal = manifold::Normal<f64>;
pub type Costate = characteristics::Costate<f64>;
pub type CharacteristicArc = characteristics::CharacteristicArc<f64>;
pub type Characteristic = characteristics::Characteristic<f64>;

pub type Params32 = model::Params<f32>;
pub type State32 = model::State<f32>;
