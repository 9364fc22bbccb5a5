//! Exact and conservative set arithmetic on intervals, boxes, zonotopes,
//! and strips — the geometric substrate of every filter phase.
//!
//! All types are immutable values; every operation is a pure function, so
//! the module is freely usable from concurrent code.

mod boxset;
mod interval;
mod lp;
mod strip;
mod zonotope;

pub use boxset::BoxSet;
pub use interval::Interval;
pub use strip::Strip;
pub use zonotope::{StripIntersection, Zonotope};

/// Slack applied to the containment LP optimum so that boundary points are
/// not rejected by floating-point round-off.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// Jitter added to a singular strip-intersection normal matrix.
pub const GAIN_JITTER: f64 = 1e-9;
