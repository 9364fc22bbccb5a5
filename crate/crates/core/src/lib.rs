//! Set-based state estimation with Gaussian-process-learned models.
//!
//! The crate provides:
//!
//! - [`zonogeom`]: exact and conservative set arithmetic on intervals, boxes,
//!   zonotopes, and strips;
//! - [`gpcore`]: squared-exponential-ARD Gaussian-process regression with
//!   analytic mean Jacobians and calibrated confidence-interval scalings;
//! - [`uncertainty`]: high-probability noise and error boxes consumed by the
//!   filters;
//! - [`filters`]: the GP-ZKF zonotopic estimator and the GP-EKF stochastic
//!   baseline behind one estimator interface;
//! - [`pendulum`]: the simulated LQR-controlled inverted-pendulum benchmark;
//! - [`harness`]: configuration, experiment orchestration, metrics, and
//!   report emission.
//!
//! All core math is generic over the scalar type through the [`Scalar`]
//! trait; concrete `f64`/`f32` aliases live at the crate root.

pub mod error;
pub mod filters;
pub mod gpcore;
pub mod harness;
pub mod pendulum;
pub mod scalar;
pub mod uncertainty;
pub mod zonogeom;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` zonotope, the default for the filters and the harness.
pub type Zonotope64 = zonogeom::Zonotope<f64>;
/// `f32` zonotope.
pub type Zonotope32 = zonogeom::Zonotope<f32>;
/// `f64` axis-aligned box.
pub type BoxSet64 = zonogeom::BoxSet<f64>;
/// `f32` axis-aligned box.
pub type BoxSet32 = zonogeom::BoxSet<f32>;
/// `f64` strip.
pub type Strip64 = zonogeom::Strip<f64>;
/// `f64` interval.
pub type Interval64 = zonogeom::Interval<f64>;
/// `f64` Gaussian-process model.
pub type GpModel64 = gpcore::GpModel<f64>;

