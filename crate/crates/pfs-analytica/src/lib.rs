//! Throughput models for proportional fair scheduling (PFS) in
//! interference-limited OFDMA downlinks.
//!
//! The crate contains three layers:
//!
//! * analytic models of the scheduled-SINR distribution and the per-terminal
//!   rates under PFS, for both per-RB and worst-RB-uniform modulation and
//!   coding ([`pfs_analytic`], [`uniform_mcs`]),
//! * reference predictors from the literature for comparison ([`ref_models`]),
//! * a TTI-level Monte-Carlo simulator used as the validation oracle
//!   ([`simulator`]).
//!
//! The numeric core is generic over the scalar type via the [`Real`] trait;
//! concrete `f64` aliases are exported at the crate root. The simulator and
//! the scenario/config layer are `f64` only.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

pub mod error;
pub mod mcs;
pub mod numerics;
pub mod pfs_analytic;
pub mod ref_models;
pub mod report;
pub mod scenario;
pub mod simulator;
pub mod sinr_dist;
pub mod uniform_mcs;

pub mod cli;

pub use error::{Error, Result};

/// Scalar type the analytic core is generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Shorthand for lossy conversion of an `f64` constant.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// `f64` SINR distribution of a single link.
pub type SinrDist64 = sinr_dist::SinrDist<f64>;
/// `f64` quadrature configuration.
pub type QuadratureSpec64 = numerics::QuadratureSpec<f64>;
/// `f64` spectral-efficiency map.
pub type SpectralEfficiency64 = mcs::SpectralEfficiency<f64>;
/// `f64` per-RB scheduled-SINR model over a set of terminals.
pub type ScheduledSinrModel64 = pfs_analytic::ScheduledSinrModel<f64, SinrDist64>;
