//! Joint IRS beamforming and resource allocation for full-duplex THz links.
//!
//! The crate synthesizes line-of-sight THz channels with molecular absorption,
//! evaluates uplink/downlink rates per sub-band (exact quadrature and flat
//! approximations), and maximizes the weighted minimum rate over IRS phase
//! shifts, transmit powers, sub-band bandwidths, and sub-band assignment.
//! Two solvers are provided (equal and adaptive sub-band bandwidth) together
//! with the comparison schemes and a reproducible sweep harness.

pub mod absorption;
pub mod asb;
pub mod audit;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod convex;
pub mod esb;
pub mod oracle;
pub mod quad;
pub mod rate;
pub mod report;
pub mod scenario;
pub mod sweep;

mod error;

pub use absorption::{AbsorptionFit, AbsorptionModel};
pub use channel::{AngleSet, CascadeChannel, Geometry, IrsConfig};
pub use error::Error;
pub use rate::{Allocation, NoiseRef, RateMode, RateOptions, SubbandPlan};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
