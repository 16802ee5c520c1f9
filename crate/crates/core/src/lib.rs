//! Phase-space model of a Gaussian-modulated CV-QKD link whose heterodyne
//! receiver measures the P quadrature through a slightly mis-set phase
//! shifter.
//!
//! The receiver splits the incoming mode on a balanced beam splitter and
//! homodynes X on one output and P on the other; the P branch is rotated by
//! an angular error `theta` relative to the ideal 90 degree setting. The
//! crate models both descriptions of this system:
//!
//! - the entanglement-based picture, where covariance matrices are pushed
//!   through beam-splitter and phase-shift symplectics ([`protocol`],
//!   [`gaussian`]) and secret key rates are computed from symplectic spectra
//!   ([`keyrate`]);
//! - the prepare-and-measure picture, simulated pulse-by-pulse by Monte
//!   Carlo ([`simulator`]), from which channel parameters and the angular
//!   error itself are estimated and compensated ([`estimation`]).
//!
//! All quadrature variances are in shot-noise units (vacuum variance = 1)
//! and all rates in bits per pulse.

pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod keyrate;
pub mod protocol;
pub mod simulator;
pub mod tol;

pub use error::{Error, Result};
pub use gaussian::{CovarianceMatrix, Quadrature, SymplecticTransform};
pub use keyrate::{KeyRateReport, KeyRateRoute};
pub use protocol::{ChannelSpec, LinkParams};
pub use simulator::QuadratureBatch;
